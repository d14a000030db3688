"""Gateway: RTU master polling the plant, register mirror, Modbus TCP server,
and the authenticated monitoring bridge."""

from .mirror import Mirror, MirrorSnapshot
from .poller import PollConfig, PollResult, Poller

__all__ = ["Mirror", "MirrorSnapshot", "PollConfig", "PollResult", "Poller"]
