"""Noisy virtual serial segment between the plant slave and the gateway.

Models the RS485 run as a full-duplex pair of message channels.  Each frame
is independently dropped with `drop_rate`, and each surviving bit flips with
`bit_error_rate`; delivery is delayed by a fixed one-way latency.  Whole
frames travel as discrete messages (no inter-frame timing emulation) and
order is preserved per direction.

Impairment is deterministic: the same seed and traffic sequence produce
byte-identical decisions, which the soak tests rely on.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

M2S = "master_to_slave"
S2M = "slave_to_master"


@dataclass(frozen=True)
class LinkConfig:
    bit_error_rate: float = 0.0
    drop_rate: float = 0.0
    delay_ms: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.bit_error_rate < 1.0:
            raise ValueError(f"bit_error_rate {self.bit_error_rate} not in [0,1)")
        if not 0.0 <= self.drop_rate <= 1.0:
            raise ValueError(f"drop_rate {self.drop_rate} not in [0,1]")
        if self.delay_ms < 0:
            raise ValueError("delay_ms must be non-negative")


@dataclass
class LinkStats:
    frames_sent: int = 0
    frames_delivered: int = 0
    frames_dropped: int = 0
    frames_corrupted: int = 0
    bits_flipped: int = 0
    bits_sent: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class Delivered:
    data: bytes


@dataclass(frozen=True)
class Dropped:
    pass


class VirtualLink:
    """Full-duplex impaired channel; one producer and one consumer per side.

    `transmit` applies the impairment decision immediately and queues the
    surviving bytes; `receive` hands out frames whose delivery time has
    passed.  Callers that do not model latency can use `send`, which returns
    the impairment outcome directly.
    """

    def __init__(self, config: LinkConfig):
        self.config = config
        self.stats = LinkStats()
        # Independent RNG per direction so traffic on one side does not
        # perturb the other side's impairment sequence.
        self._rng = {
            M2S: np.random.default_rng(np.random.SeedSequence(config.seed).spawn(2)[0]),
            S2M: np.random.default_rng(np.random.SeedSequence(config.seed).spawn(2)[1]),
        }
        self._queues: dict[str, deque] = {M2S: deque(), S2M: deque()}

    def send(self, data: bytes, direction: str = M2S) -> Delivered | Dropped:
        """Run one frame through the impairment model and return the outcome."""
        rng = self._rng[direction]
        stats = self.stats
        stats.frames_sent += 1
        if self.config.drop_rate and rng.random() < self.config.drop_rate:
            stats.frames_dropped += 1
            return Dropped()
        nbits = len(data) * 8
        stats.bits_sent += nbits
        ber = self.config.bit_error_rate
        if ber and nbits:
            flips = np.flatnonzero(rng.random(nbits) < ber)
            if flips.size:
                stats.bits_flipped += int(flips.size)
                stats.frames_corrupted += 1
                buf = bytearray(data)
                for bit in flips:
                    buf[bit >> 3] ^= 1 << (bit & 7)
                data = bytes(buf)
        stats.frames_delivered += 1
        return Delivered(data)

    def transmit(self, data: bytes, direction: str, now_ms: float) -> None:
        """Queue a frame for delayed delivery on the given direction."""
        outcome = self.send(data, direction)
        if isinstance(outcome, Delivered):
            self._queues[direction].append((now_ms + self.config.delay_ms, outcome.data))

    def receive(self, direction: str, now_ms: float) -> bytes | None:
        """Pop the next frame whose delivery time has arrived, if any."""
        queue = self._queues[direction]
        if queue and queue[0][0] <= now_ms:
            return queue.popleft()[1]
        return None
