"""Bench configuration: TOML config file and JSON scenario presets.

A documented sample config ships as package data (`data/bench.toml`) along
with the scenario presets (`data/presets.json`) reproducing the three
demonstrated bench conditions: fig4a (ideal), fig4b (fault keys pressed),
fig4c (live measurement values).
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .gateway.poller import PollConfig
from .link import LinkConfig
from .plant import BenchInputs, DEFAULT_TARGETS, ScenarioPreset
from .registers import FAULT_BY_KEY


class ConfigInvalid(Exception):
    """Config file missing or malformed; message carries the detail."""


@dataclass(frozen=True)
class BridgeConfig:
    listen: str = "127.0.0.1"
    port: int = 8502
    session_ttl_s: float = 8 * 3600
    # name -> (salt_hex, pbkdf2_sha256_hash_hex)
    users: dict[str, tuple[str, str]] = field(default_factory=dict)


@dataclass(frozen=True)
class BenchConfig:
    link: LinkConfig = LinkConfig()
    poll: PollConfig = PollConfig()
    tcp_listen: str = "0.0.0.0"
    tcp_port: int = 502  # conventional Modbus TCP port; tests use 1502+
    bridge: BridgeConfig = BridgeConfig()
    tick_ms: float = 100.0
    time_scale: float = 1.0
    preset_file: str | None = None


def _section(data: dict, name: str) -> dict:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigInvalid(f"[{name}] must be a table")
    return value


def load_config(path: str | Path) -> BenchConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigInvalid(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from None
    return parse_config(data)


def parse_config(data: dict) -> BenchConfig:
    try:
        link = LinkConfig(
            bit_error_rate=_section(data, "link").get("bit_error_rate", 0.0),
            drop_rate=_section(data, "link").get("drop_rate", 0.0),
            delay_ms=_section(data, "link").get("delay_ms", 0.0),
            seed=_section(data, "link").get("seed", 0),
        )
        poll_tbl = _section(data, "poll")
        poll = PollConfig(
            poll_period_ms=poll_tbl.get("period_ms", 500.0),
            response_timeout_ms=poll_tbl.get("response_timeout_ms", 200.0),
            max_retries=poll_tbl.get("max_retries", 2),
            unit_id=poll_tbl.get("unit_id", 1),
        )
        tcp = _section(data, "modbus_tcp")
        bridge_tbl = _section(data, "bridge")
        users = {}
        for user in data.get("users", []):
            users[user["name"]] = (user["salt"], user["password_hash"])
        bridge = BridgeConfig(
            listen=bridge_tbl.get("listen", "127.0.0.1"),
            port=bridge_tbl.get("port", 8502),
            session_ttl_s=float(bridge_tbl.get("session_ttl_hours", 8)) * 3600,
            users=users,
        )
        sim = _section(data, "sim")
        return BenchConfig(
            link=link,
            poll=poll,
            tcp_listen=tcp.get("listen", "0.0.0.0"),
            tcp_port=tcp.get("port", 502),
            bridge=bridge,
            tick_ms=sim.get("tick_ms", 100.0),
            time_scale=sim.get("time_scale", 1.0),
            preset_file=sim.get("preset_file") or None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(str(exc)) from None


def default_config_text() -> str:
    return resources.files("drybench.data").joinpath("bench.toml").read_text()


# -- Presets -----------------------------------------------------------------


def _parse_preset(obj: dict) -> ScenarioPreset:
    keys = frozenset(FAULT_BY_KEY[k] for k in obj.get("keys", []))
    targets = dict(DEFAULT_TARGETS)
    targets.update({k.upper(): float(v) for k, v in obj.get("targets", {}).items()})
    inputs = BenchInputs(
        keys=keys,
        targets=targets,
        dry_efficiency=obj.get("dry_efficiency", 0.4),
    )
    return ScenarioPreset(
        name=obj["name"],
        inputs=inputs,
        initial_faults=frozenset(FAULT_BY_KEY[k] for k in obj.get("initial_faults", [])),
        note=obj.get("note", ""),
    )


def load_presets(path: str | Path | None = None) -> dict[str, ScenarioPreset]:
    if path is None:
        raw = resources.files("drybench.data").joinpath("presets.json").read_text()
    else:
        raw = Path(path).read_text()
    presets = {}
    for obj in json.loads(raw):
        preset = _parse_preset(obj)
        if preset.name in presets:
            raise ConfigInvalid(f"duplicate preset name {preset.name!r}")
        presets[preset.name] = preset
    return presets
