"""The holding-register map of the dehumidifier PLC.

Ten registers at protocol addresses 4000..4009 carry the test register and
the nine sensor readings; two extension registers follow: 4010 packs the six
fault flags into a bitfield, 4011 carries the run status.

Encoding conventions:
  - temperatures and humidities: signed fixed point, engineering value x 100
    (0.01 resolution, two decimals);
  - pressure: unsigned whole pascals;
  - test register, alarms, status: raw unsigned 16-bit.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, asdict

DEG_C = "°C"
PCT_RH = "%RH"
PASCAL = "Pa"
RAW = ""

ALARMS_ADDRESS = 4010
STATUS_ADDRESS = 4011


class RegisterModelError(Exception):
    pass


class NotFound(RegisterModelError):
    """No register matches the given code, label, or address."""


class RangeOverflow(RegisterModelError):
    """Scaled value does not fit the register's 16-bit range."""


class UnitMismatch(RegisterModelError):
    """Engineering value's unit differs from the register's unit."""


class ReservedBitsSet(RegisterModelError):
    """Alarm word has bits set outside the six defined fault bits."""


@dataclass(frozen=True)
class RegisterEntry:
    code: str
    plc_label: str
    description: str
    protocol_address: int
    unit: str
    scale: int
    signed: bool
    writable: bool


@dataclass(frozen=True)
class EngineeringValue:
    magnitude: float
    unit: str


def _temp(code, label, description, address):
    return RegisterEntry(code, label, description, address, DEG_C, 100, True, False)


def _humidity(code, label, description, address):
    return RegisterEntry(code, label, description, address, PCT_RH, 100, True, False)


# Table order matters: a block read of 4000..4011 returns values in this order.
ENTRIES: tuple[RegisterEntry, ...] = (
    RegisterEntry("MB_4000", "A0", "Test register", 4000, RAW, 1, False, True),
    _temp("MB_4001", "SRT", "Reactive outlet temperature", 4001),
    _temp("MB_4002", "PA", "Reactive post-heating temperature", 4002),
    _temp("MB_4003", "ST1", "Process input temperature", 4003),
    _humidity("MB_4004", "SU1", "Moisture Intake Process", 4004),
    _temp("MB_4005", "ST2", "Process output temperature", 4005),
    _humidity("MB_4006", "SU2", "Process output humidity", 4006),
    _temp("MB_4007", "PRE", "Pre-cooling temperature", 4007),
    _temp("MB_4008", "POS", "Post-cooling temperature", 4008),
    RegisterEntry("MB_4009", "PST1", "Pressure Sensor", 4009, PASCAL, 1, False, False),
    RegisterEntry("MB_4010", "ALARMS", "Active fault flags", ALARMS_ADDRESS, RAW, 1, False, False),
    RegisterEntry("MB_4011", "STATUS", "Run status", STATUS_ADDRESS, RAW, 1, False, False),
)

FIRST_ADDRESS = ENTRIES[0].protocol_address
LAST_ADDRESS = ENTRIES[-1].protocol_address
REGISTER_COUNT = len(ENTRIES)

_BY_CODE = {e.code: e for e in ENTRIES}
_BY_LABEL = {e.plc_label: e for e in ENTRIES}
_BY_ADDRESS = {e.protocol_address: e for e in ENTRIES}


def lookup(key: str | int) -> RegisterEntry:
    """Find a register by symbolic code, PLC label, or protocol address."""
    if isinstance(key, int):
        entry = _BY_ADDRESS.get(key)
    else:
        entry = _BY_CODE.get(key) or _BY_LABEL.get(key)
    if entry is None:
        raise NotFound(f"no register for {key!r}")
    return entry


def to_register(value: EngineeringValue, entry: RegisterEntry) -> int:
    """Scale an engineering value into the register's 16-bit representation."""
    if value.unit != entry.unit:
        raise UnitMismatch(f"{entry.code} carries {entry.unit!r}, got {value.unit!r}")
    raw = round(value.magnitude * entry.scale)
    if entry.signed:
        if not -0x8000 <= raw <= 0x7FFF:
            raise RangeOverflow(f"{value.magnitude} {value.unit} overflows {entry.code}")
        return raw & 0xFFFF
    if not 0 <= raw <= 0xFFFF:
        raise RangeOverflow(f"{value.magnitude} {value.unit} overflows {entry.code}")
    return raw


def from_register(raw: int, entry: RegisterEntry) -> EngineeringValue:
    """Decode a 16-bit register value back to engineering units."""
    if entry.signed and raw >= 0x8000:
        raw -= 0x10000
    return EngineeringValue(magnitude=raw / entry.scale, unit=entry.unit)


# -- Alarm and status words --------------------------------------------------


class Fault(enum.Enum):
    """The six injectable faults, each owning one bit of the alarm word."""

    EMERGENCY = 0
    SAFETY_THERMOSTAT = 1
    MOTOR_OVERLOAD = 2
    REACT_SENSOR = 3
    POST_HEATER = 4
    DIFF_PRESSURE = 5

    @property
    def bit(self) -> int:
        return 1 << self.value

    @property
    def key(self) -> str:
        return self.name.lower()


FAULT_BY_KEY = {f.key: f for f in Fault}

_ALL_FAULT_BITS = sum(f.bit for f in Fault)


class Status(enum.IntEnum):
    RUNNING = 0
    SHUTDOWN = 1


def pack_alarms(faults) -> int:
    """Pack a set of Fault members into the alarm word."""
    word = 0
    for fault in faults:
        word |= Fault(fault).bit
    return word


def unpack_alarms(word: int) -> frozenset[Fault]:
    """Unpack an alarm word; reserved bits must be zero."""
    if word & ~_ALL_FAULT_BITS:
        raise ReservedBitsSet(f"alarm word {word:#06x} has reserved bits set")
    return frozenset(f for f in Fault if word & f.bit)


# -- Machine-readable export -------------------------------------------------


def registers_json() -> str:
    """The map as JSON, consumed by the dashboard for labels and units."""
    return json.dumps([asdict(e) for e in ENTRIES], ensure_ascii=False, indent=2)
