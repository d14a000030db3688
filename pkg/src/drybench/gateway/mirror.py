"""The gateway's last-known consistent copy of the slave's registers.

Snapshots are immutable and replaced wholesale, so any reader always sees
the values of exactly one completed poll cycle; there is no per-register
locking and no torn state.  Staleness is part of the snapshot's public
surface, never hidden.
"""

from __future__ import annotations

from dataclasses import dataclass

from .. import registers
from ..registers import EngineeringValue, Fault, Status, from_register, lookup, unpack_alarms


@dataclass(frozen=True)
class MirrorSnapshot:
    registers: tuple[int, ...]
    last_update_ms: float
    cycle: int
    poll_failures_since_update: int = 0

    @property
    def engineering(self) -> dict[str, EngineeringValue]:
        """Decoded view keyed by PLC label, for the sensor registers only."""
        out = {}
        for entry, raw in zip(registers.ENTRIES, self.registers):
            if entry.unit != registers.RAW:
                out[entry.plc_label] = from_register(raw, entry)
        return out

    @property
    def alarms(self) -> frozenset[Fault]:
        word = self.registers[registers.ALARMS_ADDRESS - registers.FIRST_ADDRESS]
        return unpack_alarms(word)

    @property
    def status(self) -> Status:
        return Status(self.registers[registers.STATUS_ADDRESS - registers.FIRST_ADDRESS])

    def value(self, key: str | int) -> int:
        entry = lookup(key)
        return self.registers[entry.protocol_address - registers.FIRST_ADDRESS]

    def staleness_ms(self, now_ms: float) -> float:
        return now_ms - self.last_update_ms


class Mirror:
    """Atomic holder for the current snapshot.

    Replacement and read are single reference assignments, so readers are
    wait-free; `version` increments on every committed poll cycle.
    """

    def __init__(self):
        self._snapshot: MirrorSnapshot | None = None
        self.version = 0
        self.poll_failures_since_update = 0

    def commit(self, register_values, now_ms: float) -> MirrorSnapshot:
        values = tuple(register_values)
        if len(values) != registers.REGISTER_COUNT:
            raise ValueError(f"snapshot needs {registers.REGISTER_COUNT} registers")
        self.poll_failures_since_update = 0
        snapshot = MirrorSnapshot(
            registers=values,
            last_update_ms=now_ms,
            cycle=self.version + 1,
        )
        self._snapshot = snapshot
        self.version += 1
        return snapshot

    def record_failure(self) -> None:
        self.poll_failures_since_update += 1

    @property
    def snapshot(self) -> MirrorSnapshot | None:
        return self._snapshot
