"""Dehumidifier and PLC stand-in.

A continuous-state simulation of the machine's ten sensor readings plus the
six injectable faults, and a Modbus RTU slave responder exposing everything
as holding registers 4000..4011.

Dynamics are deliberately simple: every potentiometer-driven sensor relaxes
first-order toward its target with a 5 s time constant, the process output
humidity tracks the intake humidity reduced by the drying efficiency, and the
process output temperature follows the input temperature.  Faults latch on
key press and force an immediate shutdown; they clear only via an explicit
reset while no key is held.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from . import modbus, registers
from .modbus import (
    ExceptionCode,
    ExceptionResponse,
    Pdu,
    ReadHoldingRequest,
    ReadHoldingResponse,
    WriteSingleRequest,
    WriteSingleResponse,
)
from .registers import (
    EngineeringValue,
    Fault,
    Status,
    lookup,
    pack_alarms,
    to_register,
)

TAU_SECONDS = 5.0

# Sensor labels settable from the bench potentiometers.
POT_LABELS = ("ST1", "SU1", "SRT", "PA", "PRE", "POS", "PST1")


class PlantError(Exception):
    pass


class KeysStillActive(PlantError):
    """Faults cannot be cleared while a fault key is held down."""


@dataclass(frozen=True)
class BenchInputs:
    """The bench's keys and potentiometers, plus the drying efficiency."""

    keys: frozenset[Fault] = frozenset()
    targets: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_TARGETS)
    )
    dry_efficiency: float = 0.4

    def __post_init__(self):
        if not 0.0 <= self.dry_efficiency <= 1.0:
            raise ValueError(f"dry_efficiency {self.dry_efficiency} not in [0,1]")
        for label, target in self.targets.items():
            entry = lookup(label)
            # Raises RangeOverflow if the target cannot be encoded.
            to_register(EngineeringValue(target, entry.unit), entry)


DEFAULT_TARGETS = {
    "ST1": 40.0,
    "SU1": 40.0,
    "SRT": 40.0,
    "PA": 40.0,
    "PRE": 40.0,
    "POS": 40.0,
    "PST1": 500.0,
}


@dataclass(frozen=True)
class PlantState:
    srt: float = 40.0
    pa: float = 40.0
    st1: float = 40.0
    su1: float = 40.0
    st2: float = 40.0
    su2: float = 40.0
    pre: float = 40.0
    pos: float = 40.0
    pst1: float = 500.0
    a0: int = 0
    faults: frozenset[Fault] = frozenset()
    status: Status = Status.RUNNING
    sim_clock: float = 0.0


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    inputs: BenchInputs
    initial_faults: frozenset[Fault] = frozenset()
    note: str = ""


def _relax(current: float, target: float, alpha: float) -> float:
    return current + (target - current) * alpha


def evaluate_airflow_fault(state: PlantState, key_pressed: bool) -> bool:
    """Whether the differential-pressure (airflow) fault latches this step.

    The airflow fault is only meaningful with the machine running: once the
    equipment is already shut down there is no airflow to lose, so the key
    cannot newly latch it.  A previously latched fault persists regardless.
    """
    return key_pressed and state.status == Status.RUNNING


def step(state: PlantState, inputs: BenchInputs, dt: float) -> PlantState:
    """Advance the simulation by dt seconds.  Pure; returns the new state."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")

    alpha = 1.0 - math.exp(-dt / TAU_SECONDS)
    targets = inputs.targets

    new_faults = set(state.faults)
    for fault in inputs.keys:
        if fault is Fault.DIFF_PRESSURE:
            if evaluate_airflow_fault(state, True):
                new_faults.add(fault)
        else:
            new_faults.add(fault)
    status = Status.SHUTDOWN if new_faults else Status.RUNNING

    srt = _relax(state.srt, targets.get("SRT", state.srt), alpha)
    pa = _relax(state.pa, targets.get("PA", state.pa), alpha)
    st1 = _relax(state.st1, targets.get("ST1", state.st1), alpha)
    su1 = _clamp_rh(_relax(state.su1, targets.get("SU1", state.su1), alpha))
    pre = _relax(state.pre, targets.get("PRE", state.pre), alpha)
    pos = _relax(state.pos, targets.get("POS", state.pos), alpha)
    pst1 = _relax(state.pst1, targets.get("PST1", state.pst1), alpha)

    # Drying only happens while running; on shutdown the outlet air drifts
    # back to the intake condition.
    efficiency = inputs.dry_efficiency if status == Status.RUNNING else 0.0
    su2 = _clamp_rh(_relax(state.su2, su1 * (1.0 - efficiency), alpha))
    st2 = _relax(state.st2, st1, alpha)

    return replace(
        state,
        srt=srt, pa=pa, st1=st1, su1=su1, st2=st2, su2=su2,
        pre=pre, pos=pos, pst1=pst1,
        faults=frozenset(new_faults),
        status=status,
        sim_clock=state.sim_clock + dt,
    )


def _clamp_rh(value: float) -> float:
    return min(100.0, max(0.0, value))


def clear_faults(state: PlantState, inputs: BenchInputs) -> PlantState:
    """Operator reset: drop all latched faults and return to RUNNING."""
    if inputs.keys:
        held = ", ".join(sorted(f.key for f in inputs.keys))
        raise KeysStillActive(f"keys still pressed: {held}")
    if not state.faults:
        return state
    return replace(state, faults=frozenset(), status=Status.RUNNING)


def apply_preset(state: PlantState, preset: ScenarioPreset) -> PlantState:
    """Jump the plant into a preset's steady state.

    Sensors start at their potentiometer targets (the bench is assumed to
    have been running in this condition), so readings match the preset
    immediately instead of after a multi-tau settling transient.
    """
    targets = preset.inputs.targets
    faults = frozenset(preset.initial_faults)
    su1 = _clamp_rh(targets.get("SU1", DEFAULT_TARGETS["SU1"]))
    running = not faults
    efficiency = preset.inputs.dry_efficiency if running else 0.0
    st1 = targets.get("ST1", DEFAULT_TARGETS["ST1"])
    return replace(
        state,
        srt=targets.get("SRT", DEFAULT_TARGETS["SRT"]),
        pa=targets.get("PA", DEFAULT_TARGETS["PA"]),
        st1=st1,
        su1=su1,
        st2=st1,
        su2=_clamp_rh(su1 * (1.0 - efficiency)),
        pre=targets.get("PRE", DEFAULT_TARGETS["PRE"]),
        pos=targets.get("POS", DEFAULT_TARGETS["POS"]),
        pst1=targets.get("PST1", DEFAULT_TARGETS["PST1"]),
        faults=faults,
        status=Status.RUNNING if running else Status.SHUTDOWN,
    )


# -- Register image and slave responder ---------------------------------------

_SENSOR_FIELDS = {
    4001: "srt", 4002: "pa", 4003: "st1", 4004: "su1", 4005: "st2",
    4006: "su2", 4007: "pre", 4008: "pos", 4009: "pst1",
}


def register_image(state: PlantState) -> list[int]:
    """Encode the full state as the 12 register values at 4000..4011."""
    image = [state.a0 & 0xFFFF]
    for address in range(4001, 4010):
        entry = lookup(address)
        value = EngineeringValue(getattr(state, _SENSOR_FIELDS[address]), entry.unit)
        image.append(to_register(value, entry))
    image.append(pack_alarms(state.faults))
    image.append(int(state.status))
    return image


def slave_respond(state: PlantState, request: Pdu) -> tuple[Pdu, PlantState]:
    """Answer one Modbus request against the current state.

    Returns the response PDU and the (possibly updated) state; only a write
    to the test register 4000 changes state.  Address violations come back
    as Modbus exception PDUs, never as transport errors.
    """
    if isinstance(request, ReadHoldingRequest):
        first, last = request.start, request.start + request.quantity - 1
        if first < registers.FIRST_ADDRESS or last > registers.LAST_ADDRESS:
            return (
                ExceptionResponse(modbus.FC_READ_HOLDING, ExceptionCode.ILLEGAL_DATA_ADDRESS),
                state,
            )
        image = register_image(state)
        offset = first - registers.FIRST_ADDRESS
        return ReadHoldingResponse(image[offset : offset + request.quantity]), state

    if isinstance(request, WriteSingleRequest):
        if request.address != 4000:
            return (
                ExceptionResponse(modbus.FC_WRITE_SINGLE, ExceptionCode.ILLEGAL_DATA_ADDRESS),
                state,
            )
        new_state = replace(state, a0=request.value)
        return WriteSingleResponse(request.address, request.value), new_state

    if isinstance(request, modbus.WriteMultipleRequest):
        # Only the single writable register exists; a multi-write is always
        # an address violation unless it targets exactly 4000.
        if request.start == 4000 and len(request.values) == 1:
            new_state = replace(state, a0=request.values[0])
            return modbus.WriteMultipleResponse(4000, 1), new_state
        return (
            ExceptionResponse(modbus.FC_WRITE_MULTIPLE, ExceptionCode.ILLEGAL_DATA_ADDRESS),
            state,
        )

    return ExceptionResponse(modbus.FC_READ_HOLDING, ExceptionCode.ILLEGAL_FUNCTION), state


class Plant:
    """Single-owner wrapper: one driver thread advances the simulation.

    External actors queue commands (handled by the bench between ticks) and
    read immutable state snapshots; the RTU responder is served through
    `respond_rtu`, which ignores frames addressed to other slaves just like a
    device on a shared RS485 bus would.
    """

    def __init__(self, unit_id: int = 1,
                 inputs: BenchInputs | None = None,
                 state: PlantState | None = None):
        self.unit_id = unit_id
        self.inputs = inputs if inputs is not None else BenchInputs()
        self.state = state if state is not None else PlantState()
        self.nonce: int | None = None  # test hook: overrides all registers

    def tick(self, dt: float) -> PlantState:
        self.state = step(self.state, self.inputs, dt)
        return self.state

    def press_key(self, fault: Fault, pressed: bool) -> None:
        keys = set(self.inputs.keys)
        if pressed:
            keys.add(fault)
        else:
            keys.discard(fault)
        self.inputs = replace(self.inputs, keys=frozenset(keys))

    def set_target(self, label: str, value: float) -> None:
        label = label.upper()
        if label not in POT_LABELS:
            raise PlantError(f"no potentiometer for {label!r}")
        targets = dict(self.inputs.targets)
        targets[label] = value
        self.inputs = replace(self.inputs, targets=targets)

    def reset_faults(self) -> None:
        self.state = clear_faults(self.state, self.inputs)

    def load_preset(self, preset: ScenarioPreset) -> None:
        self.inputs = preset.inputs
        self.state = apply_preset(self.state, preset)

    def respond_rtu(self, frame_bytes: bytes) -> bytes | None:
        """Handle one raw RTU frame; None means silence (bad CRC or not us)."""
        try:
            frame = modbus.decode_rtu(frame_bytes, "request")
        except modbus.ModbusCodecError:
            return None
        if frame.unit_id != self.unit_id:
            return None
        if self.nonce is not None:
            response, _ = slave_respond(self.state, frame.pdu)
            if isinstance(response, ReadHoldingResponse):
                response = ReadHoldingResponse([self.nonce] * len(response.values))
        else:
            response, self.state = slave_respond(self.state, frame.pdu)
        return modbus.encode_rtu(modbus.RtuFrame(self.unit_id, response))
