"""Register map: Table lookups, scaling in both directions, alarm packing."""

import itertools
import json

import pytest
from hypothesis import given, strategies as st

from drybench import registers
from drybench.registers import (
    EngineeringValue,
    Fault,
    NotFound,
    RangeOverflow,
    ReservedBitsSet,
    Status,
    UnitMismatch,
    from_register,
    lookup,
    pack_alarms,
    registers_json,
    to_register,
    unpack_alarms,
)

EXPECTED_ROWS = [
    ("MB_4000", "A0", "Test register"),
    ("MB_4001", "SRT", "Reactive outlet temperature"),
    ("MB_4002", "PA", "Reactive post-heating temperature"),
    ("MB_4003", "ST1", "Process input temperature"),
    ("MB_4004", "SU1", "Moisture Intake Process"),
    ("MB_4005", "ST2", "Process output temperature"),
    ("MB_4006", "SU2", "Process output humidity"),
    ("MB_4007", "PRE", "Pre-cooling temperature"),
    ("MB_4008", "POS", "Post-cooling temperature"),
    ("MB_4009", "PST1", "Pressure Sensor"),
]


def test_map_completeness():
    assert len(registers.ENTRIES) == 12
    for (code, label, description), entry in zip(EXPECTED_ROWS, registers.ENTRIES):
        assert entry.code == code
        assert entry.plc_label == label
        assert entry.description == description
    assert registers.ENTRIES[10].plc_label == "ALARMS"
    assert registers.ENTRIES[11].plc_label == "STATUS"


def test_addresses_contiguous_and_unique():
    addresses = [e.protocol_address for e in registers.ENTRIES]
    assert addresses == list(range(4000, 4012))


def test_only_test_register_writable():
    assert [e.code for e in registers.ENTRIES if e.writable] == ["MB_4000"]


def test_lookup_by_label():
    entry = lookup("ST1")
    assert entry.code == "MB_4003"
    assert entry.protocol_address == 4003
    assert entry.unit == registers.DEG_C
    assert entry.description == "Process input temperature"


def test_lookup_by_address():
    entry = lookup(4009)
    assert entry.code == "MB_4009"
    assert entry.plc_label == "PST1"
    assert entry.description == "Pressure Sensor"


def test_lookup_agrees_across_keys():
    for entry in registers.ENTRIES:
        assert lookup(entry.code) is entry
        assert lookup(entry.plc_label) is entry
        assert lookup(entry.protocol_address) is entry


def test_lookup_not_found():
    with pytest.raises(NotFound):
        lookup(9000)
    with pytest.raises(NotFound):
        lookup("MB_9999")


def test_temperature_scaling():
    st1 = lookup("ST1")
    assert to_register(EngineeringValue(54.50, registers.DEG_C), st1) == 5450


def test_humidity_scaling():
    su1 = lookup("SU1")
    assert to_register(EngineeringValue(51.90, registers.PCT_RH), su1) == 5190


def test_zero():
    assert to_register(EngineeringValue(0.0, registers.DEG_C), lookup("ST1")) == 0


def test_range_overflow():
    with pytest.raises(RangeOverflow):
        to_register(EngineeringValue(-400.0, registers.DEG_C), lookup("ST1"))
    with pytest.raises(RangeOverflow):
        to_register(EngineeringValue(70000.0, registers.PASCAL), lookup("PST1"))


def test_unit_mismatch():
    with pytest.raises(UnitMismatch):
        to_register(EngineeringValue(10.0, registers.PASCAL), lookup("ST1"))


def test_from_register_reference_values():
    assert from_register(5450, lookup("ST1")).magnitude == pytest.approx(54.50)
    assert from_register(5190, lookup("SU1")).magnitude == pytest.approx(51.90)


def test_from_register_twos_complement():
    assert from_register(0xFFFF, lookup("ST1")).magnitude == pytest.approx(-0.01)


@given(st.integers(-32768, 32767))
def test_scaling_roundtrip_on_hundredths_grid(raw):
    # Every representable 0.01-grid value survives the encode/decode pair.
    entry = lookup("ST1")
    magnitude = raw / 100
    assert to_register(EngineeringValue(magnitude, entry.unit), entry) == raw & 0xFFFF
    decoded = from_register(raw & 0xFFFF, entry)
    assert decoded.magnitude == pytest.approx(magnitude)


@given(st.integers(0, 0xFFFF))
def test_unsigned_roundtrip(raw):
    entry = lookup("PST1")
    decoded = from_register(raw, entry)
    assert to_register(decoded, entry) == raw


# -- Alarms ------------------------------------------------------------------


def brute_force_alarm_table():
    """Independent oracle: every subset of faults mapped to its word by
    direct bit arithmetic over the documented assignment."""
    bit_of = {
        Fault.EMERGENCY: 0x01,
        Fault.SAFETY_THERMOSTAT: 0x02,
        Fault.MOTOR_OVERLOAD: 0x04,
        Fault.REACT_SENSOR: 0x08,
        Fault.POST_HEATER: 0x10,
        Fault.DIFF_PRESSURE: 0x20,
    }
    table = {}
    for combo_bits in itertools.product([False, True], repeat=6):
        combo = frozenset(f for f, on in zip(Fault, combo_bits) if on)
        table[combo] = sum(bit_of[f] for f in combo)
    return table


def test_no_alarms_is_zero():
    assert pack_alarms([]) == 0x0000


def test_emergency_plus_motor_overload():
    assert pack_alarms([Fault.EMERGENCY, Fault.MOTOR_OVERLOAD]) == 0x0005


def test_all_64_combinations_roundtrip_against_oracle():
    table = brute_force_alarm_table()
    assert len(table) == 64
    for combo, word in table.items():
        assert pack_alarms(combo) == word
        assert unpack_alarms(word) == combo


def test_reserved_bits_rejected():
    with pytest.raises(ReservedBitsSet):
        unpack_alarms(0x0040)
    with pytest.raises(ReservedBitsSet):
        unpack_alarms(0x8000)


def test_status_values():
    assert Status.RUNNING == 0
    assert Status.SHUTDOWN == 1
    assert sorted(Status) == [Status.RUNNING, Status.SHUTDOWN]


def test_registers_json_covers_all_fields():
    data = json.loads(registers_json())
    assert len(data) == 12
    assert data[3]["plc_label"] == "ST1"
    assert data[3]["unit"] == registers.DEG_C
    assert set(data[0]) == {
        "code", "plc_label", "description", "protocol_address",
        "unit", "scale", "signed", "writable",
    }
