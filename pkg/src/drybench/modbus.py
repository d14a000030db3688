"""Modbus codec: CRC-16, PDU encode/decode, RTU framing, MBAP (TCP) framing.

Everything here is a pure function over bytes.  Supported function codes are
0x03 (read holding registers), 0x06 (write single register) and 0x10 (write
multiple registers), plus the exception form (function | 0x80) of each.

Wire layouts, all multi-byte fields big-endian:

    RTU  frame:  [unit] [pdu...] [crc_lo] [crc_hi]
    MBAP frame:  [tid_hi] [tid_lo] [0x00] [0x00] [len_hi] [len_lo] [unit] [pdu...]

The MBAP length field counts the unit byte plus the PDU bytes.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

FC_READ_HOLDING = 0x03
FC_WRITE_SINGLE = 0x06
FC_WRITE_MULTIPLE = 0x10

SUPPORTED_FUNCTIONS = (FC_READ_HOLDING, FC_WRITE_SINGLE, FC_WRITE_MULTIPLE)

MAX_READ_QUANTITY = 125


class ModbusCodecError(Exception):
    """Base class for codec failures."""


class InvalidPdu(ModbusCodecError):
    """PDU violates its own invariants (bad quantity, value out of range)."""


class UnknownFunction(ModbusCodecError):
    """Function code outside the supported set."""


class TruncatedPdu(ModbusCodecError):
    """PDU bytes end before the declared structure does."""


class ByteCountMismatch(ModbusCodecError):
    """A 0x03 response whose byte-count field disagrees with the payload."""


class CrcMismatch(ModbusCodecError):
    """RTU checksum failed; the frame must be discarded."""


class TooShort(ModbusCodecError):
    """RTU frame shorter than the 4-byte minimum."""


class BadProtocolId(ModbusCodecError):
    """MBAP protocol identifier is not zero."""


class LengthMismatch(ModbusCodecError):
    """MBAP length field disagrees with the actual payload."""


class TruncatedHeader(ModbusCodecError):
    """MBAP frame shorter than its 7-byte header."""


class ExceptionCode(enum.IntEnum):
    ILLEGAL_FUNCTION = 0x01
    ILLEGAL_DATA_ADDRESS = 0x02
    ILLEGAL_DATA_VALUE = 0x03
    SLAVE_DEVICE_FAILURE = 0x04


# -- PDU variants ------------------------------------------------------------


@dataclass(frozen=True)
class ReadHoldingRequest:
    start: int
    quantity: int


@dataclass(frozen=True)
class ReadHoldingResponse:
    values: tuple[int, ...]

    def __init__(self, values):
        object.__setattr__(self, "values", tuple(values))


@dataclass(frozen=True)
class WriteSingleRequest:
    address: int
    value: int


@dataclass(frozen=True)
class WriteSingleResponse:
    address: int
    value: int


@dataclass(frozen=True)
class WriteMultipleRequest:
    start: int
    values: tuple[int, ...]

    def __init__(self, start, values):
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "values", tuple(values))


@dataclass(frozen=True)
class WriteMultipleResponse:
    start: int
    quantity: int


@dataclass(frozen=True)
class ExceptionResponse:
    function: int
    code: ExceptionCode


Pdu = (
    ReadHoldingRequest
    | ReadHoldingResponse
    | WriteSingleRequest
    | WriteSingleResponse
    | WriteMultipleRequest
    | WriteMultipleResponse
    | ExceptionResponse
)


@dataclass(frozen=True)
class RtuFrame:
    unit_id: int
    pdu: Pdu


@dataclass(frozen=True)
class MbapFrame:
    transaction_id: int
    unit_id: int
    pdu: Pdu


# -- CRC-16 ------------------------------------------------------------------


def _build_crc_table() -> tuple[int, ...]:
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            if crc & 1:
                crc = (crc >> 1) ^ 0xA001
            else:
                crc >>= 1
        table.append(crc)
    return tuple(table)


_CRC_TABLE = _build_crc_table()


def crc16(data: bytes) -> int:
    """Modbus CRC-16: reflected polynomial 0xA001, init 0xFFFF, no final XOR.

    Returns the checksum as an int; on the RTU wire it travels low byte first.
    """
    crc = 0xFFFF
    for byte in data:
        crc = (crc >> 8) ^ _CRC_TABLE[(crc ^ byte) & 0xFF]
    return crc


# -- PDU codec ---------------------------------------------------------------


def _check_u16(value: int, what: str) -> None:
    if not 0 <= value <= 0xFFFF:
        raise InvalidPdu(f"{what} out of 16-bit range: {value}")


def encode_pdu(pdu: Pdu) -> bytes:
    """Serialize a PDU to its canonical big-endian byte form."""
    if isinstance(pdu, ReadHoldingRequest):
        if not 1 <= pdu.quantity <= MAX_READ_QUANTITY:
            raise InvalidPdu(f"read quantity {pdu.quantity} not in [1,{MAX_READ_QUANTITY}]")
        _check_u16(pdu.start, "start address")
        return struct.pack(">BHH", FC_READ_HOLDING, pdu.start, pdu.quantity)
    if isinstance(pdu, ReadHoldingResponse):
        if not 1 <= len(pdu.values) <= MAX_READ_QUANTITY:
            raise InvalidPdu(f"response carries {len(pdu.values)} values")
        for v in pdu.values:
            _check_u16(v, "register value")
        payload = struct.pack(f">{len(pdu.values)}H", *pdu.values)
        return struct.pack(">BB", FC_READ_HOLDING, len(payload)) + payload
    if isinstance(pdu, WriteSingleRequest):
        _check_u16(pdu.address, "address")
        _check_u16(pdu.value, "value")
        return struct.pack(">BHH", FC_WRITE_SINGLE, pdu.address, pdu.value)
    if isinstance(pdu, WriteSingleResponse):
        _check_u16(pdu.address, "address")
        _check_u16(pdu.value, "value")
        return struct.pack(">BHH", FC_WRITE_SINGLE, pdu.address, pdu.value)
    if isinstance(pdu, WriteMultipleRequest):
        if not 1 <= len(pdu.values) <= 123:
            raise InvalidPdu(f"write-multiple carries {len(pdu.values)} values")
        _check_u16(pdu.start, "start address")
        for v in pdu.values:
            _check_u16(v, "register value")
        payload = struct.pack(f">{len(pdu.values)}H", *pdu.values)
        return (
            struct.pack(">BHHB", FC_WRITE_MULTIPLE, pdu.start, len(pdu.values), len(payload))
            + payload
        )
    if isinstance(pdu, WriteMultipleResponse):
        _check_u16(pdu.start, "start address")
        if not 1 <= pdu.quantity <= 123:
            raise InvalidPdu(f"write-multiple quantity {pdu.quantity}")
        return struct.pack(">BHH", FC_WRITE_MULTIPLE, pdu.start, pdu.quantity)
    if isinstance(pdu, ExceptionResponse):
        if pdu.function not in SUPPORTED_FUNCTIONS:
            raise InvalidPdu(f"exception for unsupported function {pdu.function:#04x}")
        return struct.pack(">BB", pdu.function | 0x80, int(pdu.code))
    raise InvalidPdu(f"not a PDU: {pdu!r}")


def _need(data: bytes, n: int) -> None:
    if len(data) < n:
        raise TruncatedPdu(f"need {n} bytes, have {len(data)}")


def decode_pdu(data: bytes, direction: str) -> Pdu:
    """Parse PDU bytes.

    ``direction`` is ``"request"`` or ``"response"``; function code 0x03 (and
    0x10) have different layouts on each side of the transaction.
    """
    if direction not in ("request", "response"):
        raise ValueError(f"direction must be 'request' or 'response', got {direction!r}")
    _need(data, 1)
    function = data[0]

    if function & 0x80:
        if direction != "response":
            raise UnknownFunction("exception PDUs only occur in responses")
        base = function & 0x7F
        if base not in SUPPORTED_FUNCTIONS:
            raise UnknownFunction(f"exception for unknown function {base:#04x}")
        _need(data, 2)
        if len(data) != 2:
            raise TruncatedPdu("exception PDU must be exactly 2 bytes")
        try:
            code = ExceptionCode(data[1])
        except ValueError:
            raise InvalidPdu(f"unknown exception code {data[1]:#04x}") from None
        return ExceptionResponse(function=base, code=code)

    if function == FC_READ_HOLDING:
        if direction == "request":
            if len(data) < 5:
                raise TruncatedPdu("read request must be 5 bytes")
            if len(data) != 5:
                _trailing()
            start, quantity = struct.unpack(">HH", data[1:5])
            if not 1 <= quantity <= MAX_READ_QUANTITY:
                raise InvalidPdu(f"read quantity {quantity} not in [1,{MAX_READ_QUANTITY}]")
            return ReadHoldingRequest(start=start, quantity=quantity)
        _need(data, 2)
        byte_count = data[1]
        if byte_count != len(data) - 2:
            raise ByteCountMismatch(
                f"byte count {byte_count} but payload is {len(data) - 2} bytes"
            )
        if byte_count == 0 or byte_count % 2:
            raise InvalidPdu(f"byte count {byte_count} is not a positive even number")
        values = struct.unpack(f">{byte_count // 2}H", data[2:])
        return ReadHoldingResponse(values)

    if function == FC_WRITE_SINGLE:
        if len(data) < 5:
            raise TruncatedPdu("write-single PDU must be 5 bytes")
        if len(data) != 5:
            _trailing()
        address, value = struct.unpack(">HH", data[1:5])
        if direction == "request":
            return WriteSingleRequest(address=address, value=value)
        return WriteSingleResponse(address=address, value=value)

    if function == FC_WRITE_MULTIPLE:
        if direction == "request":
            _need(data, 6)
            start, quantity, byte_count = struct.unpack(">HHB", data[1:6])
            if byte_count != 2 * quantity:
                raise ByteCountMismatch(
                    f"byte count {byte_count} for quantity {quantity}"
                )
            if len(data) - 6 != byte_count:
                if len(data) - 6 < byte_count:
                    raise TruncatedPdu("write-multiple payload truncated")
                _trailing()
            if not 1 <= quantity <= 123:
                raise InvalidPdu(f"write-multiple quantity {quantity}")
            values = struct.unpack(f">{quantity}H", data[6:])
            return WriteMultipleRequest(start=start, values=values)
        if len(data) < 5:
            raise TruncatedPdu("write-multiple response must be 5 bytes")
        if len(data) != 5:
            _trailing()
        start, quantity = struct.unpack(">HH", data[1:5])
        return WriteMultipleResponse(start=start, quantity=quantity)

    raise UnknownFunction(f"function code {function:#04x} not supported")


def _trailing():
    raise InvalidPdu("trailing bytes after a well-formed PDU")


# -- RTU framing -------------------------------------------------------------


def encode_rtu(frame: RtuFrame) -> bytes:
    """Frame a PDU for the serial link: unit id, PDU, CRC-16 low byte first."""
    if not 1 <= frame.unit_id <= 247:
        raise InvalidPdu(f"unit id {frame.unit_id} not in [1,247]")
    body = bytes([frame.unit_id]) + encode_pdu(frame.pdu)
    return body + struct.pack("<H", crc16(body))


def decode_rtu(data: bytes, direction: str) -> RtuFrame:
    """Parse an RTU frame, verifying the CRC before touching the PDU."""
    if len(data) < 4:
        raise TooShort(f"RTU frame is {len(data)} bytes, minimum is 4")
    body, (received,) = data[:-2], struct.unpack("<H", data[-2:])
    if crc16(body) != received:
        raise CrcMismatch(f"CRC {received:#06x} does not match frame contents")
    return RtuFrame(unit_id=body[0], pdu=decode_pdu(body[1:], direction))


# -- MBAP framing ------------------------------------------------------------

MBAP_HEADER = struct.Struct(">HHHB")


def encode_mbap(frame: MbapFrame) -> bytes:
    """Frame a PDU for Modbus TCP: 7-byte header then the PDU."""
    _check_u16(frame.transaction_id, "transaction id")
    pdu_bytes = encode_pdu(frame.pdu)
    return MBAP_HEADER.pack(frame.transaction_id, 0, len(pdu_bytes) + 1, frame.unit_id) + pdu_bytes


def decode_mbap(data: bytes, direction: str) -> MbapFrame:
    """Parse an MBAP frame; the length field must match the payload exactly."""
    if len(data) < MBAP_HEADER.size:
        raise TruncatedHeader(f"MBAP frame is {len(data)} bytes, header needs 7")
    tid, protocol_id, length, unit_id = MBAP_HEADER.unpack_from(data)
    if protocol_id != 0:
        raise BadProtocolId(f"protocol id {protocol_id}, expected 0")
    if length != len(data) - 6:
        raise LengthMismatch(f"length field {length}, payload is {len(data) - 6} bytes")
    return MbapFrame(
        transaction_id=tid, unit_id=unit_id, pdu=decode_pdu(data[7:], direction)
    )
