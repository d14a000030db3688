"""Modbus TCP server answering from the register mirror.

Every read is served from the gateway's mirror snapshot; a TCP request never
triggers a synchronous transaction on the serial side, so response latency
is independent of link delay and link noise.  Writes to the test register
are queued for write-through on the next poll cycle.

The listener speaks standard, unauthenticated Modbus TCP: the login
requirement applies to the monitoring bridge, not to this port, which stays
interoperable with stock Modbus clients.
"""

from __future__ import annotations

import logging
import socketserver
import struct
import threading

from .. import modbus, registers
from ..modbus import (
    ExceptionCode,
    ExceptionResponse,
    MbapFrame,
    ReadHoldingRequest,
    ReadHoldingResponse,
    WriteMultipleRequest,
    WriteMultipleResponse,
    WriteSingleRequest,
    WriteSingleResponse,
)
from .mirror import Mirror
from .poller import Poller

log = logging.getLogger(__name__)

DEFAULT_PORT = 502


def handle_request(pdu: modbus.Pdu, mirror: Mirror, poller: Poller) -> modbus.Pdu:
    """Map one request PDU to its response, given the current mirror."""
    if isinstance(pdu, ReadHoldingRequest):
        first, last = pdu.start, pdu.start + pdu.quantity - 1
        if first < registers.FIRST_ADDRESS or last > registers.LAST_ADDRESS:
            return ExceptionResponse(modbus.FC_READ_HOLDING, ExceptionCode.ILLEGAL_DATA_ADDRESS)
        snapshot = mirror.snapshot
        if snapshot is None:
            return ExceptionResponse(modbus.FC_READ_HOLDING, ExceptionCode.SLAVE_DEVICE_FAILURE)
        offset = first - registers.FIRST_ADDRESS
        return ReadHoldingResponse(snapshot.registers[offset : offset + pdu.quantity])

    if isinstance(pdu, WriteSingleRequest):
        if pdu.address != 4000:
            return ExceptionResponse(modbus.FC_WRITE_SINGLE, ExceptionCode.ILLEGAL_DATA_ADDRESS)
        if not poller.enqueue_write(pdu.address, pdu.value):
            return ExceptionResponse(modbus.FC_WRITE_SINGLE, ExceptionCode.SLAVE_DEVICE_FAILURE)
        return WriteSingleResponse(pdu.address, pdu.value)

    if isinstance(pdu, WriteMultipleRequest):
        if pdu.start != 4000 or len(pdu.values) != 1:
            return ExceptionResponse(modbus.FC_WRITE_MULTIPLE, ExceptionCode.ILLEGAL_DATA_ADDRESS)
        if not poller.enqueue_write(4000, pdu.values[0]):
            return ExceptionResponse(modbus.FC_WRITE_MULTIPLE, ExceptionCode.SLAVE_DEVICE_FAILURE)
        return WriteMultipleResponse(4000, 1)

    return ExceptionResponse(modbus.FC_READ_HOLDING, ExceptionCode.ILLEGAL_FUNCTION)


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        sock = self.request
        while True:
            header = _read_exact(sock, 7)
            if header is None:
                return
            tid, protocol_id, length, unit = struct.unpack(">HHHB", header)
            if protocol_id != 0 or not 1 <= length <= 254:
                log.debug("malformed MBAP header from %s, closing", self.client_address)
                return
            body = _read_exact(sock, length - 1)
            if body is None:
                return
            try:
                pdu = modbus.decode_pdu(body, "request")
            except modbus.UnknownFunction:
                function = body[0] if body else 0
                response = ExceptionResponse(
                    function if function in modbus.SUPPORTED_FUNCTIONS else modbus.FC_READ_HOLDING,
                    ExceptionCode.ILLEGAL_FUNCTION,
                )
            except modbus.ModbusCodecError:
                log.debug("malformed PDU from %s, closing", self.client_address)
                return
            else:
                response = handle_request(pdu, self.server.mirror, self.server.poller)
            sock.sendall(modbus.encode_mbap(MbapFrame(tid, unit, response)))


def _read_exact(sock, n: int) -> bytes | None:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


class ModbusTcpServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], mirror: Mirror, poller: Poller):
        super().__init__(address, _Handler)
        self.mirror = mirror
        self.poller = poller

    @property
    def port(self) -> int:
        return self.server_address[1]

    def serve_in_thread(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True,
                                  name="modbus-tcp")
        thread.start()
        return thread
