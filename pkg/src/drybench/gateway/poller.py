"""RTU master side: the periodic poll cycle that feeds the mirror.

Each cycle first writes through any queued register writes, then reads the
whole register block 4000..4011 in one transaction.  A cycle either commits
a complete, CRC-checked snapshot or leaves the previous one intact; partial
data never reaches the mirror.
"""

from __future__ import annotations

import logging
import queue
from dataclasses import dataclass

from .. import modbus
from ..modbus import (
    CrcMismatch,
    ExceptionResponse,
    ReadHoldingRequest,
    ReadHoldingResponse,
    RtuFrame,
    WriteSingleRequest,
    WriteSingleResponse,
)
from .. import registers
from .mirror import Mirror

log = logging.getLogger(__name__)

WRITE_QUEUE_DEPTH = 16


@dataclass(frozen=True)
class PollConfig:
    poll_period_ms: float = 500.0
    response_timeout_ms: float = 200.0
    max_retries: int = 2
    unit_id: int = 1

    def __post_init__(self):
        if not self.response_timeout_ms < self.poll_period_ms:
            raise ValueError("response_timeout must be shorter than the poll period")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if not 1 <= self.unit_id <= 247:
            raise ValueError(f"unit id {self.unit_id} not in [1,247]")


@dataclass(frozen=True)
class PollResult:
    updated: bool
    cause: str | None = None  # "timeout" | "crc_mismatch" | "exception"
    attempts: int = 1


class Poller:
    """Drives the RTU transactions for one slave against one transport.

    The transport is any callable taking request frame bytes and returning
    response frame bytes, or None when nothing came back within the response
    timeout (dropped frame, silent slave, or corrupted request).
    """

    def __init__(self, transport, mirror: Mirror, config: PollConfig):
        self.transport = transport
        self.mirror = mirror
        self.config = config
        self.write_queue: queue.Queue = queue.Queue(maxsize=WRITE_QUEUE_DEPTH)

    def enqueue_write(self, address: int, value: int) -> bool:
        """Queue a write for the next cycle; False when the queue is full."""
        try:
            self.write_queue.put_nowait((address, value))
            return True
        except queue.Full:
            return False

    def _exchange(self, request_pdu) -> tuple[modbus.Pdu | None, str | None, int]:
        """Send with retries.  Returns (response_pdu, failure_cause, attempts)."""
        request_bytes = modbus.encode_rtu(RtuFrame(self.config.unit_id, request_pdu))
        cause = None
        attempts = 0
        for attempts in range(1, self.config.max_retries + 2):
            raw = self.transport(request_bytes)
            if raw is None:
                cause = "timeout"
                continue
            try:
                frame = modbus.decode_rtu(raw, "response")
            except CrcMismatch:
                cause = "crc_mismatch"
                continue
            except modbus.ModbusCodecError:
                cause = "crc_mismatch"  # structurally broken frame, same handling
                continue
            if frame.unit_id != self.config.unit_id:
                cause = "timeout"
                continue
            return frame.pdu, None, attempts
        return None, cause, attempts

    def _write_through(self) -> None:
        while True:
            try:
                address, value = self.write_queue.get_nowait()
            except queue.Empty:
                return
            response, cause, _ = self._exchange(WriteSingleRequest(address, value))
            if response is None:
                log.warning("write-through to %d lost (%s)", address, cause)
            elif isinstance(response, ExceptionResponse):
                log.warning("write-through to %d rejected: %s", address, response.code.name)
            elif not isinstance(response, WriteSingleResponse):
                log.warning("write-through to %d: unexpected response %r", address, response)

    def poll_cycle(self, now_ms: float) -> PollResult:
        """Run one full cycle: write-through, then block read, then commit."""
        self._write_through()
        request = ReadHoldingRequest(registers.FIRST_ADDRESS, registers.REGISTER_COUNT)
        response, cause, attempts = self._exchange(request)
        if response is None:
            self.mirror.record_failure()
            return PollResult(updated=False, cause=cause, attempts=attempts)
        if isinstance(response, ExceptionResponse):
            self.mirror.record_failure()
            return PollResult(updated=False, cause="exception", attempts=attempts)
        if (
            not isinstance(response, ReadHoldingResponse)
            or len(response.values) != registers.REGISTER_COUNT
        ):
            self.mirror.record_failure()
            return PollResult(updated=False, cause="crc_mismatch", attempts=attempts)
        self.mirror.commit(response.values, now_ms)
        return PollResult(updated=True, attempts=attempts)
