"""RTU frames carried over a TCP byte stream.

Used only when the plant slave and the gateway run as separate processes
(`drybench sim` / `drybench gateway`).  The stream carries back-to-back RTU
frames with no extra framing, so the reader re-derives frame boundaries from
the function code and count fields, exactly as a serial receiver would.
This split-process path is a clean pipe: link impairment applies only to the
in-process bench, where the virtual link sits between the two halves.
"""

from __future__ import annotations

import logging
import signal
import socket
import socketserver
import threading
import time

from . import modbus
from .config import BenchConfig, load_presets
from .gateway.mirror import Mirror
from .gateway.modbus_tcp import ModbusTcpServer
from .gateway.poller import Poller
from .plant import Plant

log = logging.getLogger(__name__)


class FrameAssembler:
    """Re-frames a byte stream into whole RTU frames.

    `kind` is "request" or "response"; frame lengths differ per direction.
    Raises ValueError on a function code the length rules cannot cover, at
    which point the stream is unrecoverable and should be closed.
    """

    def __init__(self, kind: str):
        self.kind = kind
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[bytes]:
        self._buf.extend(data)
        frames = []
        while True:
            needed = self._frame_length()
            if needed is None or len(self._buf) < needed:
                break
            frames.append(bytes(self._buf[:needed]))
            del self._buf[:needed]
        return frames

    def _frame_length(self) -> int | None:
        buf = self._buf
        if len(buf) < 2:
            return None
        function = buf[1]
        if function & 0x80:
            if self.kind != "response":
                raise ValueError("exception frame in request stream")
            return 5
        if function == modbus.FC_READ_HOLDING:
            if self.kind == "request":
                return 8
            if len(buf) < 3:
                return None
            return 5 + buf[2]
        if function == modbus.FC_WRITE_SINGLE:
            return 8
        if function == modbus.FC_WRITE_MULTIPLE:
            if self.kind == "response":
                return 8
            if len(buf) < 7:
                return None
            return 9 + buf[6]
        raise ValueError(f"cannot frame function code {function:#04x}")


# -- Standalone slave ---------------------------------------------------------


def run_slave_server(host: str, port: int, unit: int, preset_name: str | None,
                     tick_ms: float, echo=print) -> None:
    plant = Plant(unit_id=unit)
    if preset_name is not None:
        presets = load_presets()
        if preset_name not in presets:
            raise SystemExit(f"unknown preset {preset_name!r}")
        plant.load_preset(presets[preset_name])
    lock = threading.Lock()
    stop = threading.Event()

    def ticker():
        while not stop.wait(tick_ms / 1000.0):
            with lock:
                plant.tick(tick_ms / 1000.0)

    threading.Thread(target=ticker, daemon=True, name="sim-ticker").start()

    class Handler(socketserver.BaseRequestHandler):
        def handle(self):
            assembler = FrameAssembler("request")
            while True:
                data = self.request.recv(4096)
                if not data:
                    return
                try:
                    frames = assembler.feed(data)
                except ValueError:
                    return
                for frame in frames:
                    with lock:
                        response = plant.respond_rtu(frame)
                    if response is not None:
                        self.request.sendall(response)

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    server = Server((host, port), Handler)
    echo(f"rtu slave listening on {host}:{server.server_address[1]}")
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: threading.Thread(target=server.shutdown).start())
    try:
        server.serve_forever()
    finally:
        stop.set()


# -- Standalone gateway -------------------------------------------------------


class TcpRtuTransport:
    """Poller transport over a persistent TCP connection to a remote slave."""

    def __init__(self, host: str, port: int, timeout_s: float):
        self.host, self.port, self.timeout_s = host, port, timeout_s
        self._sock: socket.socket | None = None
        self._assembler = FrameAssembler("response")

    def _connect(self):
        if self._sock is None:
            self._sock = socket.create_connection((self.host, self.port), timeout=self.timeout_s)
            self._assembler = FrameAssembler("response")

    def __call__(self, request_bytes: bytes) -> bytes | None:
        try:
            self._connect()
            self._sock.sendall(request_bytes)
            deadline = time.monotonic() + self.timeout_s
            while time.monotonic() < deadline:
                self._sock.settimeout(max(0.01, deadline - time.monotonic()))
                data = self._sock.recv(4096)
                if not data:
                    raise ConnectionError("slave closed the connection")
                frames = self._assembler.feed(data)
                if frames:
                    return frames[0]
            return None
        except (OSError, ValueError):
            if self._sock is not None:
                self._sock.close()
                self._sock = None
            return None


def run_gateway_against(host: str, port: int, config: BenchConfig, echo=print) -> None:
    mirror = Mirror()
    transport = TcpRtuTransport(host, port, config.poll.response_timeout_ms / 1000.0)
    poller = Poller(transport, mirror, config.poll)

    stop = threading.Event()

    def poll_loop():
        start = time.monotonic()
        while not stop.wait(config.poll.poll_period_ms / 1000.0):
            poller.poll_cycle((time.monotonic() - start) * 1000.0)

    threading.Thread(target=poll_loop, daemon=True, name="gateway-poller").start()

    tcp_server = ModbusTcpServer((config.tcp_listen, config.tcp_port), mirror, poller)
    tcp_server.serve_in_thread()
    echo(f"modbus_tcp listening on {config.tcp_listen}:{tcp_server.port}")

    done = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: done.set())
    done.wait()
    stop.set()
    tcp_server.shutdown()
