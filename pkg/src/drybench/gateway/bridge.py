"""Authenticated monitoring bridge for operator clients.

HTTP surface:
  POST /api/login      {"user": ..., "password": ...} -> {"session_id": ...}
  GET  /api/registers  the register map as JSON (labels, units, scaling)
  WS   /api/stream     bidirectional JSON message stream (?session=<id>)

Stream messages, server to client:
  {"type": "snapshot", "engineering": {...}, "alarms": [...], "status": ...,
   "staleness_ms": ..., "link_stats": {...}}
  {"type": "error", "message": ...}
Client to server:
  {"type": "key", "fault": <name>, "pressed": <bool>}
  {"type": "pot", "target": <label>, "value": <number>}
  {"type": "clear_faults"}
  {"type": "preset", "name": <text>}

A snapshot goes out on every mirror update and at least every 2 s as a
heartbeat.  Slow consumers only ever receive the latest snapshot; stale
intermediates are skipped, never queued.  Session validity is re-checked on
every message in both directions, not only at connect time.
"""

from __future__ import annotations

import asyncio
import json
import logging
import threading
from pathlib import Path

import uvicorn
from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .. import registers
from ..bench import Bench, CommandError
from .auth import AuthError, SessionManager

log = logging.getLogger(__name__)

HEARTBEAT_S = 2.0
MIRROR_POLL_S = 0.05
WS_POLICY_VIOLATION = 1008


def create_app(bench: Bench, sessions: SessionManager,
               static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="drybench bridge", docs_url=None, redoc_url=None)

    @app.post("/api/login")
    async def login(request: Request):
        try:
            body = await request.json()
            user, password = body["user"], body["password"]
        except (json.JSONDecodeError, KeyError, TypeError):
            return JSONResponse({"error": "BadRequest"}, status_code=400)
        try:
            session = sessions.login(str(user), str(password))
        except AuthError:
            return JSONResponse({"error": "BadCredentials"}, status_code=401)
        return {"session_id": session.session_id, "user": session.user}

    @app.get("/api/registers")
    async def register_map():
        return Response(registers.registers_json(), media_type="application/json")

    @app.websocket("/api/stream")
    async def stream(ws: WebSocket):
        session_id = ws.query_params.get("session")
        try:
            sessions.validate(session_id)
        except AuthError:
            # Reject before accepting so an unauthenticated client never
            # attaches a stream.
            await ws.close(code=WS_POLICY_VIOLATION, reason="AuthExpired")
            return
        await ws.accept()

        async def guard() -> bool:
            try:
                sessions.validate(session_id)
                return True
            except AuthError:
                await ws.close(code=WS_POLICY_VIOLATION, reason="AuthExpired")
                return False

        async def sender():
            last_version = -1
            last_sent = 0.0
            loop = asyncio.get_running_loop()
            while True:
                version = bench.mirror.version
                now = loop.time()
                if version != last_version or now - last_sent >= HEARTBEAT_S:
                    if not await guard():
                        return
                    message = bench.snapshot_message()
                    if message is not None:
                        await ws.send_text(json.dumps(message))
                        last_version = version
                        last_sent = now
                await asyncio.sleep(MIRROR_POLL_S)

        async def receiver():
            while True:
                text = await ws.receive_text()
                if not await guard():
                    return
                try:
                    command = json.loads(text)
                except json.JSONDecodeError:
                    await ws.send_text(json.dumps(
                        {"type": "error", "message": "malformed JSON"}))
                    continue
                future = bench.submit(command)
                try:
                    await asyncio.wrap_future(future)
                except CommandError as exc:
                    await ws.send_text(json.dumps(
                        {"type": "error", "message": str(exc)}))
                else:
                    await ws.send_text(json.dumps(
                        {"type": "ack", "command": command.get("type")}))

        tasks = [asyncio.create_task(sender()), asyncio.create_task(receiver())]
        try:
            done, pending = await asyncio.wait(tasks, return_when=asyncio.FIRST_COMPLETED)
            for task in done:
                exc = task.exception()
                if exc is not None and not isinstance(exc, WebSocketDisconnect):
                    log.debug("stream task failed: %r", exc)
        except WebSocketDisconnect:
            pass
        finally:
            for task in tasks:
                task.cancel()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="dashboard")

    return app


class BridgeServer:
    """uvicorn wrapper running the bridge app in a daemon thread."""

    def __init__(self, app: FastAPI, host: str, port: int):
        self._config = uvicorn.Config(app, host=host, port=port, log_level="warning")
        self._server = uvicorn.Server(self._config)
        self._thread: threading.Thread | None = None

    def start(self, ready_timeout: float = 10.0) -> int:
        self._thread = threading.Thread(target=self._server.run, daemon=True,
                                        name="bridge-http")
        self._thread.start()
        deadline = ready_timeout
        import time
        waited = 0.0
        while not self._server.started:
            if waited >= deadline:
                raise RuntimeError("bridge server failed to start")
            time.sleep(0.02)
            waited += 0.02
        return self.port

    @property
    def port(self) -> int:
        for server in self._server.servers:
            for sock in server.sockets:
                return sock.getsockname()[1]
        return self._config.port

    def stop(self) -> None:
        self._server.should_exit = True
        if self._thread is not None:
            self._thread.join(timeout=5)
