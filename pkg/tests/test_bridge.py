"""Monitoring bridge: login gate, register map endpoint, snapshot stream."""

import json

import pytest
from fastapi.testclient import TestClient
from starlette.websockets import WebSocketDisconnect

from conftest import make_bench
from drybench.gateway.auth import (
    AuthExpired,
    BadCredentials,
    CredentialStore,
    SessionManager,
    hash_password,
)
from drybench.gateway.bridge import create_app


class FakeClock:
    def __init__(self):
        self.now = 1000.0

    def __call__(self):
        return self.now


@pytest.fixture
def rig():
    bench = make_bench(time_scale=20.0)
    bench.plant.load_preset(bench.presets["fig4a"])
    bench.poller.poll_cycle(now_ms=0.0)
    stop = bench.start()
    clock = FakeClock()
    sessions = SessionManager(CredentialStore.with_password("operator", "dryair"),
                              ttl_s=3600, clock=clock)
    app = create_app(bench, sessions)
    try:
        with TestClient(app) as client:
            yield bench, client, clock
    finally:
        stop.set()


def login(client, user="operator", password="dryair"):
    return client.post("/api/login", json={"user": user, "password": password})


def test_login_success(rig):
    _, client, _ = rig
    response = login(client)
    assert response.status_code == 200
    assert response.json()["session_id"]


def test_login_failures_are_uniform(rig):
    _, client, _ = rig
    wrong_password = login(client, password="nope")
    unknown_user = login(client, user="nobody", password="nope")
    assert wrong_password.status_code == unknown_user.status_code == 401
    assert wrong_password.json() == unknown_user.json() == {"error": "BadCredentials"}


def test_register_map_endpoint(rig):
    _, client, _ = rig
    data = client.get("/api/registers").json()
    assert [row["plc_label"] for row in data[:3]] == ["A0", "SRT", "PA"]
    assert data[3]["unit"] == "°C"


def test_stream_requires_session(rig):
    _, client, _ = rig
    with pytest.raises(WebSocketDisconnect):
        with client.websocket_connect("/api/stream") as ws:
            ws.receive_text()
    with pytest.raises(WebSocketDisconnect):
        with client.websocket_connect("/api/stream?session=forged") as ws:
            ws.receive_text()


def connect(client):
    session = login(client).json()["session_id"]
    return client.websocket_connect(f"/api/stream?session={session}")


def recv(ws, wanted="snapshot"):
    while True:
        message = json.loads(ws.receive_text())
        if message["type"] == wanted:
            return message


def test_snapshot_contents_ideal_preset(rig):
    _, client, _ = rig
    with connect(client) as ws:
        message = recv(ws)
    assert message["status"] == "RUNNING"
    assert message["alarms"] == []
    assert message["engineering"]["ST1"] == pytest.approx(40.0)
    assert "staleness_ms" in message
    assert "frames_sent" in message["link_stats"]


def test_key_command_roundtrip(rig):
    bench, client, _ = rig
    with connect(client) as ws:
        recv(ws)
        ws.send_text(json.dumps({"type": "key", "fault": "emergency", "pressed": True}))
        recv(ws, "ack")
        message = recv(ws)
        while message["status"] != "SHUTDOWN":
            message = recv(ws)
    assert message["alarms"] == ["emergency"]


def test_bad_command_reports_error(rig):
    bench, client, _ = rig
    with connect(client) as ws:
        recv(ws)
        ws.send_text(json.dumps({"type": "key", "fault": "bogus"}))
        message = recv(ws, "error")
    assert "UnknownFault" in message["message"]


def test_fig4b_preset_over_stream(rig):
    bench, client, _ = rig
    with connect(client) as ws:
        recv(ws)
        ws.send_text(json.dumps({"type": "preset", "name": "fig4b"}))
        message = recv(ws)
        while message["status"] != "SHUTDOWN":
            message = recv(ws)
    assert message["alarms"] == [
        "emergency", "motor_overload", "post_heater", "react_sensor",
        "safety_thermostat",
    ]


def test_session_expiry_closes_stream(rig):
    _, client, clock = rig
    with connect(client) as ws:
        recv(ws)
        clock.now += 7200.0  # past the 1 h TTL
        ws.send_text(json.dumps({"type": "clear_faults"}))
        with pytest.raises(WebSocketDisconnect):
            while True:
                ws.receive_text()


def test_expired_session_cannot_reconnect(rig):
    _, client, clock = rig
    session = login(client).json()["session_id"]
    clock.now += 7200.0
    with pytest.raises(WebSocketDisconnect):
        with client.websocket_connect(f"/api/stream?session={session}") as ws:
            ws.receive_text()


# -- auth unit behavior ------------------------------------------------------


def test_hash_password_roundtrip():
    salt, digest = hash_password("hunter2")
    store = CredentialStore({"u": (salt, digest)})
    store.verify("u", "hunter2")
    with pytest.raises(BadCredentials):
        store.verify("u", "hunter3")


def test_session_manager_validate():
    clock = FakeClock()
    manager = SessionManager(CredentialStore.with_password("u", "p"),
                             ttl_s=10, clock=clock)
    session = manager.login("u", "p")
    assert manager.validate(session.session_id).user == "u"
    clock.now += 11
    with pytest.raises(AuthExpired):
        manager.validate(session.session_id)
    with pytest.raises(AuthExpired):
        manager.validate(None)


def test_heartbeat_when_idle():
    # No driver, no mirror updates: snapshots still arrive at most 2 s apart.
    import time

    bench = make_bench()
    bench.plant.load_preset(bench.presets["fig4a"])
    bench.poller.poll_cycle(now_ms=0.0)
    sessions = SessionManager(CredentialStore.with_password("operator", "dryair"))
    with TestClient(create_app(bench, sessions)) as client:
        with connect(client) as ws:
            recv(ws)
            started = time.monotonic()
            recv(ws)
            assert time.monotonic() - started <= 2.5
