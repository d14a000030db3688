"""Command-line front end.

One binary covers the whole bench and its clients:

    drybench bench     run plant + link + gateway in one process
    drybench read      Modbus TCP read, printed in engineering units
    drybench write     Modbus TCP write (test register)
    drybench fault     press/release a fault key via the bridge
    drybench pot       set a potentiometer target via the bridge
    drybench preset    load a scenario preset via the bridge
    drybench stats     print the latest snapshot and link statistics
    drybench sim       run the plant slave alone (RTU frames over TCP)
    drybench gateway   run the gateway alone against a remote slave

Exit codes: 0 success, 1 usage or config error, 2 remote or protocol error.
"""

from __future__ import annotations

import json
import os
import signal
import socket
import sys
import threading

import click
import httpx
from websockets.sync.client import connect as ws_connect

from . import modbus, registers
from .bench import Bench
from .config import BenchConfig, ConfigInvalid, load_config, default_config_text
from .gateway.auth import CredentialStore, SessionManager, hash_password
from .gateway.bridge import BridgeServer, create_app
from .gateway.modbus_tcp import ModbusTcpServer
from .registers import Status, from_register, lookup, unpack_alarms

CONFIG_ENV = "DRYBENCH_CONFIG"

# Exit-code contract: 0 success, 1 usage/config, 2 remote/protocol.
click.UsageError.exit_code = 1


def _load_config(path: str | None) -> BenchConfig:
    path = path or os.environ.get(CONFIG_ENV)
    if path is None:
        return BenchConfig(tcp_port=1502)
    try:
        return load_config(path)
    except ConfigInvalid as exc:
        raise click.ClickException(str(exc))


@click.group()
def main():
    """Software bench for a Modbus-monitored industrial dehumidifier."""


# -- bench -------------------------------------------------------------------


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help=f"TOML config file (or ${CONFIG_ENV}).")
@click.option("--preset", "preset_name", default=None, help="Scenario preset to load at start.")
@click.option("--tcp-port", type=int, default=None, help="Override Modbus TCP port (0 = ephemeral).")
@click.option("--bridge-port", type=int, default=None, help="Override bridge HTTP port (0 = ephemeral).")
@click.option("--time-scale", type=float, default=None, help="Simulated seconds per wall second.")
@click.option("--static-dir", type=click.Path(), default=None,
              help="Directory with the dashboard's built assets.")
@click.option("--user", default="operator", show_default=True)
@click.option("--password", default="dryair", show_default=True,
              help="Used only when the config defines no users.")
def bench(config_path, preset_name, tcp_port, bridge_port, time_scale, static_dir,
          user, password):
    """Run the full bench: plant, noisy link, gateway, bridge."""
    import dataclasses

    config = _load_config(config_path)
    if tcp_port is not None:
        config = dataclasses.replace(config, tcp_port=tcp_port)
    if bridge_port is not None:
        config = dataclasses.replace(
            config, bridge=dataclasses.replace(config.bridge, port=bridge_port))
    if time_scale is not None:
        config = dataclasses.replace(config, time_scale=time_scale)

    the_bench = Bench(config)
    if preset_name is not None:
        preset = the_bench.presets.get(preset_name)
        if preset is None:
            raise click.ClickException(f"unknown preset {preset_name!r}")
        the_bench.plant.load_preset(preset)

    if config.bridge.users:
        store = CredentialStore(config.bridge.users)
    else:
        store = CredentialStore.with_password(user, password)
    sessions = SessionManager(store, ttl_s=config.bridge.session_ttl_s)

    try:
        tcp_server = ModbusTcpServer(
            (config.tcp_listen, config.tcp_port), the_bench.mirror, the_bench.poller)
    except OSError as exc:
        raise click.ClickException(f"cannot bind Modbus TCP port: {exc}")
    tcp_server.serve_in_thread()

    bridge = BridgeServer(
        create_app(the_bench, sessions, static_dir=static_dir),
        config.bridge.listen, config.bridge.port)
    bridge_port_actual = bridge.start()

    stop = the_bench.start()

    click.echo(f"modbus_tcp listening on {config.tcp_listen}:{tcp_server.port}")
    click.echo(f"bridge listening on {config.bridge.listen}:{bridge_port_actual}")
    sys.stdout.flush()

    done = threading.Event()
    for sig in (signal.SIGINT, signal.SIGTERM):
        signal.signal(sig, lambda *_: done.set())
    done.wait()

    stop.set()
    tcp_server.shutdown()
    bridge.stop()
    click.echo(json.dumps({"link_stats": the_bench.link.stats.as_dict()}))


# -- Modbus TCP client commands ----------------------------------------------


def _mbap_roundtrip(host: str, port: int, pdu, tid: int = 1):
    with socket.create_connection((host, port), timeout=10) as sock:
        sock.sendall(modbus.encode_mbap(modbus.MbapFrame(tid, 1, pdu)))
        header = b""
        while len(header) < 7:
            chunk = sock.recv(7 - len(header))
            if not chunk:
                raise ConnectionError("connection closed mid-response")
            header += chunk
        length = int.from_bytes(header[4:6], "big")
        body = b""
        while len(body) < length - 1:
            chunk = sock.recv(length - 1 - len(body))
            if not chunk:
                raise ConnectionError("connection closed mid-response")
            body += chunk
        return modbus.decode_mbap(header + body, "response")


def _format_register(address: int, raw: int) -> tuple[str, object]:
    entry = lookup(address)
    if address == registers.ALARMS_ADDRESS:
        return f"{entry.code} {entry.plc_label} 0x{raw:04X}", raw
    if address == registers.STATUS_ADDRESS:
        return f"{entry.code} {entry.plc_label} {Status(raw).name}", Status(raw).name
    value = from_register(raw, entry)
    if entry.scale == 100:
        return f"{entry.code} {entry.plc_label} {value.magnitude:.2f} {entry.unit}", value.magnitude
    if entry.unit:
        return f"{entry.code} {entry.plc_label} {value.magnitude:.0f} {entry.unit}", value.magnitude
    return f"{entry.code} {entry.plc_label} {raw}", raw


@main.command()
@click.argument("address", type=int)
@click.argument("quantity", type=int, default=1)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=1502, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def read(address, quantity, host, port, as_json):
    """Read holding registers over Modbus TCP, decoded to engineering units."""
    try:
        frame = _mbap_roundtrip(host, port, modbus.ReadHoldingRequest(address, quantity))
    except (OSError, modbus.ModbusCodecError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if isinstance(frame.pdu, modbus.ExceptionResponse):
        click.echo(f"exception: {_exception_name(frame.pdu)}")
        sys.exit(2)
    rows = {}
    for offset, raw in enumerate(frame.pdu.values):
        line, value = _format_register(address + offset, raw)
        if as_json:
            entry = lookup(address + offset)
            rows[entry.plc_label] = value
        else:
            click.echo(line)
    if as_json:
        click.echo(json.dumps(rows))


def _exception_name(pdu: modbus.ExceptionResponse) -> str:
    return {
        modbus.ExceptionCode.ILLEGAL_FUNCTION: "IllegalFunction",
        modbus.ExceptionCode.ILLEGAL_DATA_ADDRESS: "IllegalDataAddress",
        modbus.ExceptionCode.ILLEGAL_DATA_VALUE: "IllegalDataValue",
        modbus.ExceptionCode.SLAVE_DEVICE_FAILURE: "SlaveDeviceFailure",
    }[pdu.code]


@main.command()
@click.argument("address", type=int)
@click.argument("value", type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=1502, show_default=True)
def write(address, value, host, port):
    """Write a single holding register over Modbus TCP."""
    try:
        frame = _mbap_roundtrip(host, port, modbus.WriteSingleRequest(address, value))
    except (OSError, modbus.ModbusCodecError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if isinstance(frame.pdu, modbus.ExceptionResponse):
        click.echo(f"exception: {_exception_name(frame.pdu)}")
        sys.exit(2)
    click.echo(f"wrote {value} to {address}")


# -- Bridge (bench console) commands -----------------------------------------


def _bridge_session(bridge_url: str, user: str, password: str) -> str:
    try:
        response = httpx.post(f"{bridge_url}/api/login",
                              json={"user": user, "password": password}, timeout=10)
    except httpx.HTTPError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if response.status_code != 200:
        click.echo("error: BadCredentials", err=True)
        sys.exit(2)
    return response.json()["session_id"]


def _bridge_command(bridge_url, user, password, command, as_json):
    """Send one console command, then print the next snapshot."""
    session = _bridge_session(bridge_url, user, password)
    ws_url = bridge_url.replace("http://", "ws://").replace("https://", "wss://")
    with ws_connect(f"{ws_url}/api/stream?session={session}") as ws:
        if command is not None:
            ws.send(json.dumps(command))
        acked = command is None
        while True:
            message = json.loads(ws.recv(timeout=10))
            if message.get("type") == "error":
                click.echo(f"error: {message['message']}", err=True)
                sys.exit(2)
            if message.get("type") == "ack":
                acked = True
                continue
            if message.get("type") == "snapshot" and acked:
                if as_json:
                    click.echo(json.dumps(message))
                else:
                    _print_snapshot(message)
                return


def _print_snapshot(message: dict) -> None:
    click.echo(f"status {message['status']}")
    alarms = ", ".join(message["alarms"]) or "none"
    click.echo(f"alarms {alarms}")
    for label, value in message["engineering"].items():
        entry = lookup(label)
        click.echo(f"  {label} {value:.2f} {entry.unit}".rstrip())
    click.echo(f"staleness_ms {message['staleness_ms']:.0f}")


def _bridge_options(fn):
    fn = click.option("--bridge-url", default="http://127.0.0.1:8502", show_default=True)(fn)
    fn = click.option("--user", default="operator", show_default=True)(fn)
    fn = click.option("--password", default="dryair", show_default=True)(fn)
    fn = click.option("--json", "as_json", is_flag=True)(fn)
    return fn


@main.command()
@click.argument("name")
@click.option("--press/--release", default=True)
@_bridge_options
def fault(name, press, bridge_url, user, password, as_json):
    """Press or release one of the six fault keys."""
    _bridge_command(bridge_url, user, password,
                    {"type": "key", "fault": name, "pressed": press}, as_json)


@main.command()
@click.argument("label")
@click.argument("value", type=float)
@_bridge_options
def pot(label, value, bridge_url, user, password, as_json):
    """Set a potentiometer target (ST1, SU1, SRT, PA, PRE, POS, PST1)."""
    _bridge_command(bridge_url, user, password,
                    {"type": "pot", "target": label, "value": value}, as_json)


@main.command()
@click.argument("name")
@_bridge_options
def preset(name, bridge_url, user, password, as_json):
    """Load a scenario preset (fig4a, fig4b, fig4c, or from a preset file)."""
    _bridge_command(bridge_url, user, password, {"type": "preset", "name": name}, as_json)


@main.command()
@_bridge_options
def stats(bridge_url, user, password, as_json):
    """Print the latest snapshot including link statistics."""
    session = _bridge_session(bridge_url, user, password)
    ws_url = bridge_url.replace("http://", "ws://").replace("https://", "wss://")
    with ws_connect(f"{ws_url}/api/stream?session={session}") as ws:
        message = json.loads(ws.recv(timeout=10))
        if as_json:
            click.echo(json.dumps(message))
        else:
            _print_snapshot(message)
            click.echo(json.dumps(message["link_stats"]))


# -- Standalone components ---------------------------------------------------


@main.command()
@click.option("--listen", default="127.0.0.1:9600", show_default=True,
              help="host:port for RTU-frames-over-TCP.")
@click.option("--unit", type=int, default=1, show_default=True)
@click.option("--preset", "preset_name", default=None)
@click.option("--tick-ms", type=float, default=100.0, show_default=True)
def sim(listen, unit, preset_name, tick_ms):
    """Run the plant slave alone, speaking RTU frames over a TCP socket."""
    from .rtu_tcp import run_slave_server

    host, port = _parse_hostport(listen)
    run_slave_server(host, port, unit, preset_name, tick_ms, echo=click.echo)


@main.command()
@click.option("--connect", default="127.0.0.1:9600", show_default=True,
              help="host:port of a running `drybench sim`.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--tcp-port", type=int, default=None)
@click.option("--bridge-port", type=int, default=None)
def gateway(connect, config_path, tcp_port, bridge_port):
    """Run the gateway alone against a remote RTU slave."""
    from .rtu_tcp import run_gateway_against

    import dataclasses
    config = _load_config(config_path)
    if tcp_port is not None:
        config = dataclasses.replace(config, tcp_port=tcp_port)
    if bridge_port is not None:
        config = dataclasses.replace(
            config, bridge=dataclasses.replace(config.bridge, port=bridge_port))
    host, port = _parse_hostport(connect)
    run_gateway_against(host, port, config, echo=click.echo)


def _parse_hostport(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise click.ClickException(f"expected host:port, got {value!r}")


# -- Utilities ---------------------------------------------------------------


@main.command("hash-password")
@click.argument("password")
def hash_password_cmd(password):
    """Generate a salt/hash pair for the config's [[users]] entries."""
    salt_hex, hash_hex = hash_password(password)
    click.echo(f'salt = "{salt_hex}"')
    click.echo(f'password_hash = "{hash_hex}"')


@main.command("sample-config")
def sample_config():
    """Print the documented sample configuration file."""
    click.echo(default_config_text(), nl=False)


if __name__ == "__main__":
    main()
