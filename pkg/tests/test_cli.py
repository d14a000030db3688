"""End-to-end CLI tests: spawn the bench, act on it, assert on stdout."""

import json
import re
import signal
import subprocess
import sys
import time

import pytest

CLI = [sys.executable, "-m", "drybench.cli"]


class BenchProcess:
    def __init__(self, *extra_args):
        self.proc = subprocess.Popen(
            CLI + ["bench", "--tcp-port", "0", "--bridge-port", "0",
                   "--time-scale", "50", *extra_args],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        self.tcp_port = None
        self.bridge_port = None
        deadline = time.monotonic() + 15
        while time.monotonic() < deadline and (self.tcp_port is None or self.bridge_port is None):
            line = self.proc.stdout.readline()
            if not line:
                break
            if match := re.search(r"modbus_tcp listening on .*:(\d+)", line):
                self.tcp_port = int(match.group(1))
            if match := re.search(r"bridge listening on .*:(\d+)", line):
                self.bridge_port = int(match.group(1))
        if self.tcp_port is None or self.bridge_port is None:
            self.stop()
            raise RuntimeError(f"bench did not start: {self.proc.stderr.read()}")
        time.sleep(0.3)  # let the first poll cycle land

    def stop(self):
        if self.proc.poll() is None:
            self.proc.send_signal(signal.SIGINT)
            try:
                self.proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self.proc.kill()

    def cli(self, *args, expect_exit=0):
        result = subprocess.run(
            CLI + list(args), capture_output=True, text=True, timeout=30)
        assert result.returncode == expect_exit, (result.stdout, result.stderr)
        return result.stdout

    def read(self, address, quantity=1, expect_exit=0):
        return self.cli("read", str(address), str(quantity),
                        "--port", str(self.tcp_port), expect_exit=expect_exit)

    def bridge_cmd(self, *args, expect_exit=0):
        return self.cli(*args, "--bridge-url", f"http://127.0.0.1:{self.bridge_port}",
                        expect_exit=expect_exit)


@pytest.fixture(scope="module")
def bench_proc():
    proc = BenchProcess("--preset", "fig4c")
    yield proc
    proc.stop()


def test_read_full_block_fig4c(bench_proc):
    out = bench_proc.read(4000, 12)
    lines = out.strip().splitlines()
    assert len(lines) == 12
    assert "MB_4003 ST1 54.50 °C" in lines
    assert "MB_4004 SU1 51.90 %RH" in lines
    assert "MB_4011 STATUS RUNNING" in lines


def test_read_outside_map(bench_proc):
    out = bench_proc.read(5000, 1, expect_exit=2)
    assert "exception: IllegalDataAddress" in out


def test_read_alarms_no_faults(bench_proc):
    bench_proc.bridge_cmd("preset", "fig4c")
    time.sleep(0.3)
    out = bench_proc.read(4010, 1)
    assert "ALARMS 0x0000" in out


def test_write_then_read_test_register(bench_proc):
    bench_proc.cli("write", "4000", "1234", "--port", str(bench_proc.tcp_port))
    time.sleep(0.3)  # write-through happens on the next poll cycle
    assert "MB_4000 A0 1234" in bench_proc.read(4000, 1)


def test_fault_key_causes_shutdown(bench_proc):
    out = bench_proc.bridge_cmd("fault", "emergency", "--press", "--json")
    snapshot = json.loads(out)
    assert snapshot["status"] == "SHUTDOWN"
    assert "emergency" in snapshot["alarms"]
    bench_proc.bridge_cmd("fault", "emergency", "--release")
    bench_proc.bridge_cmd("stats")  # command channel still healthy
    # Recover for later tests.
    out = bench_proc.bridge_cmd("preset", "fig4c", "--json")


def test_unknown_fault_rejected(bench_proc):
    bench_proc.bridge_cmd("fault", "bogus", "--press", expect_exit=2)


def test_bad_credentials_rejected(bench_proc):
    bench_proc.cli("fault", "emergency",
                   "--bridge-url", f"http://127.0.0.1:{bench_proc.bridge_port}",
                   "--password", "wrong", expect_exit=2)


def test_pot_then_read_converges(bench_proc):
    bench_proc.bridge_cmd("preset", "fig4c")
    bench_proc.bridge_cmd("pot", "st1", "60.00")
    # 10 tau of simulated settling, accelerated 50x.
    time.sleep(1.5)
    out = bench_proc.read(4003, 1)
    assert "MB_4003 ST1 60.00 °C" in out
    bench_proc.bridge_cmd("preset", "fig4c")


def test_stats_reports_link_counters(bench_proc):
    out = bench_proc.bridge_cmd("stats", "--json")
    snapshot = json.loads(out)
    assert snapshot["link_stats"]["frames_sent"] > 0
    assert snapshot["link_stats"]["frames_dropped"] == 0


def test_missing_config_rejected():
    result = subprocess.run(CLI + ["bench", "--config", "/nonexistent.toml"],
                            capture_output=True, text=True, timeout=30)
    assert result.returncode == 1
    assert "not found" in result.stderr


def test_json_read_output(bench_proc):
    out = bench_proc.cli("read", "4003", "1",
                         "--port", str(bench_proc.tcp_port), "--json")
    assert json.loads(out)["ST1"] == pytest.approx(54.5, abs=0.2)


def test_sample_config_parses():
    out = subprocess.run(CLI + ["sample-config"], capture_output=True, text=True)
    assert out.returncode == 0
    import tomli
    data = tomli.loads(out.stdout)
    assert data["poll"]["period_ms"] == 500


def test_final_stats_printed_on_interrupt():
    proc = BenchProcess()
    proc.proc.send_signal(signal.SIGINT)
    out, _ = proc.proc.communicate(timeout=10)
    assert proc.proc.returncode == 0
    assert "link_stats" in out


def test_standalone_sim_and_gateway():
    sim = subprocess.Popen(CLI + ["sim", "--listen", "127.0.0.1:0",
                                  "--preset", "fig4c"],
                           stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    gateway = None
    try:
        line = sim.stdout.readline()
        port = int(re.search(r":(\d+)$", line.strip()).group(1))
        gateway = subprocess.Popen(CLI + ["gateway", "--connect", f"127.0.0.1:{port}",
                                          "--tcp-port", "0"],
                                   stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                                   text=True)
        line = gateway.stdout.readline()
        tcp_port = int(re.search(r":(\d+)$", line.strip()).group(1))
        time.sleep(1.2)  # a couple of remote poll cycles
        result = subprocess.run(CLI + ["read", "4003", "1", "--port", str(tcp_port)],
                                capture_output=True, text=True, timeout=30)
        assert result.returncode == 0, result.stderr
        assert "MB_4003 ST1 54.50 °C" in result.stdout
    finally:
        for proc in (gateway, sim):
            if proc is not None:
                proc.terminate()
                proc.wait(timeout=10)
