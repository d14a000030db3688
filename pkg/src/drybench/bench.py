"""Composition root: plant, virtual link, poller, and mirror in one process.

Exactly one driver advances the simulation clock; everything else interacts
through thread-safe queues (bench commands, register write-through) or reads
immutable mirror snapshots.  The same core runs in two modes:

  - `advance(sim_ms)`: synchronous, simulated-clock stepping, used by tests
    and soak runs (no wall-clock sleeps);
  - `run(stop)`: wall-clock loop used by the CLI, optionally accelerated by
    `time_scale`.
"""

from __future__ import annotations

import logging
import queue
import threading
import time
from concurrent.futures import Future

from . import link as link_mod
from .config import BenchConfig, load_presets
from .link import Delivered, VirtualLink
from .plant import Plant, PlantError, ScenarioPreset
from .registers import FAULT_BY_KEY, RangeOverflow
from .gateway.mirror import Mirror
from .gateway.poller import Poller

log = logging.getLogger(__name__)


class CommandError(Exception):
    """A bench-console command was rejected; message names the reason."""


class Bench:
    def __init__(self, config: BenchConfig,
                 presets: dict[str, ScenarioPreset] | None = None):
        self.config = config
        self.presets = presets if presets is not None else load_presets(config.preset_file)
        self.plant = Plant(unit_id=config.poll.unit_id)
        self.link = VirtualLink(config.link)
        self.mirror = Mirror()
        self.poller = Poller(self._exchange, self.mirror, config.poll)
        self.commands: queue.Queue = queue.Queue()
        self.pre_poll_hook = None  # test hook, called with now_ms before a poll
        self._lock = threading.RLock()
        self.now_ms = 0.0
        self._next_tick_ms = config.tick_ms
        self._next_poll_ms = 0.0

    # -- RTU transport over the impaired link --------------------------------

    def _exchange(self, request_bytes: bytes) -> bytes | None:
        """One request/response transaction across the noisy segment."""
        if 2 * self.config.link.delay_ms > self.config.poll.response_timeout_ms:
            return None  # round trip cannot beat the response timeout
        outcome = self.link.send(request_bytes, link_mod.M2S)
        if not isinstance(outcome, Delivered):
            return None
        response = self.plant.respond_rtu(outcome.data)
        if response is None:
            return None  # slave discarded a corrupt frame: master times out
        outcome = self.link.send(response, link_mod.S2M)
        if not isinstance(outcome, Delivered):
            return None
        return outcome.data

    # -- Bench console commands ----------------------------------------------

    def submit(self, command: dict) -> Future:
        """Queue a console command; the future resolves between ticks."""
        future: Future = Future()
        self.commands.put((command, future))
        return future

    def _apply_command(self, command: dict) -> None:
        kind = command.get("type")
        if kind == "key":
            fault = FAULT_BY_KEY.get(str(command.get("fault", "")).lower())
            if fault is None:
                raise CommandError(f"UnknownFault: {command.get('fault')!r}")
            self.plant.press_key(fault, bool(command.get("pressed", True)))
        elif kind == "pot":
            try:
                self.plant.set_target(str(command.get("target", "")), float(command["value"]))
            except (KeyError, TypeError):
                raise CommandError("pot command needs 'target' and numeric 'value'") from None
            except RangeOverflow as exc:
                raise CommandError(f"ValueOutOfRange: {exc}") from None
            except PlantError as exc:
                raise CommandError(str(exc)) from None
        elif kind == "clear_faults":
            try:
                self.plant.reset_faults()
            except PlantError as exc:
                raise CommandError(f"KeysStillActive: {exc}") from None
        elif kind == "preset":
            preset = self.presets.get(command.get("name", ""))
            if preset is None:
                raise CommandError(f"UnknownPreset: {command.get('name')!r}")
            self.plant.load_preset(preset)
        else:
            raise CommandError(f"unknown command type {kind!r}")

    def _drain_commands(self) -> None:
        while True:
            try:
                command, future = self.commands.get_nowait()
            except queue.Empty:
                return
            try:
                self._apply_command(command)
            except CommandError as exc:
                future.set_exception(exc)
            else:
                future.set_result(None)

    # -- Clock driving --------------------------------------------------------

    def advance(self, sim_ms: float) -> None:
        """Advance simulated time, firing ticks and poll cycles on schedule."""
        with self._lock:
            end = self.now_ms + sim_ms
            while True:
                next_event = min(self._next_tick_ms, self._next_poll_ms)
                if next_event > end:
                    break
                self.now_ms = next_event
                if next_event == self._next_poll_ms:
                    if self.pre_poll_hook is not None:
                        self.pre_poll_hook(self.now_ms)
                    self.poller.poll_cycle(self.now_ms)
                    self._next_poll_ms += self.config.poll.poll_period_ms
                if next_event == self._next_tick_ms:
                    self._drain_commands()
                    self.plant.tick(self.config.tick_ms / 1000.0)
                    self._next_tick_ms += self.config.tick_ms
            self.now_ms = end

    def run(self, stop: threading.Event) -> None:
        """Wall-clock driver loop; sim time = wall time x time_scale."""
        wall_tick_s = self.config.tick_ms / 1000.0 / self.config.time_scale
        last = time.monotonic()
        while not stop.is_set():
            stop.wait(wall_tick_s)
            now = time.monotonic()
            self.advance((now - last) * 1000.0 * self.config.time_scale)
            last = now

    def start(self) -> threading.Event:
        """Spawn the driver thread; returns the event that stops it."""
        stop = threading.Event()
        thread = threading.Thread(target=self.run, args=(stop,), daemon=True,
                                  name="bench-driver")
        thread.start()
        return stop

    # -- Views ----------------------------------------------------------------

    def snapshot_message(self) -> dict | None:
        """The monitoring-bridge snapshot message for the current mirror."""
        snapshot = self.mirror.snapshot
        if snapshot is None:
            return None
        with self._lock:
            now_ms = self.now_ms
        return {
            "type": "snapshot",
            "cycle": snapshot.cycle,
            "engineering": {
                label: round(ev.magnitude, 2)
                for label, ev in snapshot.engineering.items()
            },
            "alarms": sorted(f.key for f in snapshot.alarms),
            "status": snapshot.status.name,
            "staleness_ms": max(0.0, snapshot.staleness_ms(now_ms)),
            "poll_failures_since_update": self.mirror.poll_failures_since_update,
            "link_stats": self.link.stats.as_dict(),
        }

    def load_preset(self, name: str) -> None:
        self.submit({"type": "preset", "name": name})
