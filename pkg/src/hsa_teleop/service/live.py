"""Live teleoperation session: one simulation loop thread, many wire clients.

The loop runs at real-time pace and never blocks on the network: inbound
messages arrive through a bounded queue drained once per step, and outbound
snapshots are pushed to per-client asyncio queues via their event loops,
dropping the oldest frame when a client lags.
"""

from __future__ import annotations

import asyncio
import itertools
import math
import queue
import threading
import time
from dataclasses import replace

from ..errors import ContractError
from ..harness import SimEngine, TraceRow
from ..human import LiveCommand
from ..scenario import LiveSpec, Scenario

MAX_CLIENT_BACKLOG = 8
MAX_RATE_HZ = 60.0

_MODES = {
    "scf": {"controller": "scf", "disable_l2": False, "passivity_baseline": False},
    "jcf": {"controller": "jcf", "disable_l2": False, "passivity_baseline": False},
    "scf_passivity": {"controller": "scf", "disable_l2": False, "passivity_baseline": True},
    "scf_no_l2": {"controller": "scf", "disable_l2": True, "passivity_baseline": False},
}

_PARAMS = ("k", "k_v", "dt_ref", "e_max", "w_cbf", "w_l2")


class LiveSession:
    """Owns the engine and the loop thread for the websocket endpoint."""

    def __init__(self, scenario: Scenario, realtime: bool = True):
        if not isinstance(scenario.command, LiveSpec):
            scenario = replace(scenario, command=LiveSpec())
        self.scenario = scenario
        self.engine = SimEngine(scenario)
        self.realtime = realtime
        self._inbox: queue.Queue = queue.Queue(maxsize=256)
        self._clients: dict[int, tuple[asyncio.Queue, asyncio.AbstractEventLoop]] = {}
        self._client_ids = itertools.count(1)
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._send_every = max(1, math.ceil((1.0 / MAX_RATE_HZ) / scenario.dt))

    # -- lifecycle ------------------------------------------------------------

    def start(self) -> None:
        with self._lock:
            if self._thread is not None and self._thread.is_alive():
                return
            self._stop.clear()
            self._thread = threading.Thread(target=self._loop, name="sim-loop", daemon=True)
            self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        thread = self._thread
        if thread is not None:
            thread.join(timeout=2.0)

    # -- client registry ------------------------------------------------------

    def attach(self, loop: asyncio.AbstractEventLoop) -> tuple[int, asyncio.Queue]:
        q: asyncio.Queue = asyncio.Queue()
        with self._lock:
            cid = next(self._client_ids)
            self._clients[cid] = (q, loop)
        self.start()
        return cid, q

    def detach(self, cid: int) -> None:
        with self._lock:
            self._clients.pop(cid, None)

    # -- inbound messages -----------------------------------------------------

    def submit(self, msg: dict) -> dict | None:
        """Queue a client message; returns a warning frame for bad input."""
        kind = msg.get("type")
        if kind not in ("stylus", "param", "mode", "reset"):
            return {"type": "warning", "message": f"unknown message type {kind!r}"}
        try:
            self._inbox.put_nowait(msg)
        except queue.Full:
            return {"type": "warning", "message": "command queue full; message dropped"}
        return None

    def _apply(self, msg: dict) -> None:
        kind = msg["type"]
        engine = self.engine
        if kind == "stylus":
            disp = msg.get("disp_cm")
            if isinstance(engine.source, LiveCommand) and disp is not None:
                try:
                    engine.source.set_displacement(disp)
                except ContractError:
                    pass
        elif kind == "param":
            name, value = msg.get("name"), msg.get("value")
            if name not in _PARAMS:
                return
            try:
                value = float(value)
                if name in ("w_cbf", "w_l2"):
                    engine.weights = replace(engine.weights, **{name: value})
                else:
                    engine.params = replace(engine.params, **{name: value})
            except (TypeError, ValueError, ContractError):
                return
        elif kind == "mode":
            mode = _MODES.get(msg.get("controller"))
            if mode is not None:
                engine.controller = mode["controller"]
                engine.disable_l2 = mode["disable_l2"]
                engine.passivity_baseline = mode["passivity_baseline"]
        elif kind == "reset":
            engine.reset()

    # -- loop -----------------------------------------------------------------

    def config_echo(self) -> dict:
        engine = self.engine
        if engine.disable_l2:
            controller = "scf_no_l2"
        elif engine.passivity_baseline:
            controller = "scf_passivity"
        else:
            controller = engine.controller
        return {
            "controller": controller,
            "k": engine.params.k,
            "k_v": engine.params.k_v,
            "dt_ref": engine.params.dt_ref,
            "e_max": engine.params.e_max,
            "w_cbf": engine.weights.w_cbf,
            "w_l2": engine.weights.w_l2,
        }

    def _snapshot(self, row: TraceRow) -> dict:
        case = row.active_case
        if case.startswith("JCF_"):
            case = case[len("JCF_"):]
        return {
            "type": "state",
            "t": row.t,
            "p": list(row.position),
            "v": list(row.velocity),
            "x_vd": list(row.x_vd),
            "F": list(row.force),
            "E": row.tank_level,
            "h_min": row.h_min,
            "case": case,
            "ledger_margin": row.ledger_margin,
            "beta_extra": row.beta_extra,
            "feasible": row.feasible,
            "config": self.config_echo(),
        }

    def _broadcast(self, snap: dict) -> None:
        with self._lock:
            clients = list(self._clients.values())
        for q, loop in clients:
            def push(q=q, snap=snap):
                while q.qsize() >= MAX_CLIENT_BACKLOG:
                    try:
                        q.get_nowait()
                    except asyncio.QueueEmpty:
                        break
                q.put_nowait(snap)
            try:
                loop.call_soon_threadsafe(push)
            except RuntimeError:
                continue  # client loop already closed

    def _loop(self) -> None:
        dt = self.scenario.dt
        next_tick = time.monotonic()
        while not self._stop.is_set():
            while True:
                try:
                    self._apply(self._inbox.get_nowait())
                except queue.Empty:
                    break
            row = self.engine.step()
            if self.engine.step_index % self._send_every == 0:
                self._broadcast(self._snapshot(row))
            if self.realtime:
                next_tick += dt
                delay = next_tick - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                else:
                    next_tick = time.monotonic()
