"""Scenario-driven closed-loop simulation and trace tooling.

One engine step: sample the command source, build the safety rows, dispatch
to the configured controller, account the ledger and tank, record a row, and
advance the plant.  Runs are deterministic: the same scenario produces
byte-identical trace files.
"""

from __future__ import annotations

import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .barriers import cbf_row, evaluate
from .dynamics import step as plant_step
from .energy import (
    EnergyTank,
    L2Ledger,
    fallback_beta_increment,
    ledger_check,
    storage,
    tank_update,
)
from .errors import ContractError
from .jcf import jcf_step
from .scenario import Scenario
from .scf import (
    ActiveCase,
    ControlDecision,
    reference_control,
    scf_no_l2_step,
    scf_passivity_step,
    scf_step,
)


@dataclass(frozen=True)
class TraceRow:
    t: float
    position: np.ndarray
    velocity: np.ndarray
    x_vd: np.ndarray
    u_ref: np.ndarray
    u: np.ndarray
    force: np.ndarray
    h_min: float
    tank_level: float
    tank_flow: float
    ledger_margin: float
    beta_extra: float
    active_case: str
    feasible: bool


class SimEngine:
    """Owns the mutable loop state; shared by batch runs and the live service."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.params = scenario.stability
        self.weights = scenario.weights
        self.controller = scenario.controller
        self.disable_l2 = scenario.disable_l2
        self.passivity_baseline = scenario.passivity_baseline
        self.reset()

    def reset(self) -> None:
        """Return to the scenario's initial condition, keeping live parameter edits."""
        sc = self.scenario
        self.state = sc.initial_state()
        self.tank = EnergyTank(level=0.0)
        self.ledger = L2Ledger(v0=storage(self.state, self.params), e0=self.tank.level)
        self.source = sc.make_command_source()
        self.prev_force = np.zeros(sc.d)
        self.step_index = 0

    def _dispatch(self, x_vd, rows) -> ControlDecision:
        if self.disable_l2:
            return scf_no_l2_step(self.state, x_vd, rows, self.tank, self.params)
        if self.passivity_baseline:
            return scf_passivity_step(self.state, x_vd, rows, self.tank, self.params)
        if self.controller == "jcf":
            return jcf_step(self.state, x_vd, rows, self.tank, self.params, self.weights)
        return scf_step(self.state, x_vd, rows, self.tank, self.params)

    def step(self) -> TraceRow:
        sc = self.scenario
        t = self.step_index * sc.dt
        x_vd = self.source.sample(t, self.prev_force, sc.dt)
        evals = [evaluate(shape, self.state.position) for shape in sc.barriers]
        h_min = min((ev.value for ev in evals), default=float("inf"))
        rows = [cbf_row(ev, self.state, sc.k1, sc.k2) for ev in evals]
        u_ref = reference_control(self.state, x_vd, self.params.dt_ref)
        decision = self._dispatch(x_vd, rows)
        if decision.active_case is ActiveCase.FALLBACK:
            self.ledger.beta_extra += fallback_beta_increment(
                decision.force, x_vd, self.state, decision.u, sc.dt, self.tank, self.params
            )
        self.ledger.accumulate(decision.force, x_vd, sc.dt)
        audit = ledger_check(self.ledger, self.params)
        self.tank = tank_update(
            self.tank, decision.force, x_vd, self.state, decision.u, sc.dt, self.params
        )
        row = TraceRow(
            t=t,
            position=self.state.position.copy(),
            velocity=self.state.velocity.copy(),
            x_vd=np.asarray(x_vd, dtype=float).copy(),
            u_ref=u_ref,
            u=decision.u.copy(),
            force=decision.force.copy(),
            h_min=h_min,
            tank_level=self.tank.level,
            tank_flow=self.tank.flow,
            ledger_margin=audit.margin,
            beta_extra=self.ledger.beta_extra,
            active_case=decision.active_case.value,
            feasible=decision.feasible,
        )
        self.state = plant_step(self.state, decision.u, sc.dt)
        self.prev_force = decision.force
        self.step_index += 1
        return row


def run(scenario: Scenario) -> list[TraceRow]:
    """Simulate the scenario from start to finish."""
    engine = SimEngine(scenario)
    return [engine.step() for _ in range(scenario.n_steps)]


def sweep(scenario: Scenario, param: str, values, parallel: bool = True) -> dict:
    """Run the scenario once per parameter value; loops are fully isolated."""
    variants = {value: scenario.with_param(param, value) for value in values}
    if not parallel or len(variants) <= 1:
        return {value: run(sc) for value, sc in variants.items()}
    with ThreadPoolExecutor(max_workers=min(4, len(variants))) as pool:
        futures = {value: pool.submit(run, sc) for value, sc in variants.items()}
        return {value: fut.result() for value, fut in futures.items()}


# --- trace serialization -----------------------------------------------------

_AXES = ("x", "y")


def trace_columns(d: int) -> list[str]:
    cols = ["t"]
    for prefix in ("p", "v", "xvd", "uref", "u", "F"):
        cols += [f"{prefix}{_AXES[i]}" for i in range(d)]
    cols += ["h_min", "E", "epsilon", "ledger_margin", "beta_extra", "active_case", "feasible"]
    return cols


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def trace_to_csv(rows: list[TraceRow]) -> str:
    if not rows:
        raise ContractError("cannot serialize an empty trace")
    d = rows[0].position.shape[0]
    out = io.StringIO()
    out.write(",".join(trace_columns(d)) + "\n")
    for row in rows:
        fields = [_fmt(row.t)]
        for vec in (row.position, row.velocity, row.x_vd, row.u_ref, row.u, row.force):
            fields += [_fmt(v) for v in vec]
        fields += [
            _fmt(row.h_min),
            _fmt(row.tank_level),
            _fmt(row.tank_flow),
            _fmt(row.ledger_margin),
            _fmt(row.beta_extra),
            row.active_case,
            "1" if row.feasible else "0",
        ]
        out.write(",".join(fields) + "\n")
    return out.getvalue()


def trace_from_csv(text: str) -> list[TraceRow]:
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    d = 2 if "py" in header else 1
    if header != trace_columns(d):
        raise ContractError("unrecognized trace header")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        vals = [float(x) for x in parts[: 1 + 6 * d + 5]]
        t = vals[0]
        vecs = [np.array(vals[1 + i * d: 1 + (i + 1) * d]) for i in range(6)]
        tail = vals[1 + 6 * d:]
        rows.append(
            TraceRow(
                t=t,
                position=vecs[0],
                velocity=vecs[1],
                x_vd=vecs[2],
                u_ref=vecs[3],
                u=vecs[4],
                force=vecs[5],
                h_min=tail[0],
                tank_level=tail[1],
                tank_flow=tail[2],
                ledger_margin=tail[3],
                beta_extra=tail[4],
                active_case=parts[-2],
                feasible=parts[-1] == "1",
            )
        )
    return rows


def scenario_sidecar(scenario: Scenario) -> str:
    """Metadata document echoing the full scenario next to its trace."""
    return json.dumps(scenario.to_dict(), indent=2, sort_keys=True) + "\n"


# --- trace metrics -----------------------------------------------------------


def force_signal(rows: list[TraceRow]) -> np.ndarray:
    """Signed force for 1-D traces, force magnitude for 2-D."""
    d = rows[0].position.shape[0]
    if d == 1:
        return np.array([row.force[0] for row in rows])
    return np.array([float(np.linalg.norm(row.force)) for row in rows])


def force_envelope(rows: list[TraceRow], window_s: float) -> np.ndarray:
    """Peak-to-peak of the force signal over consecutive windows."""
    dt = rows[1].t - rows[0].t if len(rows) > 1 else 1.0
    w = max(1, int(round(window_s / dt)))
    signal = force_signal(rows)
    n = len(signal) // w
    return np.array([np.ptp(signal[i * w: (i + 1) * w]) for i in range(n)])


@dataclass(frozen=True)
class TraceSummary:
    steps: int
    max_force: float
    mean_force: float
    integral_abs_force: float
    mean_u_dev: float
    mean_force_vel_inner: float
    frac_force_opposing_vel: float
    min_h: float
    max_tank: float
    min_ledger_margin: float
    beta_extra: float
    fallback_steps: int


def trace_summary(rows: list[TraceRow]) -> TraceSummary:
    dt = rows[1].t - rows[0].t if len(rows) > 1 else 1.0
    fmag = np.array([float(np.linalg.norm(r.force)) for r in rows])
    inner = np.array([float(r.force @ r.velocity) for r in rows])
    u_dev = np.array([float(np.linalg.norm(r.u - r.u_ref)) for r in rows])
    return TraceSummary(
        steps=len(rows),
        max_force=float(fmag.max()),
        mean_force=float(fmag.mean()),
        integral_abs_force=float(fmag.sum() * dt),
        mean_u_dev=float(u_dev.mean()),
        mean_force_vel_inner=float(inner.mean()),
        frac_force_opposing_vel=float(np.mean(inner < 0)),
        min_h=float(min(r.h_min for r in rows)),
        max_tank=float(max(r.tank_level for r in rows)),
        min_ledger_margin=float(min(r.ledger_margin for r in rows)),
        beta_extra=rows[-1].beta_extra,
        fallback_steps=sum(r.active_case == ActiveCase.FALLBACK.value for r in rows),
    )


@dataclass(frozen=True)
class CompareReport:
    a: TraceSummary
    b: TraceSummary
    trajectory_dev_max: float
    trajectory_dev_mean: float
    envelope_a: tuple
    envelope_b: tuple
    window_s: float


def compare(
    trace_a: list[TraceRow], trace_b: list[TraceRow], window_s: float = 5.0
) -> CompareReport:
    """Side-by-side metrics for two traces of equal length and timing."""
    if len(trace_a) != len(trace_b):
        raise ContractError("traces must have equal length")
    if trace_a and trace_b:
        if trace_a[0].position.shape != trace_b[0].position.shape:
            raise ContractError("traces must share the same dimension")
        dt_a = trace_a[1].t - trace_a[0].t if len(trace_a) > 1 else None
        dt_b = trace_b[1].t - trace_b[0].t if len(trace_b) > 1 else None
        if dt_a is not None and dt_b is not None and abs(dt_a - dt_b) > 1e-12:
            raise ContractError("traces must share the same dt")
    dev = np.array(
        [float(np.linalg.norm(ra.position - rb.position)) for ra, rb in zip(trace_a, trace_b)]
    )
    return CompareReport(
        a=trace_summary(trace_a),
        b=trace_summary(trace_b),
        trajectory_dev_max=float(dev.max()),
        trajectory_dev_mean=float(dev.mean()),
        envelope_a=tuple(force_envelope(trace_a, window_s)),
        envelope_b=tuple(force_envelope(trace_b, window_s)),
        window_s=window_s,
    )
