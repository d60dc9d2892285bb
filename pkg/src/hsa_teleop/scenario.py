"""Scenario documents: what to simulate, with strict parsing.

A scenario is a single TOML document (or the equivalent nested dict) fixing
the dimension, timing, plant start, obstacles, controller and its constants,
and the command source.  Unknown keys anywhere are errors, so typos fail fast
instead of silently running a different experiment.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Union

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .barriers import BarrierShape, Disc, HalfPlane, SuperEllipse, evaluate
from .dynamics import RobotState
from .energy import StabilityParams
from .errors import ScenarioError
from .human import (
    LiveCommand,
    ModelCommand,
    ReplayCommand,
    SpringDamperOperator,
    TrapezoidCommand,
    load_replay_csv,
)
from .jcf import JcfWeights

CONTROLLERS = ("scf", "jcf")


@dataclass(frozen=True)
class TrapezoidSpec:
    rise: float = 4.0
    hold: float = 4.0
    fall: float = 4.0
    peak: float = 0.4
    axis: int = 0


@dataclass(frozen=True)
class ReplaySpec:
    times: tuple = ()
    samples: tuple = ()


@dataclass(frozen=True)
class ModelSpec:
    p: float = 1.0
    q: float = 8.0
    set_velocity: tuple = (0.4,)
    initial: tuple | None = None


@dataclass(frozen=True)
class LiveSpec:
    max_disp_cm: float = 5.0


CommandSpec = Union[TrapezoidSpec, ReplaySpec, ModelSpec, LiveSpec]


@dataclass(frozen=True)
class Scenario:
    name: str
    d: int
    dt: float
    duration: float
    initial_position: tuple
    initial_velocity: tuple
    barriers: tuple = ()
    controller: str = "scf"
    k1: float = 1.0
    k2: float = 2.0
    stability: StabilityParams = StabilityParams()
    weights: JcfWeights = JcfWeights()
    command: CommandSpec = TrapezoidSpec()
    disable_l2: bool = False
    passivity_baseline: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ScenarioError(f"d must be 1 or 2, got {self.d}")
        if not self.dt > 0 or not self.duration > 0:
            raise ScenarioError("dt and duration must be positive")
        if self.controller not in CONTROLLERS:
            raise ScenarioError(f"controller must be one of {CONTROLLERS}, got {self.controller!r}")
        if self.passivity_baseline and self.controller != "scf":
            raise ScenarioError("the passivity baseline replaces the force step of scf only")
        if self.passivity_baseline and self.disable_l2:
            raise ScenarioError("passivity_baseline and disable_l2 are mutually exclusive")
        state = self.initial_state()
        for shape in self.barriers:
            if evaluate(shape, state.position).value <= 0:
                raise ScenarioError("initial state must be strictly inside the safe set")

    def initial_state(self) -> RobotState:
        return RobotState(
            position=np.asarray(self.initial_position, dtype=float),
            velocity=np.asarray(self.initial_velocity, dtype=float),
        )

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def make_command_source(self):
        spec = self.command
        if isinstance(spec, TrapezoidSpec):
            return TrapezoidCommand(
                rise=spec.rise, hold=spec.hold, fall=spec.fall,
                peak=spec.peak, axis=spec.axis, d=self.d,
            )
        if isinstance(spec, ReplaySpec):
            return ReplayCommand(times=np.asarray(spec.times), samples=np.asarray(spec.samples))
        if isinstance(spec, ModelSpec):
            return ModelCommand(
                SpringDamperOperator(
                    p=spec.p, q=spec.q, set_velocity=spec.set_velocity, initial=spec.initial
                )
            )
        if isinstance(spec, LiveSpec):
            return LiveCommand(d=self.d, max_disp_cm=spec.max_disp_cm)
        raise ScenarioError(f"unsupported command spec {type(spec).__name__}")

    def with_param(self, name: str, value) -> "Scenario":
        """Return a copy with one sweepable parameter changed."""
        stability_fields = {"k", "k_v", "dt_ref", "e_max"}
        weight_fields = {"w_cbf", "w_l2"}
        if name in stability_fields:
            return replace(self, stability=replace(self.stability, **{name: float(value)}))
        if name in weight_fields:
            return replace(self, weights=replace(self.weights, **{name: float(value)}))
        if name in {"dt", "duration", "k1", "k2"}:
            return replace(self, **{name: float(value)})
        if name == "controller":
            return replace(self, controller=str(value))
        if name in {"disable_l2", "passivity_baseline"}:
            return replace(self, **{name: _as_bool(value)})
        raise ScenarioError(f"unknown sweepable parameter {name!r}")

    def to_dict(self) -> dict:
        """JSON-able echo of the full scenario (sidecar metadata / wire format)."""
        barriers = []
        for shape in self.barriers:
            if isinstance(shape, HalfPlane):
                barriers.append(
                    {"kind": "half_plane", "normal": list(shape.normal), "offset": shape.offset}
                )
            elif isinstance(shape, Disc):
                barriers.append(
                    {
                        "kind": "disc",
                        "center": list(shape.center),
                        "radius": shape.radius,
                        "robot_radius": shape.robot_radius,
                    }
                )
            elif isinstance(shape, SuperEllipse):
                barriers.append(
                    {
                        "kind": "super_ellipse",
                        "center": list(shape.center),
                        "a": shape.a,
                        "b": shape.b,
                        "r": shape.r,
                    }
                )
        cmd = self.command
        if isinstance(cmd, TrapezoidSpec):
            command = {
                "kind": "trapezoid", "rise": cmd.rise, "hold": cmd.hold,
                "fall": cmd.fall, "peak": cmd.peak, "axis": cmd.axis,
            }
        elif isinstance(cmd, ReplaySpec):
            command = {
                "kind": "replay",
                "samples": [[t, *row] for t, row in zip(cmd.times, cmd.samples)],
            }
        elif isinstance(cmd, ModelSpec):
            command = {
                "kind": "model", "p": cmd.p, "q": cmd.q,
                "set_velocity": list(cmd.set_velocity),
                **({"initial": list(cmd.initial)} if cmd.initial is not None else {}),
            }
        else:
            command = {"kind": "live", "max_disp_cm": cmd.max_disp_cm}
        return {
            "scenario": {
                "name": self.name,
                "d": self.d,
                "dt": self.dt,
                "duration": self.duration,
                "controller": self.controller,
                "seed": self.seed,
                "initial": {
                    "position": list(self.initial_position),
                    "velocity": list(self.initial_velocity),
                },
                "gains": {"k1": self.k1, "k2": self.k2},
                "stability": {
                    "k": self.stability.k,
                    "k_v": self.stability.k_v,
                    "dt_ref": self.stability.dt_ref,
                    "e_max": self.stability.e_max,
                },
                "jcf": {"w_cbf": self.weights.w_cbf, "w_l2": self.weights.w_l2},
                "barriers": barriers,
                "command": command,
                "ablation": {
                    "disable_l2": self.disable_l2,
                    "passivity_baseline": self.passivity_baseline,
                },
            }
        }


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        if value.lower() in ("true", "1", "yes"):
            return True
        if value.lower() in ("false", "0", "no"):
            return False
    raise ScenarioError(f"expected a boolean, got {value!r}")


class _Section:
    """Strict view over one table of the scenario document."""

    def __init__(self, data: dict, path: str):
        if not isinstance(data, dict):
            raise ScenarioError(f"{path} must be a table")
        self._data = dict(data)
        self._path = path

    def take(self, key: str, default=...):
        if key in self._data:
            return self._data.pop(key)
        if default is ...:
            raise ScenarioError(f"missing required key {self._path}.{key}")
        return default

    def section(self, key: str, required: bool = False) -> "_Section | None":
        raw = self.take(key, default=... if required else None)
        if raw is None:
            return None
        return _Section(raw, f"{self._path}.{key}")

    def finish(self) -> None:
        if self._data:
            extras = ", ".join(sorted(self._data))
            raise ScenarioError(f"unknown keys in {self._path}: {extras}")


def _parse_barrier(raw: dict, idx: int) -> BarrierShape:
    sec = _Section(raw, f"scenario.barriers[{idx}]")
    kind = sec.take("kind")
    if kind == "half_plane":
        shape = HalfPlane(normal=sec.take("normal"), offset=sec.take("offset"))
    elif kind == "disc":
        shape = Disc(
            center=sec.take("center"),
            radius=sec.take("radius"),
            robot_radius=sec.take("robot_radius", 0.0),
        )
    elif kind == "super_ellipse":
        shape = SuperEllipse(
            center=sec.take("center"), a=sec.take("a"), b=sec.take("b"), r=sec.take("r")
        )
    else:
        raise ScenarioError(f"unknown barrier kind {kind!r}")
    sec.finish()
    return shape


def _parse_command(raw: dict, base_dir: Path | None) -> CommandSpec:
    sec = _Section(raw, "scenario.command")
    kind = sec.take("kind")
    if kind == "trapezoid":
        spec = TrapezoidSpec(
            rise=float(sec.take("rise", 4.0)),
            hold=float(sec.take("hold", 4.0)),
            fall=float(sec.take("fall", 4.0)),
            peak=float(sec.take("peak", 0.4)),
            axis=int(sec.take("axis", 0)),
        )
    elif kind == "replay":
        samples = sec.take("samples", None)
        csv_path = sec.take("csv", None)
        if (samples is None) == (csv_path is None):
            raise ScenarioError("replay command needs exactly one of 'samples' or 'csv'")
        if csv_path is not None:
            path = Path(csv_path)
            if not path.is_absolute() and base_dir is not None:
                path = base_dir / path
            replay = load_replay_csv(path)
            spec = ReplaySpec(
                times=tuple(replay.times), samples=tuple(map(tuple, replay.samples))
            )
        else:
            rows = [list(map(float, row)) for row in samples]
            spec = ReplaySpec(
                times=tuple(r[0] for r in rows), samples=tuple(tuple(r[1:]) for r in rows)
            )
    elif kind == "model":
        initial = sec.take("initial", None)
        spec = ModelSpec(
            p=float(sec.take("p", 1.0)),
            q=float(sec.take("q", 8.0)),
            set_velocity=tuple(map(float, sec.take("set_velocity"))),
            initial=tuple(map(float, initial)) if initial is not None else None,
        )
    elif kind == "live":
        spec = LiveSpec(max_disp_cm=float(sec.take("max_disp_cm", 5.0)))
    else:
        raise ScenarioError(f"unknown command kind {kind!r}")
    sec.finish()
    return spec


def scenario_from_tree(tree: dict, base_dir: Path | None = None) -> Scenario:
    """Build a Scenario from a parsed document tree, rejecting unknown keys."""
    root = _Section(tree, "document")
    sec = root.section("scenario", required=True)
    root.finish()

    initial = sec.section("initial", required=True)
    gains = sec.section("gains") or _Section({}, "scenario.gains")
    stability = sec.section("stability") or _Section({}, "scenario.stability")
    jcf_sec = sec.section("jcf") or _Section({}, "scenario.jcf")
    ablation = sec.section("ablation") or _Section({}, "scenario.ablation")
    barriers_raw = sec.take("barriers", [])
    command_raw = sec.take("command", {"kind": "trapezoid"})

    scenario = Scenario(
        name=str(sec.take("name")),
        d=int(sec.take("d")),
        dt=float(sec.take("dt", 0.02)),
        duration=float(sec.take("duration")),
        controller=str(sec.take("controller", "scf")),
        seed=int(sec.take("seed", 0)),
        initial_position=tuple(map(float, initial.take("position"))),
        initial_velocity=tuple(map(float, initial.take("velocity"))),
        k1=float(gains.take("k1", 1.0)),
        k2=float(gains.take("k2", 2.0)),
        stability=StabilityParams(
            k=float(stability.take("k", 1.0)),
            k_v=float(stability.take("k_v", 1.0)),
            dt_ref=float(stability.take("dt_ref", 0.5)),
            e_max=float(stability.take("e_max", 0.2)),
        ),
        weights=JcfWeights(
            w_cbf=float(jcf_sec.take("w_cbf", 1.0)), w_l2=float(jcf_sec.take("w_l2", 1.0))
        ),
        barriers=tuple(_parse_barrier(raw, i) for i, raw in enumerate(barriers_raw)),
        command=_parse_command(dict(command_raw), base_dir),
        disable_l2=_as_bool(ablation.take("disable_l2", False)),
        passivity_baseline=_as_bool(ablation.take("passivity_baseline", False)),
    )
    for section in (initial, gains, stability, jcf_sec, ablation, sec):
        section.finish()
    return scenario


def load_scenario(path) -> Scenario:
    """Load a scenario TOML file; unknown keys are errors."""
    path = Path(path)
    with path.open("rb") as fh:
        tree = _toml.load(fh)
    return scenario_from_tree(tree, base_dir=path.parent)


# --- built-in scenarios -----------------------------------------------------

WALL_OFFSET = 6.0


def wall_1d(
    controller: str = "scf",
    k_v: float = 1.0,
    e_max: float = 0.2,
    k: float = 1.0,
    duration: float = 25.0,
    peak: float = 0.4,
    rise: float = 4.0,
    hold: float = 17.0,
    fall: float = 4.0,
    passivity_baseline: bool = False,
    disable_l2: bool = False,
) -> Scenario:
    """Approach a wall 6 m away under a preset trapezoid command."""
    return Scenario(
        name="wall-1d",
        d=1,
        dt=0.02,
        duration=duration,
        initial_position=(0.0,),
        initial_velocity=(0.0,),
        barriers=(HalfPlane(normal=(1.0,), offset=WALL_OFFSET),),
        controller=controller,
        stability=StabilityParams(k=k, k_v=k_v, e_max=e_max),
        command=TrapezoidSpec(rise=rise, hold=hold, fall=fall, peak=peak),
        passivity_baseline=passivity_baseline,
        disable_l2=disable_l2,
    )


def free_1d(controller: str = "scf", k_v: float = 1.0, e_max: float = 0.2) -> Scenario:
    """Obstacle-free tracking of the trapezoid command."""
    return Scenario(
        name="free-1d",
        d=1,
        dt=0.02,
        duration=20.0,
        initial_position=(0.0,),
        initial_velocity=(0.0,),
        barriers=(),
        controller=controller,
        stability=StabilityParams(k_v=k_v, e_max=e_max),
        command=TrapezoidSpec(),
    )


def instability(
    disable_l2: bool = False,
    duration: float = 30.0,
    p: float = 0.05,
    q: float = 25.0,
    set_velocity: float = 0.4,
    k: float = 1.0,
    k_v: float = 1.0,
    e_max: float = 0.2,
    dt_ref: float = 0.1,
) -> Scenario:
    """Spring-damper operator closing the loop against the wall.

    The raw force gain is 1/dt_ref; combined with the one-step loop delay it
    exceeds the operator damping p, so without the force limiter the wall
    contact sustains a bounded oscillation.  The limiter cuts the effective
    gain to ~1 and the envelope decays, with k tuning the decay rate.
    """
    return Scenario(
        name="instability" + ("-no-l2" if disable_l2 else ""),
        d=1,
        dt=0.02,
        duration=duration,
        initial_position=(4.0,),
        initial_velocity=(0.0,),
        barriers=(HalfPlane(normal=(1.0,), offset=WALL_OFFSET),),
        controller="scf",
        stability=StabilityParams(k=k, k_v=k_v, e_max=e_max, dt_ref=dt_ref),
        command=ModelSpec(p=p, q=q, set_velocity=(set_velocity,)),
        disable_l2=disable_l2,
    )


_FIELD_BARRIERS = (
    SuperEllipse(center=(0.0, 3.0), a=4.5, b=1.5, r=0.5),
    SuperEllipse(center=(0.0, -3.0), a=4.5, b=1.5, r=0.5),
    SuperEllipse(center=(13.0, 2.5), a=4.5, b=1.5, r=0.5),
)

# Poles at -3 keep the steep super-ellipse rows from speed-limiting the whole
# arena while still braking well before the half-meter barrier cliff.
_FIELD_GAINS = {"k1": 9.0, "k2": 6.0}


def _field_replay() -> ReplaySpec:
    """Recorded weave through the obstacle corridor, sampled at 10 Hz."""
    segments = [
        (0.0, 1.2, 0.56),
        (3.0, 1.2, -0.8),
        (8.0, 1.08, 0.8),
        (13.0, 0.96, -0.48),
        (16.0, 0.6, 0.0),
    ]
    times, samples = [], []
    t = 0.0
    while t <= 20.0 + 1e-9:
        vx, vy = 0.0, 0.0
        for start, sx, sy in segments:
            if t >= start:
                vx, vy = sx, sy
        times.append(round(t, 3))
        samples.append((vx, vy))
        t += 0.1
    return ReplaySpec(times=tuple(times), samples=tuple(samples))


def field_2d(controller: str = "scf", k_v: float = 1.0, e_max: float = 0.2) -> Scenario:
    """Two-dimensional obstacle field steered by a recorded command replay."""
    return Scenario(
        name="field-2d",
        d=2,
        dt=0.02,
        duration=20.0,
        initial_position=(-8.0, 0.0),
        initial_velocity=(0.0, 0.0),
        barriers=_FIELD_BARRIERS,
        controller=controller,
        stability=StabilityParams(k_v=k_v, e_max=e_max),
        command=_field_replay(),
        **_FIELD_GAINS,
    )


def teleop_2d(controller: str = "scf") -> Scenario:
    """Live-steered variant of the obstacle field for the teleoperation service."""
    return Scenario(
        name="teleop-2d",
        d=2,
        dt=0.02,
        duration=3600.0,
        initial_position=(-8.0, 0.0),
        initial_velocity=(0.0, 0.0),
        barriers=_FIELD_BARRIERS,
        controller=controller,
        command=LiveSpec(),
        **_FIELD_GAINS,
    )


BUILTIN_SCENARIOS = {
    "wall-1d": wall_1d,
    "free-1d": free_1d,
    "instability": instability,
    "field-2d": field_2d,
    "teleop-2d": teleop_2d,
}


def builtin_scenario(name: str) -> Scenario:
    try:
        return BUILTIN_SCENARIOS[name]()
    except KeyError:
        raise ScenarioError(
            f"unknown scenario {name!r}; built-ins: {', '.join(sorted(BUILTIN_SCENARIOS))}"
        ) from None
