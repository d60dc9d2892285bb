"""Operator models and command sources.

A command source turns time and the last rendered force into the operator's
desired velocity.  Four kinds exist: a preset trapezoid profile, a recorded
command replay, a spring-damper reaction model (the source that can close an
unstable loop), and a live channel fed by the teleoperation service.
"""

from __future__ import annotations

import csv
import threading
from pathlib import Path

import numpy as np

from .dynamics import as_vector
from .errors import ContractError, ScenarioError

# Stylus-to-command gain: 1 cm of displacement commands 2 m/s.
STYLUS_GAIN = 2.0


class SpringDamperOperator:
    """Second-order reaction to force feedback around a set velocity.

    xvd_ddot + p*xvd_dot + q*(x_vd - x_v0) = F, integrated semi-implicitly.
    """

    def __init__(self, p: float, q: float, set_velocity, initial=None):
        if p < 0 or q < 0:
            raise ContractError("spring-damper coefficients must be nonnegative")
        self.p = float(p)
        self.q = float(q)
        self.set_velocity = as_vector(set_velocity, name="set_velocity")
        d = self.set_velocity.shape[0]
        self.x_vd = (
            as_vector(initial, d=d, name="initial command")
            if initial is not None
            else self.set_velocity.copy()
        )
        self.rate = np.zeros(d)

    def step(self, force, dt: float) -> np.ndarray:
        f = as_vector(force, d=self.set_velocity.shape[0], name="force")
        accel = f - self.p * self.rate - self.q * (self.x_vd - self.set_velocity)
        self.rate = self.rate + dt * accel
        self.x_vd = self.x_vd + dt * self.rate
        return self.x_vd.copy()


class TrapezoidCommand:
    """Piecewise-linear rise/hold/fall profile on one axis; ignores the force."""

    def __init__(self, rise: float, hold: float, fall: float, peak: float, axis: int = 0, d: int = 1):
        if rise <= 0 or hold < 0 or fall <= 0:
            raise ContractError("trapezoid segments must be positive (hold may be zero)")
        if not 0 <= axis < d:
            raise ContractError(f"axis {axis} out of range for d={d}")
        self.rise, self.hold, self.fall = float(rise), float(hold), float(fall)
        self.peak, self.axis, self.d = float(peak), axis, d

    def value(self, t: float) -> float:
        if t < 0:
            return 0.0
        if t < self.rise:
            return self.peak * t / self.rise
        if t < self.rise + self.hold:
            return self.peak
        if t < self.rise + self.hold + self.fall:
            return self.peak * (self.rise + self.hold + self.fall - t) / self.fall
        return 0.0

    def sample(self, t: float, force, dt: float) -> np.ndarray:
        out = np.zeros(self.d)
        out[self.axis] = self.value(t)
        return out


class ReplayCommand:
    """Zero-order hold over recorded samples; holds the last one when exhausted."""

    def __init__(self, times, samples):
        self.times = np.asarray(times, dtype=float)
        self.samples = np.atleast_2d(np.asarray(samples, dtype=float))
        if self.times.ndim != 1 or self.samples.shape[0] != self.times.shape[0]:
            raise ContractError("replay times and samples must have matching length")
        if self.times.shape[0] == 0:
            raise ContractError("replay must contain at least one sample")
        if np.any(np.diff(self.times) <= 0):
            raise ContractError("replay timestamps must be strictly increasing")
        self.exhausted = False

    def sample(self, t: float, force, dt: float) -> np.ndarray:
        idx = int(np.searchsorted(self.times, t, side="right")) - 1
        if idx < 0:
            return np.zeros(self.samples.shape[1])
        if idx >= self.times.shape[0] - 1 and t > self.times[-1]:
            self.exhausted = True
        return self.samples[min(idx, self.times.shape[0] - 1)].copy()


class ModelCommand:
    """Adapter driving a spring-damper operator inside the loop."""

    def __init__(self, operator: SpringDamperOperator):
        self.operator = operator

    def sample(self, t: float, force, dt: float) -> np.ndarray:
        return self.operator.step(force, dt)


class LiveCommand:
    """Latest stylus displacement from the service, mapped by the command gain.

    Single producer (the wire endpoint) and single consumer (the loop); the
    lock only guards the sample swap.
    """

    def __init__(self, d: int, max_disp_cm: float = 5.0):
        self.d = d
        self.max_disp_cm = float(max_disp_cm)
        self._lock = threading.Lock()
        self._disp_cm = np.zeros(d)

    def set_displacement(self, disp_cm) -> None:
        disp = as_vector(disp_cm, d=self.d, name="stylus displacement")
        disp = np.clip(disp, -self.max_disp_cm, self.max_disp_cm)
        with self._lock:
            self._disp_cm = disp

    def sample(self, t: float, force, dt: float) -> np.ndarray:
        with self._lock:
            return STYLUS_GAIN * self._disp_cm.copy()


def load_replay_csv(path) -> ReplayCommand:
    """Load a replay file: CSV with header t,vx[,vy], seconds and m/s."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0].strip() != "t" or len(header) not in (2, 3):
            raise ScenarioError(f"replay file {path} must start with header t,vx[,vy]")
        rows = [[float(x) for x in row] for row in reader if row]
    data = np.asarray(rows, dtype=float)
    if data.size == 0:
        raise ScenarioError(f"replay file {path} has no samples")
    return ReplayCommand(times=data[:, 0], samples=data[:, 1:])
