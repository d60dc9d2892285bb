"""Barrier fields h(x_p) with analytic derivatives, and the safety row in u.

Each barrier is a twice-differentiable scalar field whose zero-superlevel set
is the safe region.  For a relative-degree-two plant the forward-invariance
condition is affine in the acceleration command, so every barrier contributes
one AffineRow to the controller:

    x_v^T (d2h) x_v + (dh)^T u + k1*h + k2*(dh)^T x_v >= 0
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .dynamics import RobotState, as_vector
from .errors import ContractError, SingularityError
from .optkernel import AffineRow


@dataclass(frozen=True)
class BarrierEval:
    """Value, gradient and Hessian of a barrier field at one position."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray


@dataclass(frozen=True)
class HalfPlane:
    """Safe on the side normal.x <= offset; h = offset - normal.x."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = as_vector(self.normal, name="normal")
        if abs(float(np.linalg.norm(n)) - 1.0) > 1e-9:
            raise ContractError("half-plane normal must have unit norm")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    def evaluate(self, position: np.ndarray) -> BarrierEval:
        d = self.normal.shape[0]
        return BarrierEval(
            value=self.offset - float(self.normal @ position),
            gradient=-self.normal.copy(),
            hessian=np.zeros((d, d)),
        )


@dataclass(frozen=True)
class Disc:
    """Circular obstacle, inflated by the robot radius; h = ||p - c|| - (radius + robot_radius)."""

    center: np.ndarray
    radius: float
    robot_radius: float = 0.0

    def __post_init__(self):
        c = as_vector(self.center, name="center")
        if not self.radius > 0:
            raise ContractError("disc radius must be positive")
        if self.robot_radius < 0:
            raise ContractError("robot radius must be nonnegative")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "robot_radius", float(self.robot_radius))

    def evaluate(self, position: np.ndarray) -> BarrierEval:
        delta = position - self.center
        dist = float(np.linalg.norm(delta))
        if dist < 1e-12:
            raise SingularityError("disc barrier gradient is singular at the obstacle center")
        unit = delta / dist
        d = delta.shape[0]
        hess = (np.eye(d) - np.outer(unit, unit)) / dist
        return BarrierEval(
            value=dist - (self.radius + self.robot_radius),
            gradient=unit,
            hessian=hess,
        )


@dataclass(frozen=True)
class SuperEllipse:
    """Smooth rectangle approximation with half-lengths a, b and corner radius r.

    h = |dx/a|^(2a/r) + |dy/b|^(2b/r) - 1, negative inside the obstacle.
    Absolute-value bases keep fractional exponents real; for even integer
    exponents this equals the plain power form.
    """

    center: np.ndarray
    a: float
    b: float
    r: float

    def __post_init__(self):
        c = as_vector(self.center, d=2, name="center")
        if not (self.a > 0 and self.b > 0 and self.r > 0):
            raise ContractError("super-ellipse parameters a, b, r must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "r", float(self.r))

    def evaluate(self, position: np.ndarray) -> BarrierEval:
        dx, dy = position - self.center
        ea, eb = 2.0 * self.a / self.r, 2.0 * self.b / self.r
        sx, sy = dx / self.a, dy / self.b
        ax, ay = abs(sx), abs(sy)
        value = ax**ea + ay**eb - 1.0
        gx = (ea / self.a) * ax ** (ea - 1.0) * np.sign(sx)
        gy = (eb / self.b) * ay ** (eb - 1.0) * np.sign(sy)
        hxx = (ea * (ea - 1.0) / self.a**2) * ax ** (ea - 2.0) if ax > 0 else 0.0
        hyy = (eb * (eb - 1.0) / self.b**2) * ay ** (eb - 2.0) if ay > 0 else 0.0
        return BarrierEval(
            value=float(value),
            gradient=np.array([gx, gy]),
            hessian=np.diag([hxx, hyy]),
        )


BarrierShape = Union[HalfPlane, Disc, SuperEllipse]


def evaluate(shape: BarrierShape, position) -> BarrierEval:
    """Evaluate a barrier field, its gradient, and its Hessian at a position."""
    p = as_vector(position, name="position")
    return shape.evaluate(p)


def cbf_row(ev: BarrierEval, state: RobotState, k1: float, k2: float) -> AffineRow:
    """Safety inequality row in u for one barrier, for a Hurwitz gain pair (k1, k2) > 0."""
    if not (k1 > 0 and k2 > 0):
        raise ContractError("barrier gains k1, k2 must be positive (Hurwitz pair)")
    v = state.velocity
    constant = float(v @ ev.hessian @ v) + k1 * ev.value + k2 * float(ev.gradient @ v)
    return AffineRow(coeff=ev.gradient.copy(), constant=constant)
