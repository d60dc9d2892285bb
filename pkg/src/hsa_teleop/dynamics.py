"""Double-integrator plant: state container and time stepping.

The vehicle is modeled as a point mass whose acceleration is commanded
directly.  Position and velocity live in d dimensions with d in {1, 2};
d is a runtime scenario parameter so the 1-D and 2-D setups share one
code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError


def as_vector(x, d: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float array, optionally checking its length."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ContractError(f"{name} must be 1-D, got shape {v.shape}")
    if d is not None and v.shape[0] != d:
        raise ContractError(f"{name} has dimension {v.shape[0]}, expected {d}")
    if not np.all(np.isfinite(v)):
        raise ContractError(f"{name} has non-finite components: {v}")
    return v


@dataclass(frozen=True)
class RobotState:
    """Position and velocity of the double integrator."""

    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        p = as_vector(self.position, name="position")
        v = as_vector(self.velocity, d=p.shape[0], name="velocity")
        if p.shape[0] not in (1, 2):
            raise ContractError(f"state dimension must be 1 or 2, got {p.shape[0]}")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "velocity", v)

    @property
    def d(self) -> int:
        return self.position.shape[0]


def step(state: RobotState, u, dt: float) -> RobotState:
    """Advance one step with semi-implicit Euler.

    velocity' = velocity + u*dt, position' = position + velocity'*dt.
    Deterministic: identical inputs produce bit-identical outputs.
    """
    if not dt > 0:
        raise ContractError(f"dt must be positive, got {dt}")
    a = as_vector(u, d=state.d, name="acceleration")
    v_next = state.velocity + a * dt
    p_next = state.position + v_next * dt
    return RobotState(position=p_next, velocity=v_next)
