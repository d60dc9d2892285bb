"""Storage function, energy tank, force-budget constraints, and the audit ledger.

The stability side of the controller bounds the gain from the operator's
commanded velocity to the rendered force.  A kinetic-energy storage function
V = (k_v/2)||x_v||^2 and an auxiliary tank state E with flow

    eps = (1/(2k))||x_vd||^2 - Vdot - (k/2)||F||^2,   eps >= -E/dt_ref

yield the admissible-force ball

    ||F||^2 <= (1/k^2)(2kE/dt_ref + ||x_vd||^2) - (2k_v/k) x_v.u

whose nonnegativity is itself an affine row in u that the control QP stacks
next to the safety rows.  Integrating the flow gives the running audit:

    int ||F||^2 <= (1/k^2) int ||x_vd||^2 + (2/k) V(0) + E(0) + beta_extra

where beta_extra collects the budget overruns of infeasibility fallbacks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import RobotState, as_vector
from .errors import ContractError
from .optkernel import AffineRow


@dataclass(frozen=True)
class StabilityParams:
    """Gain and bookkeeping constants for the force limiter.

    k sets the closed-loop L2 gain (gamma = 1/k^2), k_v weights the storage
    function, dt_ref is the reference-controller time constant shared by the
    tank terms, and e_max caps the tank.
    """

    k: float = 1.0
    k_v: float = 1.0
    dt_ref: float = 0.5
    e_max: float = 0.2

    def __post_init__(self):
        if not (self.k > 0 and self.k_v > 0 and self.dt_ref > 0 and self.e_max >= 0):
            raise ContractError(
                f"invalid stability params: k={self.k}, k_v={self.k_v}, "
                f"dt_ref={self.dt_ref}, e_max={self.e_max}"
            )

    @property
    def gamma(self) -> float:
        return 1.0 / self.k**2


@dataclass(frozen=True)
class EnergyTank:
    """Tank level E >= 0 and the last applied flow."""

    level: float = 0.0
    flow: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.level) and self.level >= 0.0):
            raise ContractError(f"tank level must be finite and nonnegative, got {self.level}")


@dataclass
class L2Ledger:
    """Running integrals and constants for the gain-bound audit."""

    int_force_sq: float = 0.0
    int_cmd_sq: float = 0.0
    v0: float = 0.0
    e0: float = 0.0
    beta_extra: float = 0.0

    def accumulate(self, force: np.ndarray, x_vd: np.ndarray, dt: float) -> None:
        self.int_force_sq += float(force @ force) * dt
        self.int_cmd_sq += float(x_vd @ x_vd) * dt


@dataclass(frozen=True)
class LedgerAudit:
    holds: bool
    margin: float


def storage(state: RobotState, params: StabilityParams) -> float:
    """Mechanical energy stored in the plant: (k_v/2)||x_v||^2."""
    v = state.velocity
    return 0.5 * params.k_v * float(v @ v)


def storage_rate(state: RobotState, u: np.ndarray, params: StabilityParams) -> float:
    """Analytic Vdot = k_v x_v.u along the plant flow.

    Computed analytically rather than by differencing V so the flow constraint
    is enforced exactly at synthesis time.
    """
    return params.k_v * float(state.velocity @ u)


def l2_force_bound(
    state: RobotState, x_vd, tank: EnergyTank, u, params: StabilityParams
) -> float:
    """Squared-norm budget for the rendered force given the control u.

    May be negative, which signals the caller that the feasibility row was
    violated; negativity is a return condition, not an error.
    """
    cmd = as_vector(x_vd, d=state.d, name="x_vd")
    a = as_vector(u, d=state.d, name="u")
    k = params.k
    return (1.0 / k**2) * (2.0 * k * tank.level / params.dt_ref + float(cmd @ cmd)) - (
        2.0 * params.k_v / k
    ) * float(state.velocity @ a)


def l2_feasibility_row(
    state: RobotState, x_vd, tank: EnergyTank, params: StabilityParams
) -> AffineRow:
    """Affine row in u keeping the force budget nonnegative.

    -2*k*k_v*x_v.u + (2kE/dt_ref + ||x_vd||^2) >= 0; always satisfied by u = 0.
    """
    cmd = as_vector(x_vd, d=state.d, name="x_vd")
    k = params.k
    return AffineRow(
        coeff=-2.0 * k * params.k_v * state.velocity,
        constant=2.0 * k * tank.level / params.dt_ref + float(cmd @ cmd),
    )


def tank_update(
    tank: EnergyTank,
    force,
    x_vd,
    state: RobotState,
    u,
    dt: float,
    params: StabilityParams,
) -> EnergyTank:
    """Advance the tank one step with the realized flow.

    The flow is rate-limited at -E/dt_ref (which force synthesis already
    guarantees up to tolerance, and which caps the drain of fallback steps),
    then the level is clamped to [0, e_max].  Clamping at e_max discards
    surplus energy; clamping at 0 only triggers through round-off.
    """
    f = as_vector(force, d=state.d, name="force")
    cmd = as_vector(x_vd, d=state.d, name="x_vd")
    a = as_vector(u, d=state.d, name="u")
    k = params.k
    eps = (0.5 / k) * float(cmd @ cmd) - storage_rate(state, a, params) - 0.5 * k * float(f @ f)
    eps = max(eps, -tank.level / params.dt_ref)
    level = min(max(tank.level + eps * dt, 0.0), params.e_max)
    return EnergyTank(level=level, flow=eps)


def fallback_beta_increment(
    force,
    x_vd,
    state: RobotState,
    u,
    dt: float,
    tank: EnergyTank,
    params: StabilityParams,
) -> float:
    """Budget a fallback step would have needed beyond what the tank can pay.

    max(0, (k/2)||F||^2 dt + Vdot dt - (1/(2k))||x_vd||^2 dt - E dt/dt_ref);
    accumulating this into the ledger keeps the audit inequality intact
    through safety-first steps.
    """
    f = as_vector(force, d=state.d, name="force")
    cmd = as_vector(x_vd, d=state.d, name="x_vd")
    a = as_vector(u, d=state.d, name="u")
    k = params.k
    needed = (
        0.5 * k * float(f @ f) * dt
        + storage_rate(state, a, params) * dt
        - (0.5 / k) * float(cmd @ cmd) * dt
    )
    available = tank.level * dt / params.dt_ref
    return max(0.0, needed - available)


def ledger_check(ledger: L2Ledger, params: StabilityParams, tol: float = 1e-9) -> LedgerAudit:
    """Audit the running gain bound; margin is RHS - LHS."""
    rhs = (
        params.gamma * ledger.int_cmd_sq
        + (2.0 / params.k) * ledger.v0
        + ledger.e0
        + ledger.beta_extra
    )
    margin = rhs - ledger.int_force_sq
    return LedgerAudit(holds=margin >= -tol, margin=margin)


@dataclass(frozen=True)
class PassivityConstraint:
    """Output-passivity admissible set for the force, given the control.

    Encodes x_vd.F - k||F||^2 >= k_v x_v.u, i.e. the storage rate never
    exceeds the supply extracted from the commanded motion minus the
    dissipation term.  For fixed u this is the closed ball

        ||F - x_vd/(2k)||^2 <= ||x_vd||^2/(4k^2) - (k_v/k) x_v.u,

    which is empty when the right side is negative.
    """

    x_vd: np.ndarray
    velocity: np.ndarray
    k: float
    k_v: float

    def ball(self, u) -> tuple[np.ndarray, float]:
        """Center and squared radius of the admissible-force ball for this u."""
        a = np.asarray(u, dtype=float)
        center = self.x_vd / (2.0 * self.k)
        radius_sq = float(self.x_vd @ self.x_vd) / (4.0 * self.k**2) - (
            self.k_v / self.k
        ) * float(self.velocity @ a)
        return center, radius_sq

    def admissible(self, force, u, tol: float = 1e-9) -> bool:
        f = np.asarray(force, dtype=float)
        a = np.asarray(u, dtype=float)
        lhs = float(self.x_vd @ f) - self.k * float(f @ f)
        return lhs >= self.k_v * float(self.velocity @ a) - tol


def passivity_row(state: RobotState, x_vd, params: StabilityParams) -> PassivityConstraint:
    """Constraint descriptor for the passivity-baseline force step."""
    cmd = as_vector(x_vd, d=state.d, name="x_vd")
    return PassivityConstraint(
        x_vd=cmd, velocity=state.velocity.copy(), k=params.k, k_v=params.k_v
    )
