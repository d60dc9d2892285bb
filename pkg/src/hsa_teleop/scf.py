"""Sequential control-force synthesis.

The safe control comes first: project the operator's reference acceleration
onto the safety rows plus the force-budget feasibility row.  The rendered
force is then the command discrepancy u - u_ref projected onto the admissible
force ball.  If safety and the budget row conflict, safety wins: the budget
row is dropped, the force is hard-zeroed, and the step is marked FALLBACK so
the ledger can grow its slack term.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import RobotState, as_vector
from .energy import (
    EnergyTank,
    StabilityParams,
    l2_feasibility_row,
    l2_force_bound,
    passivity_row,
)
from .errors import CbfInfeasibleError
from .optkernel import AffineRow, project_to_ball, qp_closest


class ActiveCase(str, Enum):
    SCF = "SCF"
    JCF_C1 = "JCF_C1"
    JCF_C2 = "JCF_C2"
    JCF_C3 = "JCF_C3"
    JCF_C4 = "JCF_C4"
    JCF_C5 = "JCF_C5"
    JCF_C6 = "JCF_C6"
    FALLBACK = "FALLBACK"
    PASSIVITY_BASELINE = "PASSIVITY_BASELINE"


@dataclass(frozen=True)
class ControlDecision:
    """Synthesized (u, F) pair with case metadata."""

    u: np.ndarray
    force: np.ndarray
    active_case: ActiveCase
    feasible: bool
    cost: float
    kkt_residual: float = 0.0


def reference_control(state: RobotState, x_vd, dt_ref: float) -> np.ndarray:
    """Proportional reference: the acceleration that reaches x_vd in dt_ref."""
    cmd = as_vector(x_vd, d=state.d, name="x_vd")
    return (cmd - state.velocity) / dt_ref


def _safe_control(u_ref: np.ndarray, barrier_rows: list[AffineRow]) -> np.ndarray:
    u = qp_closest(u_ref, barrier_rows)
    if u is None:
        raise CbfInfeasibleError("safety rows alone are infeasible; the vehicle is cornered")
    return u


def scf_step(
    state: RobotState,
    x_vd,
    barrier_rows: list[AffineRow],
    tank: EnergyTank,
    params: StabilityParams,
) -> ControlDecision:
    """One sequential synthesis step: CBF-QP with the budget row, then force projection."""
    cmd = as_vector(x_vd, d=state.d, name="x_vd")
    u_ref = reference_control(state, cmd, params.dt_ref)
    rows = list(barrier_rows) + [l2_feasibility_row(state, cmd, tank, params)]
    u = qp_closest(u_ref, rows)
    if u is None:
        u = _safe_control(u_ref, barrier_rows)
        return ControlDecision(
            u=u,
            force=np.zeros(state.d),
            active_case=ActiveCase.FALLBACK,
            feasible=False,
            cost=float(np.sum((u - u_ref) ** 2)),
        )
    f_ref = u - u_ref
    bound = max(0.0, l2_force_bound(state, cmd, tank, u, params))
    force = project_to_ball(f_ref, bound)
    return ControlDecision(
        u=u,
        force=force,
        active_case=ActiveCase.SCF,
        feasible=True,
        cost=float(np.sum((u - u_ref) ** 2)),
    )


def scf_no_l2_step(
    state: RobotState,
    x_vd,
    barrier_rows: list[AffineRow],
    tank: EnergyTank,
    params: StabilityParams,
) -> ControlDecision:
    """Ablation: safety filtering only, raw discrepancy force with no gain limit."""
    cmd = as_vector(x_vd, d=state.d, name="x_vd")
    u_ref = reference_control(state, cmd, params.dt_ref)
    u = _safe_control(u_ref, barrier_rows)
    return ControlDecision(
        u=u,
        force=u - u_ref,
        active_case=ActiveCase.SCF,
        feasible=True,
        cost=float(np.sum((u - u_ref) ** 2)),
    )


def scf_passivity_step(
    state: RobotState,
    x_vd,
    barrier_rows: list[AffineRow],
    tank: EnergyTank,
    params: StabilityParams,
) -> ControlDecision:
    """Baseline: the force step projects onto the passivity ball instead of the gain ball.

    The admissible set {F : x_vd.F - k||F||^2 >= k_v x_v.u} is a ball centered
    at x_vd/(2k); projecting the reference force onto it is closed-form.  An
    empty ball (budget exceeded by the control step) degrades to F = 0 and is
    marked FALLBACK.
    """
    cmd = as_vector(x_vd, d=state.d, name="x_vd")
    u_ref = reference_control(state, cmd, params.dt_ref)
    rows = list(barrier_rows) + [l2_feasibility_row(state, cmd, tank, params)]
    u = qp_closest(u_ref, rows)
    if u is None:
        u = _safe_control(u_ref, barrier_rows)
        return ControlDecision(
            u=u,
            force=np.zeros(state.d),
            active_case=ActiveCase.FALLBACK,
            feasible=False,
            cost=float(np.sum((u - u_ref) ** 2)),
        )
    constraint = passivity_row(state, cmd, params)
    center, radius_sq = constraint.ball(u)
    cost = float(np.sum((u - u_ref) ** 2))
    if radius_sq < 0.0:
        return ControlDecision(
            u=u,
            force=np.zeros(state.d),
            active_case=ActiveCase.FALLBACK,
            feasible=False,
            cost=cost,
        )
    f_ref = u - u_ref
    force = center + project_to_ball(f_ref - center, radius_sq)
    return ControlDecision(
        u=u,
        force=force,
        active_case=ActiveCase.PASSIVITY_BASELINE,
        feasible=True,
        cost=cost,
    )
