"""Joint control-force synthesis via active-constraint case enumeration.

The joint problem picks the control and the rendered force together:

    min  w_cbf*||u - u_ref||^2 + w_l2*||F - (u - u_ref)||^2
    s.t. safety rows:  g_i.u + c_i >= 0
         force budget: ||F||^2 <= c1 - c2.u

with c1 = (1/k^2)(2kE/dt_ref + ||x_vd||^2) and c2 = (2k_v/k) x_v.  The
problem is convex (the budget is quadratic in F and linear in u), so the
global optimum is the minimum-cost feasible stationary point over the
possible active sets:

  C1  nothing active           -> u = u_ref, F = 0
  C2  rows only                -> F = u - u_ref, u = projection onto the rows
  C3  budget only              -> Lagrange stationarity reduces to a cubic in
                                  the multiplier
  C4  budget + one row         -> eliminate the row by an orthonormal split
                                  u = U_perp u' + grad*u_par, leaving a
                                  quintic in the multiplier
  C5  budget + two rows (d=2)  -> the rows pin u; F is a sphere projection

Each candidate is recovered in closed form from the polynomial roots,
filtered for feasibility, and the cheapest wins.  If no candidate exists the
budget conflicts with safety: keep the safety rows only and zero the force
(FALLBACK), letting the ledger grow its slack term.

The closed forms are derived with the weights carried through symbolically;
at w_cbf = w_l2 = 1 the multiplier polynomials reduce exactly to
`jcf_cubic_coeffs` / `jcf_quintic_coeffs` (up to an overall sign).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import nnls

from .dynamics import RobotState, as_vector
from .energy import EnergyTank, StabilityParams
from .errors import CbfInfeasibleError, ContractError
from .optkernel import (
    AffineRow,
    normalize_row,
    orth_complement,
    qp_closest,
    real_roots,
    rows_feasible,
)
from .scf import ActiveCase, ControlDecision, reference_control

FEAS_TOL = 1e-7
COST_TIE = 1e-10
_CASE_ORDER = {
    ActiveCase.JCF_C1: 1,
    ActiveCase.JCF_C2: 2,
    ActiveCase.JCF_C3: 3,
    ActiveCase.JCF_C4: 4,
    ActiveCase.JCF_C5: 5,
}


@dataclass(frozen=True)
class JcfWeights:
    """Cost weights for the control block and the force block."""

    w_cbf: float = 1.0
    w_l2: float = 1.0

    def __post_init__(self):
        if not (self.w_cbf > 0 and self.w_l2 > 0):
            raise ContractError("joint-synthesis weights must be positive")


@dataclass(frozen=True)
class JcfCandidate:
    u: np.ndarray
    force: np.ndarray
    case_id: ActiveCase
    lam: float | None
    cost: float


def jcf_cubic_coeffs(c1: float, c2, u_ref) -> np.ndarray:
    """Multiplier cubic for the budget-only active set at unit weights.

    Scalarized products: c2_sq = ||c2||^2, c2u = c2.u_ref.  A zero array is
    returned for the fully degenerate branch (c2 = 0 and c1 = c2u).
    """
    c2v = as_vector(c2, name="c2")
    ur = as_vector(u_ref, d=c2v.shape[0], name="u_ref")
    a = float(c2v @ c2v)
    s = float(c2v @ ur)
    return np.array(
        [
            4.0 * a,
            5.0 * a + 16.0 * c1 - 16.0 * s,
            2.0 * a + 16.0 * c1 - 16.0 * s,
            4.0 * (c1 - s),
        ]
    )


def jcf_quintic_coeffs(c2: float, c3: float, c4: float) -> np.ndarray:
    """Multiplier quintic for the budget-plus-one-row active set at unit weights."""
    a = c2 * c2
    return np.array(
        [
            4.0 * a,
            13.0 * a - 16.0 * c4,
            16.0 * a - 48.0 * c4,
            9.0 * a - 16.0 * c3 - 52.0 * c4,
            2.0 * a - 16.0 * c3 - 24.0 * c4,
            -4.0 * c3 - 4.0 * c4,
        ]
    )


def _padd(*polys) -> np.ndarray:
    n = max(len(p) for p in polys)
    out = np.zeros(n)
    for p in polys:
        out[n - len(p):] += p
    return out


def _weighted_cubic(a_sq: float, b: float, w_c: float, w_l: float) -> np.ndarray:
    """Weighted multiplier polynomial for the budget-only case.

    lam^2*a_sq*w_l^2 - 4b*D^2 - 2*a_sq*lam*(w_l+lam)*D with
    D = w_c*w_l + (w_c+w_l)*lam; roots match the unit-weight cubic when
    w_c = w_l = 1 (the arrays differ by an overall sign).
    """
    D = np.array([w_c + w_l, w_c * w_l])
    lam = np.array([1.0, 0.0])
    wl_lam = np.array([1.0, w_l])
    return _padd(
        a_sq * w_l**2 * np.array([1.0, 0.0, 0.0]),
        -4.0 * b * np.polymul(D, D),
        -2.0 * a_sq * np.polymul(np.polymul(lam, wl_lam), D),
    )


def _weighted_quintic(a_sq: float, c3: float, c4: float, w_c: float, w_l: float) -> np.ndarray:
    """Weighted multiplier polynomial for the budget-plus-one-row case."""
    D = np.array([w_c + w_l, w_c * w_l])
    lam = np.array([1.0, 0.0])
    wl_lam = np.array([1.0, w_l])
    wl_lam2 = np.polymul(wl_lam, wl_lam)
    return _padd(
        a_sq * w_l**2 * np.polymul(np.array([1.0, 0.0, 0.0]), wl_lam2),
        4.0 * w_l**2 * c3 * np.polymul(D, D),
        4.0 * c4 * np.polymul(np.polymul(D, D), wl_lam2),
        -2.0 * a_sq * np.polymul(np.polymul(lam, np.polymul(wl_lam2, wl_lam)), D),
    )


def _polish_scalar_root(fun: Callable[[float], float], lam: float, iters: int = 2) -> float:
    """Newton-polish a root of a scalar residual; keep the start on non-improvement."""
    best = lam
    fbest = abs(fun(lam))
    x = lam
    for _ in range(iters):
        h = 1e-7 * (1.0 + abs(x))
        df = (fun(x + h) - fun(x - h)) / (2.0 * h)
        if abs(df) < 1e-300:
            break
        x = x - fun(x) / df
        fx = abs(fun(x))
        if fx < fbest:
            best, fbest = x, fx
    return best


def _cost(u: np.ndarray, force: np.ndarray, u_ref: np.ndarray, w: JcfWeights) -> float:
    du = u - u_ref
    df = force - du
    return w.w_cbf * float(du @ du) + w.w_l2 * float(df @ df)


def kkt_residual(
    u: np.ndarray,
    force: np.ndarray,
    u_ref: np.ndarray,
    rows: list[AffineRow],
    c1: float,
    c2vec: np.ndarray,
    weights: JcfWeights,
    active_tol: float = 1e-6,
) -> float:
    """Stationarity residual of the joint problem with nonnegative multipliers."""
    du = u - u_ref
    df = force - du
    grad_u = 2.0 * weights.w_cbf * du - 2.0 * weights.w_l2 * df
    grad_f = 2.0 * weights.w_l2 * df
    b = -np.concatenate([grad_u, grad_f])
    cols = []
    quad_slack = (c1 - float(c2vec @ u)) - float(force @ force)
    if abs(quad_slack) <= active_tol * (1.0 + abs(c1)):
        cols.append(np.concatenate([c2vec, 2.0 * force]))
    zeros = np.zeros_like(force)
    for r in rows:
        if abs(r.slack(u)) <= active_tol * (1.0 + float(np.linalg.norm(r.coeff))):
            cols.append(np.concatenate([-r.coeff, zeros]))
    if not cols:
        return float(np.linalg.norm(b))
    m = np.stack(cols, axis=1)
    _, res = nnls(m, b)
    return float(res)


def _c3_candidates(
    u_ref: np.ndarray, c1: float, c2vec: np.ndarray, w: JcfWeights
) -> list[JcfCandidate]:
    a_sq = float(c2vec @ c2vec)
    d = u_ref.shape[0]
    if a_sq <= 1e-18:
        # Stationary velocity: the budget does not couple to u, so the only
        # distinguished point on this branch is the unmodified command.
        return [
            JcfCandidate(
                u=u_ref.copy(),
                force=np.zeros(d),
                case_id=ActiveCase.JCF_C3,
                lam=None,
                cost=0.0,
            )
        ]
    b = c1 - float(c2vec @ u_ref)
    poly = _weighted_cubic(a_sq, b, w.w_cbf, w.w_l2)
    if float(np.abs(poly).max()) == 0.0:
        return []
    w_c, w_l = w.w_cbf, w.w_l2

    def recover(lam: float) -> tuple[np.ndarray, np.ndarray] | None:
        dd = w_c * w_l + (w_c + w_l) * lam
        if abs(dd) < 1e-9 * (1.0 + abs(lam)):
            return None
        u = u_ref - (lam * (w_l + lam) / (2.0 * dd)) * c2vec
        force = -(lam * w_l / (2.0 * dd)) * c2vec
        return u, force

    def residual(lam: float) -> float:
        rec = recover(lam)
        if rec is None:
            return np.inf
        u, force = rec
        return float(force @ force) - (c1 - float(c2vec @ u))

    out = []
    for lam in real_roots(poly).roots:
        lam = _polish_scalar_root(residual, float(lam))
        rec = recover(lam)
        if rec is None:
            continue
        u, force = rec
        out.append(
            JcfCandidate(
                u=u,
                force=force,
                case_id=ActiveCase.JCF_C3,
                lam=lam,
                cost=_cost(u, force, u_ref, w),
            )
        )
    return out


def _c4_candidates_1d(
    row: AffineRow, u_ref: np.ndarray, c1: float, c2vec: np.ndarray, w: JcfWeights
) -> list[JcfCandidate]:
    g = float(row.coeff[0])
    if abs(g) < 1e-12:
        return []
    u = np.array([-row.constant / g])
    r_budget = c1 - float(c2vec @ u)
    if r_budget < -FEAS_TOL:
        return []
    mag = np.sqrt(max(r_budget, 0.0))
    out = []
    for sign in (1.0, -1.0):
        force = np.array([sign * mag])
        out.append(
            JcfCandidate(
                u=u.copy(),
                force=force,
                case_id=ActiveCase.JCF_C4,
                lam=None,
                cost=_cost(u, force, u_ref, w),
            )
        )
    return out


def _c4_candidates_2d(
    row: AffineRow, u_ref: np.ndarray, c1: float, c2vec: np.ndarray, w: JcfWeights
) -> list[JcfCandidate]:
    g = row.coeff
    g_norm = float(np.linalg.norm(g))
    if g_norm < 1e-12:
        return []
    comp = orth_complement(g)
    u_perp = comp.basis[:, 0]
    g_hat = comp.parallel_unit
    # Coordinate of u along g_hat fixed by the active row g.u + c = 0.
    u_par = -row.constant / g_norm
    up_ref = float(u_perp @ u_ref)
    upp_ref = float(g_hat @ u_ref)
    s = u_par - upp_ref
    c2p = float(c2vec @ u_perp)
    c4_base = float(c2vec @ g_hat) * u_par  # budget drain of the pinned component
    w_c, w_l = w.w_cbf, w.w_l2

    def assemble(u_prime: float, f_prime: float, f_par: float) -> tuple[np.ndarray, np.ndarray]:
        u = u_perp * u_prime + g_hat * u_par
        force = u_perp * f_prime + g_hat * f_par
        return u, force

    def budget(u_prime: float) -> float:
        return c1 - c4_base - c2p * u_prime

    out: list[JcfCandidate] = []

    if abs(c2p) <= 1e-12:
        # The velocity has no component along the free direction: the budget
        # radius is fixed and the problem separates.  Optimal split puts
        # f_par = s*(w_c+w_l)/w_l clamped to the circle; both signs of the
        # perpendicular force cost the same.
        rho_sq = budget(0.0)
        if rho_sq < -FEAS_TOL:
            return []
        rho = np.sqrt(max(rho_sq, 0.0))
        f_par = min(max(s * (w_c + w_l) / w_l, -rho), rho)
        fp_sq = max(rho_sq - f_par * f_par, 0.0)
        signs = (1.0,) if fp_sq == 0.0 else (1.0, -1.0)
        for f_prime in (sign * np.sqrt(fp_sq) for sign in signs):
            u_prime = up_ref + w_l * f_prime / (w_c + w_l)
            u, force = assemble(u_prime, f_prime, f_par)
            out.append(
                JcfCandidate(
                    u=u,
                    force=force,
                    case_id=ActiveCase.JCF_C4,
                    lam=None,
                    cost=_cost(u, force, u_ref, w),
                )
            )
        return out

    c3 = s * s
    c4 = c4_base - c1 + c2p * up_ref
    poly = _weighted_quintic(c2p * c2p, c3, c4, w_c, w_l)
    if float(np.abs(poly).max()) == 0.0:
        return []

    def recover(lam: float) -> tuple[float, float, float] | None:
        dd = w_c * w_l + (w_c + w_l) * lam
        if abs(dd) < 1e-9 * (1.0 + abs(lam)) or abs(w_l + lam) < 1e-9 * (1.0 + abs(lam)):
            return None
        f_prime = -(lam * w_l / (2.0 * dd)) * c2p
        u_prime = up_ref - (lam * (w_l + lam) / (2.0 * dd)) * c2p
        f_par = w_l * s / (w_l + lam)
        return u_prime, f_prime, f_par

    def residual(lam: float) -> float:
        rec = recover(lam)
        if rec is None:
            return np.inf
        u_prime, f_prime, f_par = rec
        return f_prime * f_prime + f_par * f_par - budget(u_prime)

    for lam in real_roots(poly).roots:
        lam = _polish_scalar_root(residual, float(lam))
        rec = recover(lam)
        if rec is None:
            continue
        u, force = assemble(*rec)
        out.append(
            JcfCandidate(
                u=u,
                force=force,
                case_id=ActiveCase.JCF_C4,
                lam=lam,
                cost=_cost(u, force, u_ref, w),
            )
        )

    # Multiplier at -w_l: stationarity forces u' = u_ref' and only closes when
    # the pinned component already matches the reference (s = 0); the force
    # along the row gradient is then set by the budget alone.
    if abs(s) <= 1e-9 * (1.0 + abs(upp_ref)):
        f_prime = c2p * (-w_l) / (2.0 * w_l)
        rho_sq = budget(up_ref) - f_prime * f_prime
        if rho_sq >= -FEAS_TOL:
            mag = np.sqrt(max(rho_sq, 0.0))
            for sign in (1.0, -1.0):
                u, force = assemble(up_ref, f_prime, sign * mag)
                out.append(
                    JcfCandidate(
                        u=u,
                        force=force,
                        case_id=ActiveCase.JCF_C4,
                        lam=-w_l,
                        cost=_cost(u, force, u_ref, w),
                    )
                )
    return out


def _c5_candidates(
    rows: list[AffineRow], u_ref: np.ndarray, c1: float, c2vec: np.ndarray, w: JcfWeights
) -> list[JcfCandidate]:
    out = []
    n = len(rows)
    for i in range(n):
        for j in range(i + 1, n):
            a = np.stack([rows[i].coeff, rows[j].coeff])
            det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
            if abs(det) < 1e-12 * max(1.0, float(np.abs(a).max()) ** 2):
                continue
            b = -np.array([rows[i].constant, rows[j].constant])
            u = np.array(
                [
                    (b[0] * a[1, 1] - b[1] * a[0, 1]) / det,
                    (a[0, 0] * b[1] - a[1, 0] * b[0]) / det,
                ]
            )
            r_budget = c1 - float(c2vec @ u)
            if r_budget < -FEAS_TOL:
                continue
            du = u - u_ref
            if float(du @ du) <= r_budget:
                continue  # budget inactive here; covered by the row-projection case
            force = np.sqrt(max(r_budget, 0.0) / max(float(du @ du), 1e-300)) * du
            out.append(
                JcfCandidate(
                    u=u,
                    force=force,
                    case_id=ActiveCase.JCF_C5,
                    lam=None,
                    cost=_cost(u, force, u_ref, w),
                )
            )
    return out


def jcf_step(
    state: RobotState,
    x_vd,
    barrier_rows: list[AffineRow],
    tank: EnergyTank,
    params: StabilityParams,
    weights: JcfWeights = JcfWeights(),
) -> ControlDecision:
    """One joint synthesis step: enumerate cases, return the cheapest feasible candidate."""
    cmd = as_vector(x_vd, d=state.d, name="x_vd")
    u_ref = reference_control(state, cmd, params.dt_ref)
    k = params.k
    c1 = (1.0 / k**2) * (2.0 * k * tank.level / params.dt_ref + float(cmd @ cmd))
    c2vec = (2.0 * params.k_v / k) * state.velocity
    barrier_rows = [normalize_row(r) for r in barrier_rows]

    u_rows = qp_closest(u_ref, barrier_rows)
    if u_rows is None:
        raise CbfInfeasibleError("safety rows alone are infeasible; the vehicle is cornered")

    candidates: list[JcfCandidate] = []
    f_rows = u_rows - u_ref
    if float(f_rows @ f_rows) <= c1 - float(c2vec @ u_rows) + FEAS_TOL:
        at_ref = bool(np.all(np.abs(u_rows - u_ref) <= 1e-12 * (1.0 + np.abs(u_ref))))
        candidates.append(
            JcfCandidate(
                u=u_rows,
                force=f_rows,
                case_id=ActiveCase.JCF_C1 if at_ref else ActiveCase.JCF_C2,
                lam=None,
                cost=_cost(u_rows, f_rows, u_ref, weights),
            )
        )
    candidates += _c3_candidates(u_ref, c1, c2vec, weights)
    for row in barrier_rows:
        if state.d == 1:
            candidates += _c4_candidates_1d(row, u_ref, c1, c2vec, weights)
        else:
            candidates += _c4_candidates_2d(row, u_ref, c1, c2vec, weights)
    if state.d == 2:
        candidates += _c5_candidates(barrier_rows, u_ref, c1, c2vec, weights)

    best: JcfCandidate | None = None
    for cand in candidates:
        if not rows_feasible(cand.u, barrier_rows, FEAS_TOL):
            continue
        r_budget = c1 - float(c2vec @ cand.u)
        if float(cand.force @ cand.force) > r_budget + FEAS_TOL:
            continue
        if best is None or cand.cost < best.cost - COST_TIE:
            best = cand
        elif abs(cand.cost - best.cost) <= COST_TIE:
            key = (
                _CASE_ORDER[cand.case_id],
                float(cand.force @ cand.force),
                tuple(cand.u),
                tuple(cand.force),
            )
            best_key = (
                _CASE_ORDER[best.case_id],
                float(best.force @ best.force),
                tuple(best.u),
                tuple(best.force),
            )
            if key < best_key:
                best = cand

    if best is None:
        return ControlDecision(
            u=u_rows,
            force=np.zeros(state.d),
            active_case=ActiveCase.FALLBACK,
            feasible=False,
            cost=_cost(u_rows, np.zeros(state.d), u_ref, weights),
        )
    residual = kkt_residual(best.u, best.force, u_ref, barrier_rows, c1, c2vec, weights)
    return ControlDecision(
        u=best.u,
        force=best.force,
        active_case=best.case_id,
        feasible=True,
        cost=best.cost,
        kkt_residual=residual,
    )
