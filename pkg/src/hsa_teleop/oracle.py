"""Independent numeric oracles for the two solvers.

These deliberately avoid the closed-form case machinery: the joint-synthesis
oracle minimizes the reduced cost in u by seeded multi-restart descent, and
the projection oracle is a two-stage dense grid search.  They exist to certify
the production solvers on randomized instances, both in the test suite and
through the `oracle-check` CLI verb.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .barriers import HalfPlane, cbf_row, evaluate
from .dynamics import RobotState
from .energy import EnergyTank, StabilityParams
from .jcf import JcfWeights, jcf_step, kkt_residual
from .optkernel import AffineRow
from .scf import reference_control


@dataclass(frozen=True)
class JcfInstance:
    state: RobotState
    x_vd: np.ndarray
    rows: tuple
    tank: EnergyTank
    params: StabilityParams

    @property
    def u_ref(self) -> np.ndarray:
        return reference_control(self.state, self.x_vd, self.params.dt_ref)

    @property
    def c1(self) -> float:
        k = self.params.k
        return (1.0 / k**2) * (
            2.0 * k * self.tank.level / self.params.dt_ref + float(self.x_vd @ self.x_vd)
        )

    @property
    def c2vec(self) -> np.ndarray:
        return (2.0 * self.params.k_v / self.params.k) * self.state.velocity


def random_jcf_instance(rng: np.random.Generator, d: int | None = None) -> JcfInstance:
    """Random state, command, one barrier, and tank level for oracle checks."""
    if d is None:
        d = int(rng.integers(1, 3))
    velocity = rng.normal(0.0, 1.0, size=d)
    position = np.zeros(d)
    x_vd = rng.normal(0.0, 1.0, size=d)
    normal = rng.normal(0.0, 1.0, size=d)
    normal /= max(np.linalg.norm(normal), 1e-9)
    # Wall placed so the barrier value sits in (0.01, 1.5): close enough to bind.
    h0 = float(rng.uniform(0.01, 1.5))
    wall = HalfPlane(normal=normal, offset=float(normal @ position) + h0)
    state = RobotState(position=position, velocity=velocity)
    row = cbf_row(evaluate(wall, position), state, k1=1.0, k2=2.0)
    params = StabilityParams(
        k=float(rng.uniform(0.5, 2.0)),
        k_v=float(rng.uniform(0.5, 5.0)),
        dt_ref=0.5,
        e_max=0.5,
    )
    tank = EnergyTank(level=float(rng.uniform(0.0, 0.3)))
    return JcfInstance(state=state, x_vd=x_vd, rows=(row,), tank=tank, params=params)


def jcf_oracle_cost(inst: JcfInstance, u: np.ndarray, weights: JcfWeights) -> float:
    """Joint cost with the force block eliminated.

    For fixed u the optimal force is the projection of u - u_ref onto the
    budget ball, so the second cost term is the squared projection distance.
    """
    du = u - inst.u_ref
    budget = inst.c1 - float(inst.c2vec @ u)
    if budget < 0.0:
        return np.inf
    dist = max(0.0, float(np.linalg.norm(du)) - np.sqrt(budget))
    return weights.w_cbf * float(du @ du) + weights.w_l2 * dist * dist


def jcf_oracle_force(inst: JcfInstance, u: np.ndarray) -> np.ndarray:
    du = u - inst.u_ref
    budget = max(0.0, inst.c1 - float(inst.c2vec @ u))
    nn = float(du @ du)
    if nn <= budget or nn == 0.0:
        return du
    return du * np.sqrt(budget / nn)


def solve_jcf_numeric(
    inst: JcfInstance, weights: JcfWeights = JcfWeights(), restarts: int = 6
) -> tuple[np.ndarray, np.ndarray, float]:
    """Multi-restart descent on the reduced joint problem; returns (u, F, cost)."""
    d = inst.state.d
    u_ref = inst.u_ref
    cons = [
        {"type": "ineq", "fun": (lambda u, r=r: r.slack(u))} for r in inst.rows
    ] + [{"type": "ineq", "fun": lambda u: inst.c1 - float(inst.c2vec @ u)}]

    span = 3.0 * (1.0 + float(np.linalg.norm(u_ref)))
    axes = [np.linspace(-span, span, 25) + u_ref[i] for i in range(d)]
    grid = (
        np.stack(np.meshgrid(*axes), axis=-1).reshape(-1, d) if d > 1 else axes[0].reshape(-1, 1)
    )
    feasible = [u for u in grid if all(r.slack(u) >= 0 for r in inst.rows)]
    feasible = [u for u in feasible if inst.c1 - float(inst.c2vec @ u) >= 0]
    seeds = sorted(feasible, key=lambda u: jcf_oracle_cost(inst, u, weights))[:restarts]
    if not seeds:
        seeds = [u_ref]

    best_u, best_cost = None, np.inf
    for seed in seeds:
        res = minimize(
            lambda u: jcf_oracle_cost(inst, u, weights),
            np.asarray(seed, dtype=float),
            method="SLSQP",
            constraints=cons,
            options={"maxiter": 200, "ftol": 1e-12},
        )
        if res.x is None:
            continue
        cost = jcf_oracle_cost(inst, res.x, weights)
        if cost < best_cost:
            best_u, best_cost = res.x, cost
    if best_u is None:
        best_u = u_ref
        best_cost = jcf_oracle_cost(inst, u_ref, weights)
    return best_u, jcf_oracle_force(inst, best_u), best_cost


def grid_project(target: np.ndarray, rows: list[AffineRow], span: float = 6.0):
    """Dense grid search refined to a 1e-3 lattice, then a generic descent polish.

    A lattice alone cannot localize a boundary optimum tangentially (the cost
    is flat along the boundary while the feasibility quantization adds noise
    of order dist*step), so the lattice provides the global stage and SLSQP
    provides the local polish.  Both stages are independent of the active-set
    enumeration being certified.  Returns None when the coarse grid finds no
    feasible point or the argmin touches the outer search boundary.
    """
    target = np.asarray(target, dtype=float)
    d = target.shape[0]

    def search(center: np.ndarray, half: float, step: float):
        axes = [np.arange(center[i] - half, center[i] + half + step / 2, step) for i in range(d)]
        if d == 1:
            pts = axes[0].reshape(-1, 1)
        else:
            gx, gy = np.meshgrid(axes[0], axes[1])
            pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
        ok = np.ones(len(pts), dtype=bool)
        for r in rows:
            ok &= pts @ r.coeff + r.constant >= -1e-9
        if not ok.any():
            return None
        pts = pts[ok]
        costs = np.sum((pts - target) ** 2, axis=1)
        return pts[int(np.argmin(costs))]

    best = search(target, span, 0.05)
    if best is None:
        return None
    refined = search(best, 0.06, 2e-3)
    if refined is not None:
        best = refined
    if np.any(np.abs(best - target) >= span - 0.1):
        return None
    cons = [{"type": "ineq", "fun": (lambda u, r=r: r.slack(u))} for r in rows]
    res = minimize(
        lambda u: float(np.sum((u - target) ** 2)),
        best,
        method="SLSQP",
        constraints=cons,
        options={"maxiter": 300, "ftol": 1e-14},
    )
    if res.x is None:
        return None
    polished = np.asarray(res.x, dtype=float)
    ok = all(r.slack(polished) >= -1e-9 for r in rows)
    improved = float(np.sum((polished - target) ** 2)) <= float(np.sum((best - target) ** 2)) + 1e-12
    return polished if (ok and improved) else best


@dataclass(frozen=True)
class OracleReport:
    instances: int
    max_cost_gap: float
    max_point_dist: float
    max_kkt_residual: float

    @property
    def ok(self) -> bool:
        return (
            self.max_cost_gap <= 1e-4
            and self.max_point_dist <= 1e-3
            and self.max_kkt_residual <= 1e-6
        )


def run_jcf_oracle_suite(
    n: int = 200, seed: int = 7, weights: JcfWeights = JcfWeights()
) -> OracleReport:
    """Certify the case enumeration against the numeric oracle on n random instances."""
    rng = np.random.default_rng(seed)
    max_gap = 0.0
    max_dist = 0.0
    max_res = 0.0
    for _ in range(n):
        inst = random_jcf_instance(rng)
        decision = jcf_step(
            inst.state, inst.x_vd, list(inst.rows), inst.tank, inst.params, weights
        )
        res = kkt_residual(
            decision.u, decision.force, inst.u_ref, list(inst.rows), inst.c1, inst.c2vec, weights
        )
        max_res = max(max_res, res)
        u_oracle, _, oracle_cost = solve_jcf_numeric(inst, weights)
        gap = decision.cost - oracle_cost  # enumeration must never be worse
        max_gap = max(max_gap, gap)
        if oracle_cost <= decision.cost + 1e-6:
            dist = float(np.linalg.norm(decision.u - u_oracle))
            max_dist = max(max_dist, dist)
    return OracleReport(
        instances=n, max_cost_gap=max_gap, max_point_dist=max_dist, max_kkt_residual=max_res
    )
