"""Sequential synthesis: reference controller, safe filtering, force projection."""

import numpy as np
import pytest

from hsa_teleop.barriers import HalfPlane, cbf_row, evaluate
from hsa_teleop.dynamics import RobotState
from hsa_teleop.energy import EnergyTank, StabilityParams, l2_force_bound, passivity_row
from hsa_teleop.errors import CbfInfeasibleError
from hsa_teleop.optkernel import AffineRow
from hsa_teleop.scf import (
    ActiveCase,
    reference_control,
    scf_no_l2_step,
    scf_passivity_step,
    scf_step,
)

WALL = HalfPlane(normal=[1.0], offset=6.0)


def wall_rows(state, k1=1.0, k2=2.0):
    return [cbf_row(evaluate(WALL, state.position), state, k1, k2)]


def test_reference_zero_when_tracking():
    s = RobotState(position=[0.0], velocity=[0.7])
    assert reference_control(s, [0.7], 0.5)[0] == 0.0


def test_reference_formula():
    s = RobotState(position=[0.0], velocity=[0.0])
    assert reference_control(s, [1.0], 0.5)[0] == pytest.approx(2.0)


def test_free_space_tracking_returns_reference_exactly():
    s = RobotState(position=[0.0], velocity=[0.4])
    d = scf_step(s, [0.4], [], EnergyTank(0.2), StabilityParams())
    assert d.active_case is ActiveCase.SCF
    assert d.u[0] == 0.0
    assert d.force[0] == 0.0


def test_free_space_reduction_u_equals_uref():
    # Large tank and small k_v keep the budget row inactive: u == u_ref bitwise.
    s = RobotState(position=[0.0], velocity=[0.1])
    p = StabilityParams(k_v=0.1, e_max=5.0)
    d = scf_step(s, [0.5], [], EnergyTank(5.0), p)
    u_ref = reference_control(s, [0.5], p.dt_ref)
    assert np.array_equal(d.u, u_ref)
    assert np.all(d.force == 0.0)


def test_wall_contact_caps_control_and_renders_repulsion():
    s = RobotState(position=[5.99], velocity=[0.4])
    p = StabilityParams(k_v=1.0, e_max=0.2)
    d = scf_step(s, [0.4], wall_rows(s), EnergyTank(0.2), p)
    row = wall_rows(s)[0]
    assert row.slack(d.u) >= -1e-9
    assert d.u[0] < reference_control(s, [0.4], p.dt_ref)[0] + 1e-12
    assert d.force[0] < 0.0  # pushes the operator away from the wall
    bound = l2_force_bound(s, [0.4], EnergyTank(0.2), d.u, p)
    assert float(d.force @ d.force) <= bound + 1e-7


def test_force_respects_budget_on_random_instances():
    rng = np.random.default_rng(17)
    p = StabilityParams(k=1.2, k_v=2.0, e_max=0.5)
    for _ in range(200):
        s = RobotState(position=rng.normal(0, 1, 2), velocity=rng.normal(0, 1, 2))
        cmd = rng.normal(0, 1, 2)
        tank = EnergyTank(float(rng.uniform(0, 0.5)))
        rows = [AffineRow(coeff=rng.normal(0, 1, 2), constant=float(rng.normal(1.0, 1.0)))]
        d = scf_step(s, cmd, rows, tank, p)
        if d.active_case is ActiveCase.FALLBACK:
            assert np.all(d.force == 0.0)
            continue
        bound = l2_force_bound(s, cmd, tank, d.u, p)
        assert float(d.force @ d.force) <= bound + 1e-7


def test_local_optimality_probe():
    # Perturbing u along feasible directions never beats the QP answer.
    rng = np.random.default_rng(23)
    p = StabilityParams(k_v=1.0, e_max=0.2)
    s = RobotState(position=[5.9], velocity=[0.4])
    rows = wall_rows(s)
    d = scf_step(s, [0.4], rows, EnergyTank(0.1), p)
    u_ref = reference_control(s, [0.4], p.dt_ref)
    from hsa_teleop.energy import l2_feasibility_row

    all_rows = rows + [l2_feasibility_row(s, [0.4], EnergyTank(0.1), p)]
    base = float((d.u - u_ref) @ (d.u - u_ref))
    for _ in range(50):
        du = rng.choice([-1.0, 1.0]) * np.array([1e-4])
        cand = d.u + du
        if all(r.slack(cand) >= 0 for r in all_rows):
            assert float((cand - u_ref) @ (cand - u_ref)) >= base - 1e-9


def test_fallback_zeroes_force_and_keeps_safety():
    # Synthetic conflict: safety demands u >= 5 while the budget row caps u <= 0.
    s = RobotState(position=[0.0], velocity=[1.0])
    p = StabilityParams(k=1.0, k_v=1.0, dt_ref=0.5, e_max=0.2)
    rows = [AffineRow(coeff=np.array([1.0]), constant=-5.0)]
    d = scf_step(s, [0.0], rows, EnergyTank(0.0), p)
    assert d.active_case is ActiveCase.FALLBACK
    assert not d.feasible
    assert np.all(d.force == 0.0)
    assert d.u[0] == pytest.approx(5.0)


def test_hard_error_when_safety_rows_conflict():
    s = RobotState(position=[0.0], velocity=[0.0])
    rows = [
        AffineRow(coeff=np.array([1.0]), constant=-1.0),
        AffineRow(coeff=np.array([-1.0]), constant=-1.0),
    ]
    with pytest.raises(CbfInfeasibleError):
        scf_step(s, [0.0], rows, EnergyTank(0.0), StabilityParams())


def test_no_l2_step_renders_raw_discrepancy():
    s = RobotState(position=[5.99], velocity=[0.4])
    d = scf_no_l2_step(s, [0.4], wall_rows(s), EnergyTank(0.0), StabilityParams())
    u_ref = reference_control(s, [0.4], 0.5)
    np.testing.assert_allclose(d.force, d.u - u_ref)


# --- passivity baseline --------------------------------------------------------


def test_passivity_keeps_reference_force_when_admissible():
    # x_vd = 0 and braking control: F_ref admissible, returned unchanged.
    s = RobotState(position=[0.0], velocity=[1.0])
    p = StabilityParams()
    d = scf_passivity_step(s, [0.0], [], EnergyTank(0.1), p)
    u_ref = reference_control(s, [0.0], p.dt_ref)
    con = passivity_row(s, [0.0], p)
    assert con.admissible(d.u - u_ref, d.u)
    np.testing.assert_allclose(d.force, d.u - u_ref)
    assert d.active_case is ActiveCase.PASSIVITY_BASELINE


def test_passivity_projection_matches_grid_search():
    rng = np.random.default_rng(31)
    p = StabilityParams(k=1.0, k_v=1.0, e_max=0.2)
    checked = 0
    while checked < 60:
        s = RobotState(position=rng.normal(0, 1, 2), velocity=rng.normal(0, 0.7, 2))
        cmd = rng.normal(0, 0.7, 2)
        d = scf_passivity_step(s, cmd, [], EnergyTank(float(rng.uniform(0, 0.2))), p)
        if d.active_case is ActiveCase.FALLBACK:
            continue
        u_ref = reference_control(s, cmd, p.dt_ref)
        f_ref = d.u - u_ref
        con = passivity_row(s, cmd, p)
        # dense grid over the admissible set around the candidates
        span = 1.5 * (1 + np.linalg.norm(f_ref) + np.linalg.norm(d.force))
        axes = np.linspace(-span, span, 601)
        gx, gy = np.meshgrid(axes + f_ref[0], axes + f_ref[1])
        pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
        center, radius_sq = con.ball(d.u)
        ok = np.sum((pts - center) ** 2, axis=1) <= radius_sq
        if not ok.any():
            continue
        pts = pts[ok]
        idx = int(np.argmin(np.sum((pts - f_ref) ** 2, axis=1)))
        best = pts[idx]
        assert np.linalg.norm(d.force - f_ref) <= np.linalg.norm(best - f_ref) + 2e-3
        checked += 1


def test_passivity_empty_ball_falls_back_to_zero_force():
    # v.u = 1.0 exceeds ||x_vd||^2/(4k) = 0.5625: no admissible force exists.
    s = RobotState(position=[0.0], velocity=[1.0])
    p = StabilityParams(k=1.0, k_v=1.0, e_max=0.0)
    d = scf_passivity_step(s, [1.5], [], EnergyTank(0.0), p)
    assert d.active_case is ActiveCase.FALLBACK
    assert np.all(d.force == 0.0)
