"""Joint synthesis: case enumeration against the numeric oracle and the
multiplier polynomials against their stationarity systems."""

import numpy as np
import pytest

from hsa_teleop.dynamics import RobotState
from hsa_teleop.energy import EnergyTank, StabilityParams
from hsa_teleop.errors import CbfInfeasibleError, ContractError
from hsa_teleop.jcf import (
    JcfWeights,
    _weighted_cubic,
    _weighted_quintic,
    jcf_cubic_coeffs,
    jcf_quintic_coeffs,
    jcf_step,
    kkt_residual,
)
from hsa_teleop.optkernel import AffineRow, real_roots
from hsa_teleop.oracle import random_jcf_instance, run_jcf_oracle_suite, solve_jcf_numeric
from hsa_teleop.scf import ActiveCase, reference_control

UNIT = JcfWeights()


def test_free_space_tracking_is_case_c1():
    s = RobotState(position=[0.0], velocity=[0.4])
    d = jcf_step(s, [0.4], [], EnergyTank(0.1), StabilityParams(), UNIT)
    assert d.active_case is ActiveCase.JCF_C1
    assert d.cost == 0.0
    assert d.u[0] == 0.0 and d.force[0] == 0.0


def test_c1_dominance_returns_reference_exactly():
    rng = np.random.default_rng(3)
    p = StabilityParams(k_v=0.2, e_max=5.0)
    for _ in range(50):
        s = RobotState(position=rng.normal(0, 1, 2), velocity=rng.normal(0, 0.5, 2))
        cmd = rng.normal(0, 0.5, 2)
        # generous rows that the reference always satisfies
        rows = [AffineRow(coeff=rng.normal(0, 1, 2), constant=float(rng.uniform(50, 60)))]
        d = jcf_step(s, cmd, rows, EnergyTank(5.0), p, UNIT)
        u_ref = reference_control(s, cmd, p.dt_ref)
        if d.active_case is ActiveCase.JCF_C1:
            assert np.array_equal(d.u, u_ref)
            assert np.all(d.force == 0.0)
            assert d.cost == 0.0


def test_free_space_step_command_renders_resistance_unlike_scf():
    # Snappy reference (dt_ref 0.25) makes the budget bind at k_v = 1.
    from hsa_teleop.scf import scf_step

    s = RobotState(position=[0.0], velocity=[0.75])
    p = StabilityParams(k_v=1.0, e_max=0.2, dt_ref=0.25)
    tank = EnergyTank(0.0)
    d_jcf = jcf_step(s, [1.5], [], tank, p, UNIT)
    d_scf = scf_step(s, [1.5], [], tank, p)
    assert d_jcf.active_case is ActiveCase.JCF_C3
    assert abs(d_jcf.force[0]) > 0.05
    assert abs(d_scf.force[0]) <= 1e-7


# --- multiplier polynomials -----------------------------------------------------


def test_cubic_coefficients_expanded_form():
    c2 = np.array([0.8, -0.6])
    u_ref = np.array([1.0, 2.0])
    c1 = 0.7
    a = float(c2 @ c2)
    s = float(c2 @ u_ref)
    np.testing.assert_allclose(
        jcf_cubic_coeffs(c1, c2, u_ref),
        [4 * a, 5 * a + 16 * c1 - 16 * s, 2 * a + 16 * c1 - 16 * s, 4 * (c1 - s)],
    )


def test_cubic_constant_term_vanishes_when_c1_matches():
    c2 = np.array([1.0])
    u_ref = np.array([0.7])
    coeffs = jcf_cubic_coeffs(0.7, c2, u_ref)  # c1 == c2.u_ref
    assert coeffs[-1] == pytest.approx(0.0)
    assert 0.0 in np.round(real_roots(coeffs).roots, 9)


def test_cubic_degenerate_zero_polynomial():
    coeffs = jcf_cubic_coeffs(0.0, np.array([0.0]), np.array([1.0]))
    assert np.all(coeffs == 0.0)


def test_cubic_roots_satisfy_stationarity_system():
    rng = np.random.default_rng(11)
    for _ in range(50):
        d = int(rng.integers(1, 3))
        c2 = rng.normal(0, 1.5, d)
        u_ref = rng.normal(0, 1.5, d)
        c1 = float(rng.uniform(0.0, 2.0))
        coeffs = jcf_cubic_coeffs(c1, c2, u_ref)
        if np.abs(coeffs).max() == 0:
            continue
        for lam in real_roots(coeffs).roots:
            den = 2.0 + 4.0 * lam
            if abs(den) < 1e-6:
                continue
            force = -c2 * lam / den
            u = u_ref - c2 * lam * (1.0 + lam) / den
            # stationarity: 4(u-u_ref) - 2F + c2*lam = 0, (1+lam)F = (u-u_ref),
            # and the budget holds with equality
            r1 = 4 * (u - u_ref) - 2 * force + c2 * lam
            r2 = (1 + lam) * force - (u - u_ref)
            r3 = float(force @ force) - c1 + float(c2 @ u)
            scale = 1.0 + abs(lam) ** 3
            assert np.abs(r1).max() <= 1e-7 * scale
            assert np.abs(r2).max() <= 1e-7 * scale
            assert abs(r3) <= 1e-6 * scale


def test_quintic_coefficients_expanded_form():
    c2, c3, c4 = 1.3, 0.49, -0.8
    a = c2 * c2
    np.testing.assert_allclose(
        jcf_quintic_coeffs(c2, c3, c4),
        [
            4 * a,
            13 * a - 16 * c4,
            16 * a - 48 * c4,
            9 * a - 16 * c3 - 52 * c4,
            2 * a - 16 * c3 - 24 * c4,
            -4 * c3 - 4 * c4,
        ],
    )


def test_weighted_polynomials_reduce_to_unit_forms():
    rng = np.random.default_rng(5)
    for _ in range(20):
        c2 = rng.normal(0, 1, 2)
        u_ref = rng.normal(0, 1, 2)
        c1 = float(rng.uniform(0, 2))
        a = float(c2 @ c2)
        b = c1 - float(c2 @ u_ref)
        unit = jcf_cubic_coeffs(c1, c2, u_ref)
        general = _weighted_cubic(a, b, 1.0, 1.0)
        np.testing.assert_allclose(general, -unit, atol=1e-12)

        c2s, c3, c4 = float(rng.normal()), float(rng.uniform(0, 1)), float(rng.normal())
        unit_q = jcf_quintic_coeffs(c2s, c3, c4)
        general_q = _weighted_quintic(c2s * c2s, c3, c4, 1.0, 1.0)
        np.testing.assert_allclose(general_q, -unit_q, atol=1e-10)


def test_quintic_with_zero_c3_shares_cubic_roots():
    # With the pinned component matching the reference, the quintic factors
    # into the cubic structure: its root set must contain the cubic's roots.
    rng = np.random.default_rng(19)
    for _ in range(20):
        c2 = float(rng.normal(0, 1.5))
        c4 = float(rng.normal(0, 1.0))
        quintic = _weighted_quintic(c2 * c2, 0.0, c4, 1.0, 1.0)
        cubic = _weighted_cubic(c2 * c2, -c4, 1.0, 1.0)
        if np.abs(cubic).max() == 0 or np.abs(quintic).max() == 0:
            continue
        roots_c = real_roots(cubic).roots
        for lam in roots_c:
            assert abs(np.polyval(quintic, lam)) <= 1e-6 * (1 + np.abs(quintic).max())


# --- oracle equivalence ----------------------------------------------------------


def test_case_enumeration_matches_numeric_oracle_sample():
    report = run_jcf_oracle_suite(n=40, seed=123)
    assert report.max_cost_gap <= 1e-4
    assert report.max_point_dist <= 1e-3
    assert report.max_kkt_residual <= 1e-6


@pytest.mark.parametrize("weights", [JcfWeights(2.0, 0.5), JcfWeights(0.3, 3.0)])
def test_weighted_enumeration_matches_oracle(weights):
    report = run_jcf_oracle_suite(n=25, seed=31, weights=weights)
    assert report.max_cost_gap <= 1e-4
    assert report.max_point_dist <= 1e-3
    assert report.max_kkt_residual <= 1e-6


def test_two_active_rows_pin_control():
    # Orthogonal walls force u to their intersection; the budget then shapes F.
    s = RobotState(position=[0.0, 0.0], velocity=[1.0, 1.0])
    p = StabilityParams(k_v=2.0, e_max=0.1)
    rows = [
        AffineRow(coeff=np.array([-1.0, 0.0]), constant=-1.0),  # u_x <= -1
        AffineRow(coeff=np.array([0.0, -1.0]), constant=-1.0),  # u_y <= -1
    ]
    cmd = np.array([2.0, 2.0])
    d = jcf_step(s, cmd, rows, EnergyTank(0.0), p, UNIT)
    assert d.feasible
    np.testing.assert_allclose(d.u, [-1.0, -1.0], atol=1e-9)
    # oracle agreement on this pinned instance
    from hsa_teleop.oracle import JcfInstance

    inst = JcfInstance(state=s, x_vd=cmd, rows=tuple(rows), tank=EnergyTank(0.0), params=p)
    _, _, oracle_cost = solve_jcf_numeric(inst, UNIT)
    assert d.cost <= oracle_cost + 1e-4


def test_fallback_when_budget_conflicts_with_safety():
    s = RobotState(position=[0.0], velocity=[1.0])
    p = StabilityParams(k=1.0, k_v=1.0, dt_ref=0.5, e_max=0.2)
    rows = [AffineRow(coeff=np.array([1.0]), constant=-5.0)]  # u >= 5
    d = jcf_step(s, [0.0], rows, EnergyTank(0.0), p, UNIT)
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
        jcf_step(s, [0.0], rows, EnergyTank(0.0), StabilityParams(), UNIT)


def test_kkt_residual_certifies_returned_candidates():
    rng = np.random.default_rng(77)
    for _ in range(60):
        inst = random_jcf_instance(rng)
        d = jcf_step(inst.state, inst.x_vd, list(inst.rows), inst.tank, inst.params, UNIT)
        if d.active_case is ActiveCase.FALLBACK:
            continue
        res = kkt_residual(
            d.u, d.force, inst.u_ref, list(inst.rows), inst.c1, inst.c2vec, UNIT
        )
        assert res <= 1e-6


def test_weights_validation():
    with pytest.raises(ContractError):
        JcfWeights(w_cbf=0.0)


def test_force_directionality_in_replayed_field():
    """Near obstacles, where the sequential design's force is aligned with the
    barrier gradient (perpendicular to the surface), the joint design's force
    keeps a strictly negative inner product with the velocity on most steps."""
    from hsa_teleop.barriers import evaluate
    from hsa_teleop.harness import run
    from hsa_teleop.scenario import field_2d

    sc_scf = field_2d(controller="scf", k_v=1.0)
    rows_scf = run(sc_scf)
    rows_jcf = run(field_2d(controller="jcf", k_v=1.0))

    def nearest_gradient(position):
        evs = [evaluate(b, position) for b in sc_scf.barriers]
        return min(evs, key=lambda e: e.value).gradient

    selected = 0
    opposing = 0
    for ra, rb in zip(rows_scf, rows_jcf):
        if ra.h_min >= 2.0:
            continue
        f_scf = ra.force
        mag = float(np.linalg.norm(f_scf))
        if mag < 1e-6:
            continue
        g = nearest_gradient(ra.position)
        g = g / np.linalg.norm(g)
        if abs(float(f_scf @ g)) / mag <= np.cos(np.deg2rad(15)):
            continue
        selected += 1
        if float(rb.force @ rb.velocity) < 0.0:
            opposing += 1
    assert selected >= 20, selected
    assert opposing >= 0.3 * selected, (opposing, selected)
