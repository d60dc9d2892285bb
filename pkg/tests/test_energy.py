"""Energy accounting: storage, force budget, tank flow, ledger audit, passivity set."""

import numpy as np
import pytest

from hsa_teleop.dynamics import RobotState
from hsa_teleop.energy import (
    EnergyTank,
    L2Ledger,
    StabilityParams,
    fallback_beta_increment,
    l2_feasibility_row,
    l2_force_bound,
    ledger_check,
    passivity_row,
    storage,
    storage_rate,
    tank_update,
)
from hsa_teleop.errors import ContractError


def state1(v):
    return RobotState(position=[0.0], velocity=[v])


def test_storage_zero_velocity():
    assert storage(state1(0.0), StabilityParams()) == 0.0


def test_storage_kv2_pythagorean():
    s = RobotState(position=[0.0, 0.0], velocity=[3.0, 4.0])
    assert storage(s, StabilityParams(k_v=2.0)) == pytest.approx(25.0)


def test_storage_kv5_unit_velocity():
    assert storage(state1(1.0), StabilityParams(k_v=5.0)) == pytest.approx(2.5)


def test_force_bound_empty_when_everything_zero():
    p = StabilityParams(k=1.0, k_v=1.0, dt_ref=1.0, e_max=1.0)
    assert l2_force_bound(state1(0.0), [0.0], EnergyTank(0.0), [0.0], p) == pytest.approx(0.0)


def test_force_bound_command_term_only():
    p = StabilityParams(k=2.0, k_v=1.0, dt_ref=1.0, e_max=1.0)
    bound = l2_force_bound(state1(0.0), [0.8], EnergyTank(0.0), [0.0], p)
    assert bound == pytest.approx(0.8**2 / 4.0)


def test_force_bound_hand_evaluated():
    # k=1, k_v=1, dt_ref=1, E=0.2, x_vd=1, x_v=1, u=0.5 -> 2*0.2 + 1 - 2*0.5 = 0.4
    p = StabilityParams(k=1.0, k_v=1.0, dt_ref=1.0, e_max=1.0)
    bound = l2_force_bound(state1(1.0), [1.0], EnergyTank(0.2), [0.5], p)
    assert bound == pytest.approx(0.4)


def test_feasibility_row_zero_velocity_trivial():
    p = StabilityParams()
    row = l2_feasibility_row(state1(0.0), [0.7], EnergyTank(0.1), p)
    assert row.coeff[0] == 0.0
    assert row.constant > 0
    assert row.slack(np.array([123.0])) > 0


def test_feasibility_row_zero_control_always_admissible():
    rng = np.random.default_rng(2)
    for _ in range(25):
        p = StabilityParams(k=rng.uniform(0.5, 2), k_v=rng.uniform(0.5, 5))
        st = RobotState(position=[0.0, 0.0], velocity=rng.normal(0, 2, 2))
        row = l2_feasibility_row(st, rng.normal(0, 1, 2), EnergyTank(rng.uniform(0, 0.2)), p)
        assert row.slack(np.zeros(2)) >= 0.0


def test_feasibility_row_halfline_hand_evaluated():
    # k=1, k_v=1, dt_ref=1, E=0, x_vd=0, x_v=1 -> -2u >= 0, u <= 0 admissible
    p = StabilityParams(k=1.0, k_v=1.0, dt_ref=1.0, e_max=1.0)
    row = l2_feasibility_row(state1(1.0), [0.0], EnergyTank(0.0), p)
    assert row.coeff[0] == pytest.approx(-2.0)
    assert row.constant == pytest.approx(0.0)
    assert row.slack(np.array([-1.0])) > 0
    assert row.slack(np.array([1.0])) < 0


def test_feasibility_row_matches_force_bound_sign():
    rng = np.random.default_rng(8)
    p = StabilityParams(k=1.3, k_v=2.0, dt_ref=0.5, e_max=0.5)
    for _ in range(50):
        st = RobotState(position=[0.0, 0.0], velocity=rng.normal(0, 1, 2))
        cmd = rng.normal(0, 1, 2)
        tank = EnergyTank(rng.uniform(0, 0.4))
        u = rng.normal(0, 1, 2)
        row_ok = l2_feasibility_row(st, cmd, tank, p).slack(u) >= 0
        bound_ok = l2_force_bound(st, cmd, tank, u, p) >= 0
        assert row_ok == bound_ok


def test_tank_idle_step_unchanged():
    p = StabilityParams()
    tank = tank_update(EnergyTank(0.1), [0.0], [0.0], state1(0.0), [0.0], 0.02, p)
    assert tank.level == pytest.approx(0.1)
    assert tank.flow == pytest.approx(0.0)


def test_tank_charges_from_command_energy():
    # F=0, u=0: level rises by ||x_vd||^2/(2k) * dt until the cap
    p = StabilityParams(k=2.0, e_max=1.0)
    tank = tank_update(EnergyTank(0.0), [0.0], [0.6], state1(0.0), [0.0], 0.02, p)
    assert tank.flow == pytest.approx(0.36 / 4.0)
    assert tank.level == pytest.approx(0.36 / 4.0 * 0.02)


def test_tank_cap_discards_surplus():
    p = StabilityParams(e_max=0.2)
    tank = tank_update(EnergyTank(0.2), [0.0], [2.0], state1(0.0), [0.0], 0.02, p)
    assert tank.level == 0.2
    assert tank.flow > 0


def test_tank_drain_rate_limited():
    # Force spends at most E/dt_ref per unit time even when the flow asks more.
    p = StabilityParams(k=1.0, dt_ref=0.5, e_max=1.0)
    tank = tank_update(EnergyTank(0.1), [10.0], [0.0], state1(0.0), [0.0], 0.02, p)
    assert tank.flow == pytest.approx(-0.1 / 0.5)
    assert tank.level == pytest.approx(0.1 - 0.2 * 0.02)


def test_discrete_consistency_no_clamping():
    rng = np.random.default_rng(4)
    p = StabilityParams(k=1.0, k_v=0.5, dt_ref=0.5, e_max=50.0)
    tank = EnergyTank(1.0)
    total = 0.0
    st = RobotState(position=[0.0, 0.0], velocity=[0.2, -0.1])
    for _ in range(500):
        cmd = rng.normal(0, 0.5, 2)
        tank = tank_update(tank, [0.0, 0.0], cmd, st, [0.0, 0.0], 0.02, p)
        total += tank.flow * 0.02
    assert tank.level - 1.0 == pytest.approx(total, abs=1e-9)


def test_storage_rate_is_kv_v_dot_u():
    p = StabilityParams(k_v=3.0)
    st = RobotState(position=[0.0, 0.0], velocity=[1.0, -2.0])
    assert storage_rate(st, np.array([0.5, 0.5]), p) == pytest.approx(3.0 * (0.5 - 1.0))


def test_ledger_all_zero_holds_with_initial_margin():
    led = L2Ledger(v0=0.5, e0=0.1)
    audit = ledger_check(led, StabilityParams(k=2.0))
    assert audit.holds
    assert audit.margin == pytest.approx(2.0 / 2.0 * 0.5 + 0.1)


def test_ledger_detects_violation():
    led = L2Ledger(int_force_sq=1.0, int_cmd_sq=0.0, v0=0.0, e0=0.0)
    audit = ledger_check(led, StabilityParams())
    assert not audit.holds
    assert audit.margin == pytest.approx(-1.0)


def test_ledger_beta_extra_restores_bound():
    led = L2Ledger(int_force_sq=1.0, beta_extra=1.0)
    assert ledger_check(led, StabilityParams()).holds


def test_fallback_increment_zero_when_tank_covers():
    p = StabilityParams(k=1.0, k_v=1.0, dt_ref=0.5, e_max=1.0)
    inc = fallback_beta_increment([0.0], [1.0], state1(0.1), [0.1], 0.02, EnergyTank(0.5), p)
    assert inc == 0.0


def test_fallback_increment_covers_unpaid_storage_growth():
    # Vdot*dt = 5*0.02 = 0.1, command budget 0, tank empty -> increment 0.1
    p = StabilityParams(k=1.0, k_v=1.0, dt_ref=0.5, e_max=1.0)
    inc = fallback_beta_increment([0.0], [0.0], state1(1.0), [5.0], 0.02, EnergyTank(0.0), p)
    assert inc == pytest.approx(0.1)


def test_params_validation():
    with pytest.raises(ContractError):
        StabilityParams(k=0.0)
    with pytest.raises(ContractError):
        StabilityParams(e_max=-0.1)
    with pytest.raises(ContractError):
        EnergyTank(level=-1.0)


# --- passivity constraint -----------------------------------------------------


def test_passivity_ball_geometry():
    p = StabilityParams(k=1.0, k_v=1.0)
    con = passivity_row(state1(0.0), [0.4], p)
    center, radius_sq = con.ball(np.array([0.0]))
    assert center[0] == pytest.approx(0.2)
    assert radius_sq == pytest.approx(0.04)
    # ball through the origin: F = 0 admissible at rest
    assert con.admissible([0.0], [0.0])


def test_passivity_empty_when_storage_grows_too_fast():
    p = StabilityParams(k=1.0, k_v=1.0)
    con = passivity_row(state1(1.0), [0.2], p)
    _, radius_sq = con.ball(np.array([1.0]))  # x_v.u = 1 > ||x_vd||^2/(4k k_v)
    assert radius_sq < 0


def test_passivity_admissible_matches_ball():
    rng = np.random.default_rng(6)
    p = StabilityParams(k=1.5, k_v=2.0)
    for _ in range(100):
        st = RobotState(position=[0.0, 0.0], velocity=rng.normal(0, 1, 2))
        con = passivity_row(st, rng.normal(0, 1, 2), p)
        u = rng.normal(0, 1, 2)
        f = rng.normal(0, 1, 2)
        center, radius_sq = con.ball(u)
        in_ball = float((f - center) @ (f - center)) <= radius_sq + 1e-9
        assert in_ball == con.admissible(f, u, tol=1e-9)
