"""Barrier fields: analytic derivatives against finite differences, and the safety row."""

import numpy as np
import pytest

from hsa_teleop.barriers import Disc, HalfPlane, SuperEllipse, cbf_row, evaluate
from hsa_teleop.dynamics import RobotState
from hsa_teleop.errors import ContractError, SingularityError

WALL = HalfPlane(normal=[1.0], offset=6.0)
FIELD_ELLIPSE = SuperEllipse(center=[0.0, 0.0], a=4.5, b=1.5, r=0.5)


def fd_gradient(shape, p, h=1e-6):
    d = len(p)
    out = np.zeros(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        out[i] = (evaluate(shape, p + e).value - evaluate(shape, p - e).value) / (2 * h)
    return out


def fd_hessian(shape, p, h=1e-5):
    d = len(p)
    out = np.zeros((d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        out[:, i] = (
            np.asarray(evaluate(shape, p + e).gradient) - np.asarray(evaluate(shape, p - e).gradient)
        ) / (2 * h)
    return out


def test_wall_at_origin():
    ev = evaluate(WALL, [0.0])
    assert ev.value == pytest.approx(6.0)
    assert ev.gradient[0] == pytest.approx(-1.0)
    assert ev.hessian[0, 0] == 0.0


def test_wall_boundary():
    assert evaluate(WALL, [6.0]).value == pytest.approx(0.0)


def test_super_ellipse_center_value():
    assert evaluate(FIELD_ELLIPSE, [0.0, 0.0]).value == pytest.approx(-1.0)


def test_super_ellipse_boundary_points():
    # On-axis boundary crossings sit at the half-lengths.
    assert evaluate(FIELD_ELLIPSE, [4.5, 0.0]).value == pytest.approx(0.0, abs=1e-12)
    assert evaluate(FIELD_ELLIPSE, [0.0, 1.5]).value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize(
    "shape",
    [
        FIELD_ELLIPSE,
        SuperEllipse(center=[1.0, -2.0], a=2.0, b=1.0, r=0.5),
        Disc(center=[0.5, 0.5], radius=1.0, robot_radius=0.25),
        HalfPlane(normal=np.array([0.6, 0.8]), offset=2.0),
    ],
)
def test_gradients_match_finite_differences(shape):
    rng = np.random.default_rng(42)
    checked = 0
    while checked < 20:
        p = rng.uniform(-6, 6, size=2)
        ev = evaluate(shape, p)
        # Stay away from derivative singularities (obstacle centers, axes of
        # steep super-ellipses) where finite differences are meaningless.
        if isinstance(shape, Disc) and np.linalg.norm(p - shape.center) < 0.3:
            continue
        if isinstance(shape, SuperEllipse):
            if abs(ev.value) > 50 or np.linalg.norm(ev.gradient) > 50:
                continue
            if min(abs(p - shape.center)) < 0.2:
                continue
        np.testing.assert_allclose(ev.gradient, fd_gradient(shape, p), rtol=1e-5, atol=1e-6)
        np.testing.assert_allclose(ev.hessian, fd_hessian(shape, p), rtol=1e-4, atol=1e-5)
        checked += 1


@pytest.mark.parametrize(
    "shape",
    [FIELD_ELLIPSE, Disc(center=[0.0, 0.0], radius=1.0), HalfPlane(normal=np.array([0.0, 1.0]), offset=1.0)],
)
def test_hessian_symmetric(shape):
    rng = np.random.default_rng(7)
    for _ in range(10):
        p = rng.uniform(-4, 4, size=2)
        if isinstance(shape, Disc) and np.linalg.norm(p - shape.center) < 0.2:
            continue
        h = evaluate(shape, p).hessian
        np.testing.assert_allclose(h, h.T, atol=1e-12)


def test_disc_center_singularity():
    with pytest.raises(SingularityError):
        evaluate(Disc(center=[1.0, 1.0], radius=0.5), [1.0, 1.0])


def test_disc_inflation_by_robot_radius():
    d = Disc(center=[0.0, 0.0], radius=1.0, robot_radius=0.25)
    assert evaluate(d, [2.0, 0.0]).value == pytest.approx(0.75)


def test_cbf_row_wall_hand_substituted():
    # 1-D wall, rest state, K = (1, 2): row is (-1)*u + 6 >= 0, i.e. u <= 6.
    state = RobotState(position=[0.0], velocity=[0.0])
    row = cbf_row(evaluate(WALL, state.position), state, k1=1.0, k2=2.0)
    assert row.coeff[0] == pytest.approx(-1.0)
    assert row.constant == pytest.approx(6.0)


def test_cbf_row_rest_state_reduces_to_k1_h():
    state = RobotState(position=[0.0, 0.0], velocity=[0.0, 0.0])
    ev = evaluate(Disc(center=[3.0, 0.0], radius=1.0), state.position)
    row = cbf_row(ev, state, k1=1.7, k2=2.0)
    assert row.constant == pytest.approx(1.7 * ev.value)


def test_cbf_row_affine_in_control():
    state = RobotState(position=[1.0, 1.0], velocity=[0.5, -0.2])
    row = cbf_row(evaluate(FIELD_ELLIPSE, state.position), state, 1.0, 2.0)
    rng = np.random.default_rng(3)
    u = rng.normal(size=2)
    lin = row.slack(u) - row.constant
    lin2 = row.slack(2 * u) - row.constant
    assert lin2 == pytest.approx(2 * lin, rel=1e-12, abs=1e-12)


def test_gain_pair_must_be_hurwitz():
    state = RobotState(position=[0.0], velocity=[0.0])
    ev = evaluate(WALL, state.position)
    with pytest.raises(ContractError):
        cbf_row(ev, state, k1=-1.0, k2=2.0)


def test_half_plane_normal_must_be_unit():
    with pytest.raises(ContractError):
        HalfPlane(normal=[2.0], offset=1.0)


def test_shape_parameter_validation():
    with pytest.raises(ContractError):
        Disc(center=[0.0, 0.0], radius=-1.0)
    with pytest.raises(ContractError):
        SuperEllipse(center=[0.0, 0.0], a=0.0, b=1.0, r=0.5)
