import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import planner_grid_search, random_rotation, random_unit
from tvteam.actuation import GRAVITY, a4_inc
from tvteam.afs import AfsCone, in_team_cone
from tvteam.controller import (Gains, Reference, attitude_error_function, candidate_frame,
                               control_law, lyapunov_diagnostics, plan_attitude, planner_frame,
                               project_force, required_force, tilt_axis, tracking_errors)
from tvteam.dynamics import SimState
from tvteam.rotations import is_rotation, rot_x

TEAM = a4_inc()
CONE_HALF = AfsCone.from_config(TEAM, 0.5)
CONE_FULL = AfsCone.from_config(TEAM, 1.0)
GAINS = Gains()


def _ref(R_r):
    z = np.zeros(3)
    return Reference(z, z, z, R_r)


def test_default_gains():
    assert np.array_equal(GAINS.K_x, [0.4, 0.4, 1.0])
    assert np.array_equal(GAINS.K_R, [12, 12, 1])
    assert np.array_equal(GAINS.K_xi, [8, 8, 1.5, 0.8, 0.8, 2])
    with pytest.raises(ValueError):
        Gains(K_x=[1, 1, 0])
    with pytest.raises(ValueError):
        Gains(K_xi=[1, 1, 1])


def test_candidate_frame_properties(rng):
    for _ in range(100):
        b_z, b_xr = random_unit(rng), random_unit(rng)
        R = candidate_frame(b_z, b_xr)
        assert is_rotation(R, 1e-12)
        assert np.allclose(R[:, 2], b_z)
    # b_z along the reference x axis falls back to the reference y axis
    R = candidate_frame(np.array([1.0, 0, 0]), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]))
    assert is_rotation(R, 1e-12) and np.allclose(R[:, 2], [1, 0, 0])


def test_tilt_axis_antipodal_uses_horizontal_axis():
    assert np.allclose(tilt_axis(np.array([0, 0, 1.0]), np.array([0, 0, -1.0])), [1, 0, 0])
    assert np.allclose(tilt_axis(np.array([1.0, 0, 0]), np.array([-1.0, 0, 0])), [0, 1, 0])


def test_tilt_objective_monotone(rng):
    for _ in range(50):
        R_r = random_rotation(rng)
        f = random_unit(rng)
        k = tilt_axis(R_r[:, 2], f)
        ths = np.linspace(0, math.pi - 1e-3, 200)
        align = [-(R_r[:, 2] @ planner_frame(R_r, k, t)[:, 2]) for t in ths]
        assert np.all(np.diff(align) >= -1e-12)


def test_planner_keeps_feasible_reference():
    m = 2.3
    out = plan_attitude(_ref(rot_x(0.2)), np.array([0, 0, m * GRAVITY]), CONE_HALF, rot_x(0.2))
    assert not out.truncated and out.theta_star == 0.0
    assert np.array_equal(out.R_d, rot_x(0.2))


def test_planner_truncates_large_roll():
    """Hovering with a 60 deg roll reference: the plan stops near the cone edge."""
    R_r = rot_x(math.pi / 3)
    u = np.array([0, 0, 2.3 * GRAVITY])
    out = plan_attitude(_ref(R_r), u, CONE_HALF, np.eye(3))
    assert out.truncated
    roll = math.atan2(out.R_d[2, 1], out.R_d[2, 2])
    c_x, c_y = CONE_HALF.semi_axes(1.0)
    assert roll == pytest.approx(math.atan(c_y), abs=2e-4)


def test_planner_antipodal_force():
    out = plan_attitude(_ref(np.eye(3)), np.array([0, 0, -10.0]), CONE_HALF, np.eye(3))
    assert is_rotation(out.R_d, 1e-9)
    f_r = required_force(np.array([0, 0, -10.0]), CONE_HALF, np.eye(3))
    assert in_team_cone(out.R_d.T @ f_r, CONE_HALF, 1e-6)


def test_planner_zero_force_returns_reference():
    out = plan_attitude(_ref(rot_x(1.0)), np.zeros(3), CONE_HALF, np.eye(3))
    assert not out.truncated


def test_planner_against_grid(rng):
    done = 0
    while done < 40:
        R_r = random_rotation(rng)
        u = random_unit(rng) * rng.uniform(0.3, 1.5) * CONE_HALF.max_force
        out = plan_attitude(_ref(R_r), u, CONE_HALF, np.eye(3))
        if not out.truncated:
            continue
        f_r = required_force(u, CONE_HALF, np.eye(3))
        assert out.theta_star == pytest.approx(planner_grid_search(R_r, f_r, CONE_HALF), abs=2e-4)
        assert in_team_cone(out.R_d.T @ f_r, CONE_HALF, 1e-6 * CONE_HALF.max_force)
        assert is_rotation(out.R_d, 1e-9)
        done += 1


def _random_state(rng):
    return SimState(rng.normal(size=3), random_rotation(rng), rng.normal(size=3),
                    rng.normal(size=3) * 2)


def test_projected_force_inside_full_cone(rng):
    for _ in range(300):
        st_ = _random_state(rng)
        ref = Reference(rng.normal(size=3), rng.normal(size=3), rng.normal(size=3) * 5,
                        random_rotation(rng))
        out = control_law(st_, ref, random_rotation(rng), GAINS, TEAM, CONE_FULL)
        assert in_team_cone(out.u_d[3:], CONE_FULL, 1e-9)
        assert 0 <= out.t_eta <= 1 and 0 < out.t_Tf <= 1


@settings(max_examples=200)
@given(st.tuples(st.floats(-300, 300), st.floats(-300, 300), st.floats(-300, 300)))
def test_projection_idempotent(u):
    once, _, _ = project_force(np.array(u), CONE_FULL)
    twice, t_T, t_e = project_force(once, CONE_FULL)
    assert np.allclose(once, twice, atol=1e-12)


def test_force_below_apex_is_zeroed():
    u_f, _, _ = project_force(np.array([3.0, 0, -5.0]), CONE_FULL)
    assert np.array_equal(u_f, np.zeros(3))


def test_zero_error_gives_zero_torque(rng):
    for _ in range(20):
        R = random_rotation(rng)
        x = rng.normal(size=3)
        st_ = SimState(x, R)
        ref = Reference(x, np.zeros(3), np.zeros(3), R)
        out = control_law(st_, ref, R, GAINS, TEAM)
        assert np.all(out.u_d[:3] == 0.0)
        # pure gravity compensation, expressed in the body frame
        assert np.allclose(out.u_r[3:], 2.3 * GRAVITY * R.T @ [0, 0, 1])


def test_tracking_errors_small_rotation():
    st_ = SimState(np.array([1.0, 0, 0]), rot_x(0.01))
    e_x, e_R, e_xi = tracking_errors(st_, _ref(np.eye(3)), np.eye(3))
    assert np.allclose(e_x, [1, 0, 0])
    assert e_R[0] == pytest.approx(math.sin(0.01))
    assert np.allclose(e_xi, 0)


def test_lyapunov_terms():
    st_ = SimState(np.array([0.0, 0.1, 0.0]), np.eye(3), np.array([0.1, 0, 0]))
    V_R, V_x = lyapunov_diagnostics(st_, _ref(np.eye(3)), np.eye(3), GAINS)
    assert V_x == pytest.approx(0.4 * 0.01)
    assert V_R == pytest.approx(8 * 0.01)
    assert attitude_error_function(rot_x(0.3), np.eye(3), GAINS.K_R) == pytest.approx(
        0.5 * (12 * 0 + 12 * (1 - math.cos(0.3)) + 1 * (1 - math.cos(0.3))))
