import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import (cone_axes_reference, cone_mask, first_exit_bisection, random_unit,
                     sample_agent_forces)
from tvteam.actuation import ActuationLimits, a4_inc
from tvteam.afs import (AfsCone, agent_afs_mask, agent_boundary_increment, cone_semi_axes,
                        in_agent_afs, in_team_cone, project_t_eta, scale_t_Tf,
                        team_boundary_increment)

TEAM = a4_inc()
LIM = TEAM.limits
LIM_WIDE = ActuationLimits(LIM.sigma_x, math.pi / 2, LIM.sigma_omega, LIM.sigma_Tf)


def test_membership_examples():
    assert in_agent_afs([0, 0, 0], LIM)
    assert in_agent_afs([0, 0, LIM.sigma_Tf], LIM)
    assert not in_agent_afs([0, 0, LIM.sigma_Tf * 1.01], LIM)
    assert not in_agent_afs([0, 0, -1.0], LIM)
    # 31 deg of eta_x is past the pi/6 limit
    assert not in_agent_afs(5 * np.array([0, -math.sin(0.541), math.cos(0.541)]), LIM)


def test_mask_matches_scalar(rng):
    F = rng.uniform(-12, 12, size=(2000, 3))
    assert np.array_equal(agent_afs_mask(F, LIM), [in_agent_afs(f, LIM) for f in F])


def test_straight_up_hits_thrust_sphere():
    hit = agent_boundary_increment([0, 0, 1.0], [0, 0, 1.0], LIM)
    assert hit.surface == "thrust"
    assert hit.c == pytest.approx(LIM.sigma_Tf - 1.0)


def test_sideways_hits_eta_planes():
    hit = agent_boundary_increment([0, 0, 5.0], [1.0, 0, 0], LIM)
    assert hit.surface == "eta_y" and hit.c == pytest.approx(5.0)  # tan(pi/4) * 5
    hit = agent_boundary_increment([0, 0, 5.0], [0, 1.0, 0], LIM)
    assert hit.surface == "eta_x" and hit.c == pytest.approx(5 * math.tan(math.pi / 6))


def test_zero_direction_never_exits():
    assert agent_boundary_increment([0, 0, 1.0], [0, 0, 0], LIM).c == math.inf


def test_infeasible_start_raises():
    with pytest.raises(ValueError):
        agent_boundary_increment([0, 0, 100.0], [0, 0, 1], LIM)


@pytest.mark.parametrize("limits", [LIM, LIM_WIDE], ids=["narrow", "wide"])
def test_first_exit_against_bisection(limits, rng):
    F = sample_agent_forces(rng, limits, 300, 0.99)
    D = random_unit(rng, 300) * rng.uniform(0.1, 30, (300, 1))
    for f, d in zip(F, D):
        assert agent_boundary_increment(f, d, limits).c == pytest.approx(
            first_exit_bisection(f, d, limits), abs=1e-6)


@pytest.mark.parametrize("limits", [LIM, LIM_WIDE], ids=["narrow", "wide"])
def test_segment_to_exit_stays_inside(limits, rng):
    """Local convexification: the whole segment up to the exit is attainable."""
    F = sample_agent_forces(rng, limits, 300, 0.99)
    D = random_unit(rng, 300)
    for f, d in zip(F, D):
        c = agent_boundary_increment(f, d, limits).c
        cs = rng.uniform(0, c, 50)
        assert agent_afs_mask(f + cs[:, None] * d, limits).all()
        # a hair further, the point is outside or sits on the boundary
        beyond = f + c * (1 + 1e-4) * d
        assert not in_agent_afs(beyond, limits, tol=0.0) or in_agent_afs(beyond, limits, 1e-9)


def test_exit_from_boundary_start():
    # starting on the thrust sphere and pushing outwards leaves immediately
    f = np.array([0, 0, LIM.sigma_Tf])
    assert agent_boundary_increment(f, [0, 0, 1], LIM).c == 0.0


def test_team_increment_ties_to_lowest_index():
    f0 = np.tile([0, 0, 5.0], 4)
    d = np.tile([0, 0, 1.0], 4)
    c, i = team_boundary_increment(f0, d, [False, True, True, True], LIM)
    assert i == 1 and c == pytest.approx(LIM.sigma_Tf - 5.0)
    with pytest.raises(ValueError):
        team_boundary_increment(f0, d, [False] * 4, LIM)


def test_cone_semi_axes_match_reference():
    for s in (0.25, 0.5, 1.0):
        cone = AfsCone.from_config(TEAM, s)
        for z in (0.0, 3.0, 22.5, 39.0):
            assert np.allclose(cone_semi_axes(cone, z),
                               cone_axes_reference(2, 2, LIM.sigma_x, LIM.sigma_y,
                                                   LIM.sigma_Tf, s, z))


def test_consistent_team_cone_roll_limit():
    """All agents aligned: tilting about x is limited by eta_x, tan(phi) = tan(s sigma_x)."""
    con = AfsCone.from_config(a4_inc(psis=(0, 0, 0, 0)), 0.5)
    c_x, c_y = cone_semi_axes(con, 10.0)
    assert math.atan(c_y / 10.0) == pytest.approx(math.pi / 12)
    assert math.atan(c_x / 10.0) == pytest.approx(math.pi / 8)


def test_wide_gimbal_branch_uses_thrust_cap():
    cone = AfsCone(4, 4, 0, math.pi / 6, math.pi / 2, 10.0, 1.0)
    assert cone_semi_axes(cone, 1.0)[0] == pytest.approx(40.0)


@pytest.mark.parametrize("u, inside", [
    ((0, 0, 0), True), ((0, 0, -1), False), ((0, 0, 39.0), True),
    ((0, 0, 39.5), False), ((1.0, 0, 0), False),
])
def test_team_cone_examples(u, inside):
    assert in_team_cone(u, AfsCone.from_config(TEAM, 1.0)) is inside


def test_cone_agrees_with_reference_mask(rng):
    U = rng.uniform([-20, -20, -5], [20, 20, 40], size=(3000, 3))
    for s in (0.5, 1.0):
        cone = AfsCone.from_config(TEAM, s)
        ours = np.array([in_team_cone(u, cone, 0.0) for u in U])
        assert np.array_equal(ours, cone_mask(U, cone, slack=0.0))


@given(st.floats(0.05, 1.0), st.floats(0.05, 1.0),
       st.tuples(st.floats(-30, 30), st.floats(-30, 30), st.floats(-5, 45)))
def test_cone_nested_in_relaxation(s1, s2, u):
    s1, s2 = sorted((s1, s2))
    base = AfsCone.from_config(TEAM, 1.0)
    if in_team_cone(u, base.with_relaxation(s1)):
        assert in_team_cone(u, base.with_relaxation(s2))


@given(st.tuples(st.floats(-200, 200), st.floats(-200, 200), st.floats(-200, 200)))
def test_projection_lands_in_cone(u):
    cone = AfsCone.from_config(TEAM, 1.0)
    u = np.array(u)
    t_T = scale_t_Tf(u, cone)
    p = t_T * u
    if p[2] < 0:
        return  # below the apex; the control law commands zero force there
    t_e = project_t_eta(p, cone)
    out = np.array([t_e * p[0], t_e * p[1], p[2]])
    assert in_team_cone(out, cone, 1e-9)
    # idempotent: projecting the projected force changes nothing
    assert scale_t_Tf(out, cone) == pytest.approx(1.0)
    assert project_t_eta(out, cone) == pytest.approx(1.0)


def test_projection_apex_cases():
    cone = AfsCone.from_config(TEAM, 1.0)
    assert project_t_eta([1.0, 0, 0], cone) == 0.0
    assert project_t_eta([0, 0, 0], cone) == 1.0
    assert project_t_eta([1.0, 0, -1.0], cone) == 0.0
    assert scale_t_Tf([0, 0, 0], cone) == 1.0


def test_cone_rejects_bad_relaxation():
    with pytest.raises(ValueError):
        AfsCone.from_config(TEAM, 0.0)
    with pytest.raises(ValueError):
        AfsCone.from_config(TEAM, 1.5)
