"""Full-pose tracking: attitude planner, force-projected control law, diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .actuation import GRAVITY, TeamConfig, team_inertia
from .afs import AfsCone, in_team_cone, project_t_eta, scale_t_Tf
from .dynamics import SimState
from .rotations import E3, cross, rodrigues, skew, vee

PLANNER_TOL = 1e-4
PLANNER_MAX_ITER = 40


def _diag(values, size):
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape != (size,) or np.any(arr <= 0):
        raise ValueError(f"expected {size} positive diagonal gains, got {values}")
    return arr


@dataclass(frozen=True, eq=False)
class Gains:
    """Diagonal gains; defaults are the tilting-hover values."""

    K_x: np.ndarray = field(default_factory=lambda: np.array([0.4, 0.4, 1.0]))
    K_R: np.ndarray = field(default_factory=lambda: np.array([12.0, 12.0, 1.0]))
    K_xi: np.ndarray = field(default_factory=lambda: np.array([8.0, 8.0, 1.5, 0.8, 0.8, 2.0]))

    def __post_init__(self):
        object.__setattr__(self, "K_x", _diag(self.K_x, 3))
        object.__setattr__(self, "K_R", _diag(self.K_R, 3))
        object.__setattr__(self, "K_xi", _diag(self.K_xi, 6))


@dataclass(frozen=True, eq=False)
class Reference:
    x_r: np.ndarray
    xdot_r: np.ndarray
    xddot_r: np.ndarray
    R_r: np.ndarray
    Omega_d: np.ndarray = field(default_factory=lambda: np.zeros(3))
    Omegadot_d: np.ndarray = field(default_factory=lambda: np.zeros(3))


class PlannerOutput(NamedTuple):
    R_d: np.ndarray
    theta_star: float
    truncated: bool


class ControlOutput(NamedTuple):
    u_d: np.ndarray
    u_r: np.ndarray
    t_Tf: float
    t_eta: float


def tracking_errors(state: SimState, ref: Reference, R_d):
    R = state.R
    e_x = state.x - ref.x_r
    e_R = 0.5 * vee(R_d.T @ R - R.T @ R_d)
    e_omega = state.omega - R.T @ R_d @ ref.Omega_d
    e_v = state.v - R.T @ ref.xdot_r
    return e_x, e_R, np.concatenate([e_omega, e_v])


def candidate_frame(b_z, b_xr, b_yr=None) -> np.ndarray:
    """Rotation with third column ``b_z`` whose x axis stays closest to ``b_xr``."""
    b_y = cross(b_z, b_xr)
    ny = np.linalg.norm(b_y)
    if ny < 1e-9:
        # b_z along the reference x axis; complete from the reference y axis
        b_x = cross(b_yr if b_yr is not None else np.array([0.0, 1.0, 0.0]), b_z)
        b_x /= np.linalg.norm(b_x)
        b_y = cross(b_z, b_x)
    else:
        b_y /= ny
        b_x = cross(b_y, b_z)
    return np.column_stack([b_x, b_y, b_z])


def tilt_axis(b_zr, f_hat) -> np.ndarray:
    """Unit axis turning ``b_zr`` towards ``f_hat`` in their common plane."""
    k = cross(b_zr, f_hat)
    nk = np.linalg.norm(k)
    if nk >= 1e-9:
        return k / nk
    # (anti)parallel: any horizontal direction orthogonal to b_zr will do
    for cand in (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])):
        k = cand - (cand @ b_zr) * b_zr
        nk = np.linalg.norm(k)
        if nk > 1e-6:
            return k / nk
    raise ValueError("cannot build a tilt axis")


def planner_frame(R_r, k, theta: float) -> np.ndarray:
    b_z = rodrigues(R_r[:, 2], k, theta)
    return candidate_frame(b_z, R_r[:, 0], R_r[:, 1])


def required_force(u_fr, cone: AfsCone, R_C) -> np.ndarray:
    """World-frame force the planner has to make attainable: t_Tf R_C u_fr."""
    return scale_t_Tf(u_fr, cone) * (np.asarray(R_C) @ np.asarray(u_fr, dtype=float))


def plan_attitude(ref: Reference, u_fr, cone: AfsCone, R_C) -> PlannerOutput:
    """Closest attitude to R_r (by tilt of b_z towards f_r) that can deliver f_r.

    Bisection over the tilt angle on [0, arccos(b_zr . f_r/|f_r|)]; the upper
    end aligns b_z with f_r and is attainable because f_r was magnitude-scaled.
    """
    R_r = ref.R_r
    f_r = required_force(u_fr, cone, R_C)
    norm = float(np.linalg.norm(f_r))
    tol = 1e-12 * cone.max_force
    if norm == 0.0 or in_team_cone(R_r.T @ f_r, cone, tol):
        return PlannerOutput(R_r, 0.0, False)
    f_hat = f_r / norm
    b_zr = R_r[:, 2]
    theta_max = math.acos(max(-1.0, min(1.0, float(b_zr @ f_hat))))
    k = tilt_axis(b_zr, f_hat)

    def feasible(theta):
        return in_team_cone(planner_frame(R_r, k, theta).T @ f_r, cone, tol)

    lo, hi = 0.0, theta_max
    for _ in range(PLANNER_MAX_ITER):
        if hi - lo <= PLANNER_TOL:
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return PlannerOutput(planner_frame(R_r, k, hi), hi, True)


def reference_wrench(state: SimState, ref: Reference, R_d, gains: Gains,
                     cfg: TeamConfig, gravity: float = GRAVITY) -> np.ndarray:
    """Unconstrained wrench u_r before force projection."""
    m, J = team_inertia(cfg)
    R = state.R
    e_x, e_R, e_xi = tracking_errors(state, ref, R_d)
    Om = state.omega
    Om_d = R.T @ R_d @ ref.Omega_d
    v_d = R.T @ ref.xdot_r
    # desired twist rate; the linear part follows from the transport theorem
    Omdot_d = R.T @ R_d @ ref.Omegadot_d
    vdot_d = R.T @ ref.xddot_r - cross(Om, v_d)

    G_xidot = np.concatenate([J @ Omdot_d, m * vdot_d])
    C_xid = np.concatenate([skew(J @ Om) @ Om_d, -m * cross(Om, v_d)])
    grad_phi = np.concatenate([gains.K_R * e_R, R.T @ (gains.K_x * e_x)])
    g_wrench = np.concatenate([np.zeros(3), -m * gravity * (R.T @ E3)])
    return G_xidot - C_xid - gains.K_xi * e_xi - grad_phi - g_wrench


def project_force(u_fr, cone_full: AfsCone) -> tuple[np.ndarray, float, float]:
    """Apply K_f = diag(t_eta t_Tf, t_eta t_Tf, t_Tf); returns (u_f, t_Tf, t_eta)."""
    u_fr = np.asarray(u_fr, dtype=float)
    t_T = scale_t_Tf(u_fr, cone_full)
    u_p = t_T * u_fr
    t_eta = project_t_eta(u_p, cone_full)
    if u_p[2] < 0.0:
        # nothing below the apex is attainable; command zero force
        return np.zeros(3), t_T, t_eta
    return np.array([t_eta * u_p[0], t_eta * u_p[1], u_p[2]]), t_T, t_eta


def control_law(state: SimState, ref: Reference, R_d, gains: Gains, cfg: TeamConfig,
                cone_full: AfsCone | None = None, gravity: float = GRAVITY) -> ControlOutput:
    cone_full = cone_full or AfsCone.from_config(cfg, 1.0)
    u_r = reference_wrench(state, ref, R_d, gains, cfg, gravity)
    u_f, t_T, t_eta = project_force(u_r[3:], cone_full)
    u_d = np.concatenate([u_r[:3], u_f])
    return ControlOutput(u_d, u_r, t_T, t_eta)


def attitude_error_function(R_C, R_d, K_R) -> float:
    return 0.5 * float(np.trace(np.diag(K_R) @ (np.eye(3) - R_d.T @ R_C)))


def lyapunov_diagnostics(state: SimState, ref: Reference, R_d, gains: Gains) -> tuple[float, float]:
    """(V_R, V_x) with |e|_K taken as the quadratic form e^T K e."""
    e_x = state.x - ref.x_r
    _, _, e_xi = tracking_errors(state, ref, R_d)
    K_om, K_v = gains.K_xi[:3], gains.K_xi[3:]
    V_R = attitude_error_function(state.R, R_d, gains.K_R) + float(e_xi[:3] @ (K_om * e_xi[:3]))
    V_x = float(e_x @ (gains.K_x * e_x)) + float(e_xi[3:] @ (K_v * e_xi[3:]))
    return V_R, V_x
