"""Attainable force spaces.

Per agent the exact set is

    D = { T a(eta_x, eta_y) : |eta_x| <= sigma_x, |eta_y| <= sigma_y, 0 <= T <= sigma_Tf }

which, written in Cartesian agent-frame coordinates, is the intersection of

* the thrust ball            |f| <= sigma_Tf
* the eta_x double cone      f_y^2 <= sin(sigma_x)^2 |f|^2   (non-convex)
* two eta_y half-spaces      +-f_x cos(sigma_y) - f_z sin(sigma_y) <= 0

For the team, the Minkowski sum of the agent sets is replaced by an elliptic
cone whose semi-axes grow linearly with the vertical force.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .actuation import HALF_PI, ActuationLimits, TeamConfig, count_orientations

MEMBERSHIP_TOL = 1e-9
INF = math.inf


class BoundaryHit(NamedTuple):
    c: float
    surface: str  # "thrust", "eta_x", "eta_y" or "none"


def in_agent_afs(f, limits: ActuationLimits, tol: float = MEMBERSHIP_TOL) -> bool:
    fx, fy, fz = (float(c) for c in f)
    T = math.sqrt(fx * fx + fy * fy + fz * fz)
    if T == 0.0:
        return True
    if T > limits.sigma_Tf + tol:
        return False
    eta_x = math.asin(max(-1.0, min(1.0, -fy / T)))
    eta_y = math.atan2(fx, fz)  # cos(eta_x) >= 0 on the arcsin branch
    return abs(eta_x) <= limits.sigma_x + tol and abs(eta_y) <= limits.sigma_y + tol


def agent_afs_mask(F, limits: ActuationLimits, tol: float = MEMBERSHIP_TOL) -> np.ndarray:
    """Vectorized :func:`in_agent_afs` over an (m, 3) array of forces."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    T = np.linalg.norm(F, axis=1)
    safe = np.where(T > 0, T, 1.0)
    eta_x = np.arcsin(np.clip(-F[:, 1] / safe, -1.0, 1.0))
    eta_y = np.arctan2(F[:, 0], F[:, 2])
    ok = ((T <= limits.sigma_Tf + tol)
          & (np.abs(eta_x) <= limits.sigma_x + tol)
          & (np.abs(eta_y) <= limits.sigma_y + tol))
    return ok | (T == 0.0)


def _quadratic_exit(A: float, B: float, C: float, flat: float) -> float:
    """Smallest tau >= 0 at which A tau^2 + B tau + C turns positive.

    Assumes the value at tau = 0 is (numerically) nonpositive.  ``flat`` is
    the peak height below which a concave bump counts as a tangency.
    """
    if abs(A) <= 1e-14:
        if B > 0:
            return max(-C / B, 0.0)
        return INF
    disc = B * B - 4.0 * A * C
    if A > 0:
        disc = max(disc, 0.0)
        q = -0.5 * (B + math.copysign(math.sqrt(disc), B))
        roots = [q / A, C / q] if q != 0 else [0.0, 0.0]
        return max(max(roots), 0.0)
    # concave: positive only strictly between the roots
    if disc <= 0 or -disc / (4.0 * A) <= flat:
        return INF
    q = -0.5 * (B + math.copysign(math.sqrt(disc), B))
    r1, r2 = sorted((q / A, C / q))
    if r2 <= 0:
        return INF
    return max(r1, 0.0)


def agent_boundary_increment(f0, f_delta, limits: ActuationLimits,
                             tol: float = MEMBERSHIP_TOL) -> BoundaryHit:
    """Largest c with f0 + c' f_delta inside the agent set for every c' in [0, c].

    Each constraint is handled on its own: the first parameter at which it
    becomes violated is computed in closed form (quadratic for the ball and
    the eta_x cone, linear for the eta_y planes) and the minimum is returned.
    """
    f0 = np.asarray(f0, dtype=float)
    d = np.asarray(f_delta, dtype=float)
    if not in_agent_afs(f0, limits, tol):
        raise ValueError("starting force lies outside the agent AFS")
    dn = float(np.linalg.norm(d))
    if dn == 0.0:
        return BoundaryHit(INF, "none")
    u = d / dn
    scale2 = limits.sigma_Tf ** 2
    f0u = float(f0 @ u)
    f02 = float(f0 @ f0)

    hits = []
    # thrust ball
    hits.append((_quadratic_exit(1.0, 2.0 * f0u, f02 - scale2, 0.0), "thrust"))
    # eta_x double cone
    if limits.sigma_x < HALF_PI:
        s2 = math.sin(limits.sigma_x) ** 2
        A = u[1] ** 2 - s2
        B = 2.0 * (f0[1] * u[1] - s2 * f0u)
        C = f0[1] ** 2 - s2 * f02
        hits.append((_quadratic_exit(A, B, C, 1e-12 * scale2), "eta_x"))
    # eta_y half-spaces
    cy, sy = math.cos(limits.sigma_y), math.sin(limits.sigma_y)
    for sign in (1.0, -1.0):
        a = np.array([sign * cy, 0.0, -sy])
        ad = float(a @ u)
        if ad > 0:
            hits.append((max(-float(a @ f0) / ad, 0.0), "eta_y"))

    tau, surface = min(hits, key=lambda h: h[0])
    if tau == INF:
        return BoundaryHit(INF, "none")
    return BoundaryHit(tau / dn, surface)


def team_boundary_increment(f0, f_delta, unsaturated, limits: ActuationLimits,
                            tol: float = MEMBERSHIP_TOL) -> tuple[float, int | None]:
    """Minimum agent increment over unsaturated agents; ties go to the lowest index.

    Returns ``(inf, None)`` when no unsaturated agent moves.
    """
    f0 = np.asarray(f0, dtype=float).reshape(-1, 3)
    d = np.asarray(f_delta, dtype=float).reshape(-1, 3)
    flags = np.asarray(unsaturated, dtype=bool)
    if not flags.any():
        raise ValueError("no unsaturated agents left")
    c_star, i_star = INF, None
    for i in np.flatnonzero(flags):
        hit = agent_boundary_increment(f0[i], d[i], limits, tol)
        if hit.c < c_star:
            c_star, i_star = hit.c, int(i)
    return c_star, i_star


# -- team cone ---------------------------------------------------------------

@dataclass(frozen=True)
class AfsCone:
    """Elliptic-cone approximation of the team attainable force set."""

    n: int
    n_x: int
    n_y: int
    sigma_x: float
    sigma_y: float
    sigma_Tf: float
    s: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.s <= 1.0:
            raise ValueError(f"relaxation s must lie in (0, 1], got {self.s}")
        if self.n_x + self.n_y != self.n or self.n < 1:
            raise ValueError("orientation counts must partition the team")

    @classmethod
    def from_config(cls, cfg: TeamConfig, s: float = 1.0) -> "AfsCone":
        n_x, n_y = count_orientations(cfg)
        lim = cfg.limits
        return cls(cfg.n, n_x, n_y, lim.sigma_x, lim.sigma_y, lim.sigma_Tf, s)

    def with_relaxation(self, s: float) -> "AfsCone":
        return AfsCone(self.n, self.n_x, self.n_y, self.sigma_x, self.sigma_y,
                       self.sigma_Tf, s)

    @property
    def max_force(self) -> float:
        return self.n * self.sigma_Tf

    def semi_axes(self, z: float) -> tuple[float, float]:
        return cone_semi_axes(self, z)

    def contains(self, u_f, tol: float = MEMBERSHIP_TOL) -> bool:
        return in_team_cone(u_f, self, tol)


def semi_axis_g(n_k: int, sigma: float, z: float, n: int, sigma_Tf: float) -> float:
    """Lateral reach of ``n_k`` agents whose deflection limit is ``sigma``."""
    if sigma >= HALF_PI:
        return n_k * sigma_Tf
    if n_k == 0:
        return 0.0
    return (n_k / n) * abs(z) * math.tan(sigma)


def cone_semi_axes(cone: AfsCone, z: float) -> tuple[float, float]:
    s, n, sT = cone.s, cone.n, cone.sigma_Tf
    c_x = (semi_axis_g(cone.n_x, s * cone.sigma_y, z, n, sT)
           + semi_axis_g(cone.n_y, s * cone.sigma_x, z, n, sT))
    c_y = (semi_axis_g(cone.n_x, s * cone.sigma_x, z, n, sT)
           + semi_axis_g(cone.n_y, s * cone.sigma_y, z, n, sT))
    return c_x, c_y


def ellipse_level(u_f, cone: AfsCone) -> float:
    """(u_x/c_x)^2 + (u_y/c_y)^2 at height u_z; inf for lateral force at a degenerate axis."""
    ux, uy, uz = (float(c) for c in u_f)
    q = 0.0
    for val, c in zip((ux, uy), cone_semi_axes(cone, uz)):
        if c > 0:
            r = val / c
            q += r * r
        elif val != 0.0:
            return INF
    return q


def in_team_cone(u_f, cone: AfsCone, tol: float = MEMBERSHIP_TOL) -> bool:
    ux, uy, uz = (float(c) for c in u_f)
    if math.sqrt(ux * ux + uy * uy + uz * uz) > cone.max_force + tol:
        return False
    if uz < -tol:
        return False
    c_x, c_y = cone_semi_axes(cone, max(uz, 0.0))
    q = 0.0
    for val, c in ((ux, c_x), (uy, c_y)):
        if c > 0:
            r = val / c
            q += r * r
        elif abs(val) > tol:
            return False
    return q <= 1.0 + tol


def scale_t_Tf(u_f, cone: AfsCone) -> float:
    norm = float(np.linalg.norm(u_f))
    if norm == 0.0:
        return 1.0
    return min(1.0, cone.max_force / norm)


def project_t_eta(u_f, cone: AfsCone) -> float:
    """Lateral shrink factor putting an already magnitude-scaled force on the ellipse.

    Forces with negative vertical component sit below the apex; they get the
    full lateral projection (0), same as the apex itself.
    """
    if float(u_f[2]) < 0.0:
        return 0.0 if (u_f[0] != 0.0 or u_f[1] != 0.0) else 1.0
    q = ellipse_level(u_f, cone)
    if q <= 1.0:
        return 1.0
    if q == INF:
        return 0.0
    return 1.0 / math.sqrt(q)
