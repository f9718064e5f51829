"""Wrench allocation over the agents' attainable force sets.

``ebrca`` walks the force stack from a feasible start towards the requested
wrench.  Each pass solves the whole remaining wrench with a pseudoinverse
restricted to unsaturated agents, advances until the first agent reaches its
AFS boundary, freezes that agent and repeats.  The achieved wrench change is
always a scalar multiple ``c_u`` of the requested one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actuation import ActuationLimits, AgentCommand, inverse_map, reduced_attitude
from .afs import MEMBERSHIP_TOL, in_agent_afs, team_boundary_increment

RANK_RTOL = 1e-9
PIN_TOL = 1e-9


class RankDeficientError(RuntimeError):
    """The unsaturated agents can no longer span the six wrench directions."""


@dataclass
class AllocationResult:
    f: np.ndarray
    c_u: float
    iterations: int
    unsaturated: np.ndarray

    @property
    def forces(self) -> np.ndarray:
        return self.f.reshape(-1, 3)


def truncated_effectiveness(M, unsaturated) -> np.ndarray:
    """Zero the three columns of every saturated agent: M (diag(flags) kron I3)."""
    flags = np.asarray(unsaturated, dtype=float)
    return np.asarray(M, dtype=float) @ np.kron(np.diag(flags), np.eye(3))


def wrench_rank(M) -> int:
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > RANK_RTOL * sv[0]))


def weighted_pinv(A, w=None) -> np.ndarray:
    """Minimum weighted-norm right inverse W^-1 A^T (A W^-1 A^T)^-1 of a wide matrix.

    ``w`` holds the diagonal of W.  Falls back to an SVD pseudoinverse of the
    scaled problem when A lacks full row rank.
    """
    A = np.asarray(A, dtype=float)
    winv = np.ones(A.shape[1]) if w is None else 1.0 / np.asarray(w, dtype=float)
    if wrench_rank(A) == A.shape[0]:
        AW = A * winv
        return AW.T @ np.linalg.inv(AW @ A.T)
    sq = np.sqrt(winv)
    return sq[:, None] * np.linalg.pinv(A * sq, rcond=RANK_RTOL)


def twa_step(u_delta, M, unsaturated, w=None) -> np.ndarray:
    """Force increment realizing ``u_delta`` with the unsaturated agents only."""
    Me = truncated_effectiveness(M, unsaturated)
    if wrench_rank(Me) < 6:
        raise RankDeficientError("truncated effectiveness matrix has rank < 6")
    f_delta = weighted_pinv(Me, w) @ np.asarray(u_delta, dtype=float)
    # saturated columns of Me are zero, so their rows of the inverse are too
    return f_delta


def _check_stack(f, limits: ActuationLimits) -> None:
    for i, fi in enumerate(np.asarray(f).reshape(-1, 3)):
        if not in_agent_afs(fi, limits, MEMBERSHIP_TOL):
            raise ValueError(f"initial force of agent {i} is outside its AFS")


def ebrca(u_d, M, f0, limits: ActuationLimits, unsaturated=None, w=None) -> AllocationResult:
    """Exact, direction-preserving redistributed allocation of ``u_d``.

    Returns the new stack and the achieved fraction ``c_u`` of u_d - M f0.
    Loses no exactness when the unsaturated agents stop spanning the wrench
    space; the loop just ends with a partial ``c_u``.
    """
    M = np.asarray(M, dtype=float)
    u_d = np.asarray(u_d, dtype=float)
    f = np.array(f0, dtype=float)
    n = f.size // 3
    flags = np.ones(n, dtype=bool) if unsaturated is None else np.array(unsaturated, dtype=bool)
    _check_stack(f, limits)

    u_total = u_d - M @ f
    scale = max(1.0, float(np.linalg.norm(u_d)))
    if np.linalg.norm(u_total) <= 1e-15 * scale:
        return AllocationResult(f, 1.0, 0, flags)

    c_u = 0.0
    iterations = 0
    for _ in range(2 * n + 2):
        if not flags.any() or wrench_rank(truncated_effectiveness(M, flags)) < 6:
            break
        iterations += 1
        # the residual is exactly (1 - c_u) u_total; using it keeps the direction
        u_delta = (1.0 - c_u) * u_total
        f_delta = twa_step(u_delta, M, flags, w)
        c_star, i_star = team_boundary_increment(f, f_delta, flags, limits)
        if c_star >= 1.0:
            f = f + f_delta
            c_u = 1.0
            break
        if c_star > PIN_TOL:
            f = f + c_star * f_delta
            c_u = c_u + (1.0 - c_u) * c_star
        flags[i_star] = False
    return AllocationResult(f, c_u, iterations, flags)


def project_to_agent_afs(f, limits: ActuationLimits) -> np.ndarray:
    """Clamp thrust and gimbal angles of an agent force into its AFS."""
    f = np.asarray(f, dtype=float)
    T = float(np.linalg.norm(f))
    if T == 0.0:
        return f.copy()
    eta_x = np.arcsin(np.clip(-f[1] / T, -1.0, 1.0))
    eta_y = np.arctan2(f[0], f[2])
    eta_x = np.clip(eta_x, -limits.sigma_x, limits.sigma_x)
    eta_y = np.clip(eta_y, -limits.sigma_y, limits.sigma_y)
    return min(T, limits.sigma_Tf) * reduced_attitude(eta_x, eta_y)


def rpi_baseline(u_d, M, limits: ActuationLimits, w=None) -> tuple[np.ndarray, float]:
    """Classic redistributed pseudoinverse.

    Agents whose share falls outside their AFS are clamped onto it, removed
    from the problem, and the remaining wrench is re-solved by the rest.
    Returns the stack and the unallocated force error |u_fd - u_f|.
    """
    M = np.asarray(M, dtype=float)
    u_d = np.asarray(u_d, dtype=float)
    n = M.shape[1] // 3
    flags = np.ones(n, dtype=bool)
    f = np.zeros(3 * n)
    fixed = np.zeros(3 * n)
    if wrench_rank(M) < 6:
        raise RankDeficientError("effectiveness matrix has rank < 6")
    while flags.any():
        Me = truncated_effectiveness(M, flags)
        if wrench_rank(Me) < 6:
            # clamp whatever the free agents held on the last solve
            for i in np.flatnonzero(flags):
                f[3 * i:3 * i + 3] = project_to_agent_afs(f[3 * i:3 * i + 3], limits)
            break
        f = fixed + weighted_pinv(Me, w) @ (u_d - M @ fixed)
        violators = [i for i in np.flatnonzero(flags)
                     if not in_agent_afs(f[3 * i:3 * i + 3], limits)]
        if not violators:
            break
        for i in violators:
            fixed[3 * i:3 * i + 3] = project_to_agent_afs(f[3 * i:3 * i + 3], limits)
            f[3 * i:3 * i + 3] = fixed[3 * i:3 * i + 3]
            flags[i] = False
    e_f = float(np.linalg.norm(u_d[3:] - (M @ f)[3:]))
    return f, e_f


def commands_from_stack(f, coeffs) -> list[AgentCommand]:
    return [inverse_map(fi, coeffs) for fi in np.asarray(f).reshape(-1, 3)]
