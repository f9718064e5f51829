"""Frame conventions and small rotation helpers.

World z points up.  Rotations are stored as full 3x3 matrices; wrenches are
stacked (torque; force) and twists (angular; linear), both in the team body
frame.
"""
from __future__ import annotations

import numpy as np

SKEW_TOL = 1e-9
UNIT_TOL = 1e-9

E3 = np.array([0.0, 0.0, 1.0])


def skew(v) -> np.ndarray:
    """Return [v]x such that skew(v) @ w == cross(v, w)."""
    x, y, z = (float(c) for c in v)
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def cross(a, b) -> np.ndarray:
    """3-vector cross product; much cheaper than np.cross for single vectors."""
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def vee(A, tol: float = SKEW_TOL) -> np.ndarray:
    """Inverse of :func:`skew`. Rejects matrices that are not skew-symmetric."""
    A = np.asarray(A, dtype=float)
    if A.shape != (3, 3):
        raise ValueError(f"vee expects a 3x3 matrix, got shape {A.shape}")
    if np.linalg.norm(A + A.T) > tol:
        raise ValueError("matrix is not skew-symmetric")
    return np.array([A[2, 1], A[0, 2], A[1, 0]])


def rot_x(phi: float) -> np.ndarray:
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[1.0, 0.0, 0.0],
                     [0.0, c, -s],
                     [0.0, s, c]])


def rot_z(psi: float) -> np.ndarray:
    c, s = np.cos(psi), np.sin(psi)
    return np.array([[c, -s, 0.0],
                     [s, c, 0.0],
                     [0.0, 0.0, 1.0]])


def rodrigues(v, axis, theta: float) -> np.ndarray:
    """Rotate ``v`` about the unit vector ``axis`` by ``theta`` radians."""
    v = np.asarray(v, dtype=float)
    k = np.asarray(axis, dtype=float)
    if abs(np.linalg.norm(k) - 1.0) > UNIT_TOL:
        raise ValueError("rotation axis must be a unit vector")
    c, s = np.cos(theta), np.sin(theta)
    return v * c + cross(k, v) * s + k * np.dot(k, v) * (1.0 - c)


def orthonormalize(R) -> np.ndarray:
    """Nearest rotation matrix in the Frobenius sense (polar projection)."""
    U, _, Vt = np.linalg.svd(np.asarray(R, dtype=float))
    Q = U @ Vt
    if np.linalg.det(Q) < 0:
        U[:, -1] *= -1.0
        Q = U @ Vt
    return Q


def is_rotation(R, tol: float = 1e-9) -> bool:
    R = np.asarray(R, dtype=float)
    return (R.shape == (3, 3)
            and np.linalg.norm(R.T @ R - np.eye(3)) <= tol
            and abs(np.linalg.det(R) - 1.0) <= tol)


def euler_zyx(R) -> np.ndarray:
    """(roll, pitch, yaw) of R = Rz(yaw) Ry(pitch) Rx(roll)."""
    R = np.asarray(R, dtype=float)
    roll = np.arctan2(R[2, 1], R[2, 2])
    pitch = -np.arcsin(np.clip(R[2, 0], -1.0, 1.0))
    yaw = np.arctan2(R[1, 0], R[0, 0])
    return np.array([roll, pitch, yaw])
