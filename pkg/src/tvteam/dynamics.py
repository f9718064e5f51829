"""Rigid team body: state, equations of motion and a fixed-step RK4 integrator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .actuation import GRAVITY, TeamConfig, team_inertia
from .rotations import cross, orthonormalize, skew

SUBSTEP = 1e-3


@dataclass(frozen=True, eq=False)
class SimState:
    """Position and rotation in the world frame, twist in the body frame."""

    x: np.ndarray = field(default_factory=lambda: np.zeros(3))
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t: float = 0.0

    @property
    def twist(self) -> np.ndarray:
        return np.concatenate([self.omega, self.v])

    def pack(self) -> np.ndarray:
        return np.concatenate([self.x, self.R.ravel(), self.omega, self.v])

    @classmethod
    def unpack(cls, y, t: float) -> "SimState":
        y = np.asarray(y, dtype=float)
        return cls(y[0:3].copy(), y[3:12].reshape(3, 3).copy(),
                   y[12:15].copy(), y[15:18].copy(), t)


@lru_cache(maxsize=32)
def _mass_properties(cfg: TeamConfig):
    m, J = team_inertia(cfg)
    return m, J, np.linalg.inv(J)


def _rhs(y, u, m, J, Jinv, g) -> np.ndarray:
    R = y[3:12].reshape(3, 3)
    omega = y[12:15]
    v = y[15:18]
    tau, force = u[:3], u[3:]
    xdot = R @ v
    Rdot = R @ skew(omega)
    omegadot = Jinv @ (cross(J @ omega, omega) + tau)
    # gravity acts along -z of the world frame
    vdot = -cross(omega, v) + force / m - g * R[2, :]
    return np.concatenate([xdot, Rdot.ravel(), omegadot, vdot])


def dynamics_rhs(state: SimState, u, cfg: TeamConfig, gravity: float = GRAVITY) -> SimState:
    """Time derivative of ``state`` under body wrench ``u``, returned as a SimState
    whose fields hold (x_dot, R_dot, omega_dot, v_dot) and t = 1."""
    m, J, Jinv = _mass_properties(cfg)
    dy = _rhs(state.pack(), np.asarray(u, dtype=float), m, J, Jinv, gravity)
    return SimState.unpack(dy, 1.0)


def integrate_step(state: SimState, u, cfg: TeamConfig, dt: float,
                   substep: float = SUBSTEP, gravity: float = GRAVITY) -> SimState:
    """Advance ``dt`` seconds with the wrench held constant (zero-order hold)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    m, J, Jinv = _mass_properties(cfg)
    u = np.asarray(u, dtype=float)
    k = max(1, math.ceil(dt / substep - 1e-9))
    h = dt / k
    y = state.pack()
    for _ in range(k):
        k1 = _rhs(y, u, m, J, Jinv, gravity)
        k2 = _rhs(y + 0.5 * h * k1, u, m, J, Jinv, gravity)
        k3 = _rhs(y + 0.5 * h * k2, u, m, J, Jinv, gravity)
        k4 = _rhs(y + h * k3, u, m, J, Jinv, gravity)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y[3:12] = orthonormalize(y[3:12].reshape(3, 3)).ravel()
    return SimState.unpack(y, state.t + dt)


def kinetic_energy(state: SimState, cfg: TeamConfig) -> float:
    m, J, _ = _mass_properties(cfg)
    return 0.5 * float(state.omega @ J @ state.omega) + 0.5 * m * float(state.v @ state.v)


def with_time(state: SimState, t: float) -> SimState:
    return replace(state, t=t)
