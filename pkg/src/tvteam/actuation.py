"""Team configuration, thrust model and the force <-> gimbal command mapping."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .rotations import rot_z, skew

GRAVITY = 9.81
HALF_PI = 0.5 * np.pi
PSI_TOL = 1e-12


@dataclass(frozen=True)
class ThrustCoefficients:
    rho: float = 1.225
    d: float = 0.2032
    c_l: float = 0.1

    def __post_init__(self):
        if min(self.rho, self.d, self.c_l) <= 0:
            raise ValueError("thrust coefficients must be positive")

    @property
    def gain(self) -> float:
        """rho d^4 c_l, thrust per squared propeller speed."""
        return self.rho * self.d ** 4 * self.c_l


@dataclass(frozen=True)
class ActuationLimits:
    """Gimbal angle limits, propeller speed limit and the implied max thrust."""

    sigma_x: float
    sigma_y: float
    sigma_omega: float
    sigma_Tf: float

    def __post_init__(self):
        for name in ("sigma_x", "sigma_y"):
            val = getattr(self, name)
            if not 0.0 < val <= HALF_PI + 1e-12:
                raise ValueError(f"{name} must lie in (0, pi/2], got {val}")
        if self.sigma_omega <= 0 or self.sigma_Tf <= 0:
            raise ValueError("sigma_omega and sigma_Tf must be positive")

    @classmethod
    def from_coefficients(cls, sigma_x, sigma_y, sigma_omega,
                          coeffs: ThrustCoefficients) -> "ActuationLimits":
        return cls(sigma_x, sigma_y, sigma_omega, coeffs.gain * sigma_omega ** 2)


class AgentCommand(NamedTuple):
    eta_x: float
    eta_y: float
    omega: float

    def within(self, limits: ActuationLimits, tol: float = 1e-9) -> bool:
        return (abs(self.eta_x) <= limits.sigma_x + tol
                and abs(self.eta_y) <= limits.sigma_y + tol
                and -tol <= self.omega <= limits.sigma_omega * (1 + tol))


@dataclass(frozen=True)
class Agent:
    p: np.ndarray
    psi: float
    mass: float

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).reshape(3))
        if self.mass <= 0:
            raise ValueError("agent mass must be positive")
        k = round(self.psi / HALF_PI)
        if k < 0 or abs(self.psi - k * HALF_PI) > PSI_TOL:
            raise ValueError(f"psi must be a nonnegative multiple of pi/2, got {self.psi}")

    @property
    def quarter_turns(self) -> int:
        return int(round(self.psi / HALF_PI))


@dataclass(frozen=True, eq=False)
class TeamConfig:
    agents: tuple
    m0: float
    J0: np.ndarray
    limits: ActuationLimits
    coeffs: ThrustCoefficients = field(default_factory=ThrustCoefficients)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        J0 = np.asarray(self.J0, dtype=float)
        object.__setattr__(self, "J0", J0)
        if not self.agents:
            raise ValueError("a team needs at least one agent")
        if self.m0 <= 0:
            raise ValueError("navigator mass m0 must be positive")
        if J0.shape != (3, 3) or not np.allclose(J0, J0.T, atol=1e-12):
            raise ValueError("J0 must be a symmetric 3x3 matrix")
        if np.linalg.eigvalsh(J0).min() <= 0:
            raise ValueError("J0 must be positive definite")
        expected = self.coeffs.gain * self.limits.sigma_omega ** 2
        if abs(expected - self.limits.sigma_Tf) > 1e-9 * expected:
            raise ValueError("sigma_Tf is inconsistent with rho d^4 c_l sigma_omega^2")

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def positions(self) -> np.ndarray:
        return np.array([a.p for a in self.agents])

    @property
    def psis(self) -> np.ndarray:
        return np.array([a.psi for a in self.agents])


def a4_inc(agent_mass: float = 0.5, m0: float = 0.3, arm: float = 0.25,
           sigma_x: float = np.pi / 6, sigma_y: float = np.pi / 4,
           psis: Sequence[float] = (HALF_PI, HALF_PI, 0.0, 0.0),
           J0=None, coeffs: ThrustCoefficients | None = None) -> TeamConfig:
    """Four-agent square team; by default agents 1 and 2 are turned by 90 deg.

    Max thrust per agent is set to twice the agent weight; the propeller speed
    limit is back-computed from the thrust coefficients.
    """
    coeffs = coeffs or ThrustCoefficients()
    J0 = np.diag([5e-3, 5e-3, 9e-3]) if J0 is None else J0
    sigma_Tf = 2.0 * agent_mass * GRAVITY
    sigma_omega = np.sqrt(sigma_Tf / coeffs.gain)
    corners = [(arm, arm, 0.0), (-arm, arm, 0.0), (-arm, -arm, 0.0), (arm, -arm, 0.0)]
    agents = [Agent(p, psi, agent_mass) for p, psi in zip(corners, psis)]
    limits = ActuationLimits(sigma_x, sigma_y, sigma_omega, sigma_Tf)
    return TeamConfig(agents, m0, J0, limits, coeffs)


def reduced_attitude(eta_x: float, eta_y: float) -> np.ndarray:
    cx = np.cos(eta_x)
    return np.array([cx * np.sin(eta_y), -np.sin(eta_x), cx * np.cos(eta_y)])


def thrust_magnitude(omega: float, coeffs: ThrustCoefficients) -> float:
    return coeffs.gain * omega ** 2


def agent_force(cmd: AgentCommand, coeffs: ThrustCoefficients) -> np.ndarray:
    eta_x, eta_y, omega = cmd
    return thrust_magnitude(omega, coeffs) * reduced_attitude(eta_x, eta_y)


def _sgn(x: float) -> float:
    return -1.0 if x < 0 else 1.0


def inverse_map(f_d, coeffs: ThrustCoefficients) -> AgentCommand:
    """Gimbal angles and propeller speed producing the agent-frame force ``f_d``.

    Zero force maps to the zero command.  Raises on the eta_x = +-pi/2
    singularity, which the gimbal limits exclude.
    """
    fx, fy, fz = (float(c) for c in f_d)
    T = float(np.sqrt(fx * fx + fy * fy + fz * fz))
    if T == 0.0:
        return AgentCommand(0.0, 0.0, 0.0)
    eta_x = float(np.arcsin(np.clip(-fy / T, -1.0, 1.0)))
    c = np.cos(eta_x)
    if abs(c) < 1e-12:
        raise ValueError("force direction hits the eta_x = +-pi/2 singularity")
    sg = _sgn(c)
    eta_y = float(np.arctan2(fx / sg, fz / sg))
    omega = float(np.sqrt(T / coeffs.gain))
    return AgentCommand(eta_x, eta_y, omega)


def effectiveness_matrix(cfg: TeamConfig) -> np.ndarray:
    """6 x 3n map from stacked agent-frame forces to the body wrench (torque; force)."""
    M = np.zeros((6, 3 * cfg.n))
    for i, agent in enumerate(cfg.agents):
        Rz = rot_z(agent.psi)
        M[:3, 3 * i:3 * i + 3] = skew(agent.p) @ Rz
        M[3:, 3 * i:3 * i + 3] = Rz
    return M


def team_inertia(cfg: TeamConfig) -> tuple[float, np.ndarray]:
    m_C = cfg.m0 + sum(a.mass for a in cfg.agents)
    J_C = cfg.J0.copy()
    for a in cfg.agents:
        S = skew(a.p)
        J_C -= a.mass * S @ S
    return m_C, J_C


def spatial_inertia(cfg: TeamConfig) -> np.ndarray:
    m_C, J_C = team_inertia(cfg)
    G = np.zeros((6, 6))
    G[:3, :3] = J_C
    G[3:, 3:] = m_C * np.eye(3)
    return G


def count_orientations(cfg: TeamConfig) -> tuple[int, int]:
    """(n_x, n_y): agents aligned with the team x axis vs. turned by an odd quarter."""
    n_x = sum(1 for a in cfg.agents if a.quarter_turns % 2 == 0)
    return n_x, cfg.n - n_x


def hover_stack(cfg: TeamConfig) -> np.ndarray:
    """Equal vertical split of the team weight, in agent frames."""
    m_C, _ = team_inertia(cfg)
    f = np.zeros(3 * cfg.n)
    f[2::3] = m_C * GRAVITY / cfg.n
    return f


def stack_to_commands(f, cfg: TeamConfig) -> list[AgentCommand]:
    f = np.asarray(f, dtype=float).reshape(cfg.n, 3)
    return [inverse_map(fi, cfg.coeffs) for fi in f]
