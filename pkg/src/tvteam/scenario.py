"""Tilting-hover scenario: reference trajectory and the closed-loop runner.

The controller runs at a fixed tick; the plant is integrated with RK4 substeps
in between while the allocated wrench is held.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .actuation import TeamConfig, effectiveness_matrix, hover_stack, inverse_map
from .afs import AfsCone, in_agent_afs
from .allocation import RankDeficientError, ebrca, wrench_rank
from .controller import (Gains, Reference, control_law, lyapunov_diagnostics,
                         plan_attitude, reference_wrench, tracking_errors)
from .dynamics import SUBSTEP, SimState, integrate_step
from .rotations import euler_zyx, rot_x

log = logging.getLogger(__name__)

CLIMB_HEIGHT = 1.5
CLIMB_TIME = 2.0
TILT_START, TILT_PEAK, TILT_END = 4.0, 7.0, 10.0
MAX_ROLL = math.pi / 3
DESCENT_START = 12.0
X0 = (0.5, -0.5, 0.0)


def _cosine_ramp(tau: float, sign: float):
    """Height change 0.75(1 - cos(tau pi/2)) over two seconds and its derivatives."""
    w = math.pi / CLIMB_TIME
    a = 0.5 * CLIMB_HEIGHT
    return (sign * a * (1.0 - math.cos(w * tau)),
            sign * a * w * math.sin(w * tau),
            sign * a * w * w * math.cos(w * tau))


def roll_reference(t: float) -> float:
    if TILT_START <= t <= TILT_END:
        return (MAX_ROLL / 2) * (1.0 + math.cos((t - TILT_PEAK) * math.pi / 3.0))
    return 0.0


def reference_at(t: float, descent_start: float = DESCENT_START) -> Reference:
    """Climb to 1.5 m, hover, roll out to pi/3 and back, then descend."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t <= CLIMB_TIME:
        z, zd, zdd = _cosine_ramp(t, 1.0)
    elif descent_start <= t <= descent_start + CLIMB_TIME:
        z, zd, zdd = _cosine_ramp(t - descent_start, -1.0)
        z += CLIMB_HEIGHT
    elif t > descent_start + CLIMB_TIME:
        z, zd, zdd = 0.0, 0.0, 0.0
    else:
        z, zd, zdd = CLIMB_HEIGHT, 0.0, 0.0
    return Reference(np.array([0.0, 0.0, z]), np.array([0.0, 0.0, zd]),
                     np.array([0.0, 0.0, zdd]), rot_x(roll_reference(t)))


@dataclass
class TraceRecord:
    t: float
    x: np.ndarray
    euler: np.ndarray
    omega: np.ndarray
    v: np.ndarray
    x_r: np.ndarray
    phi_r: float
    phi_d: float
    u_d: np.ndarray
    e_f: float
    c_u: float
    V_R: float
    V_x: float
    t_Tf: float
    t_eta: float
    R: np.ndarray = field(repr=False, default=None)
    forces: np.ndarray = field(repr=False, default=None)


TRACE_COLUMNS = (
    ["t", "x", "y", "z", "roll", "pitch", "yaw", "wx", "wy", "wz", "vx", "vy", "vz",
     "x_r", "y_r", "z_r", "phi_r", "phi_d"]
    + [f"u_d{i}" for i in range(6)]
    + ["e_f", "c_u", "V_R", "V_x", "t_Tf", "t_eta"]
)


def record_row(rec: TraceRecord) -> list[float]:
    return ([rec.t, *rec.x, *rec.euler, *rec.omega, *rec.v, *rec.x_r, rec.phi_r, rec.phi_d,
             *rec.u_d, rec.e_f, rec.c_u, rec.V_R, rec.V_x, rec.t_Tf, rec.t_eta])


@dataclass
class Trace:
    records: list[TraceRecord] = field(default_factory=list)
    runtime: float = 0.0

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def as_array(self) -> np.ndarray:
        return np.array([record_row(r) for r in self.records]).reshape(-1, len(TRACE_COLUMNS))

    def summary(self) -> dict:
        if not self.records:
            return {"max_e_f": 0.0, "max_phi_d": 0.0, "final_e_x": None,
                    "V_x_samples": [], "V_R_samples": [], "runtime": self.runtime, "ticks": 0}
        t = self.column("t")
        e_f = self.column("e_f")
        last = self.records[-1]
        # once per second
        idx = [int(np.argmin(np.abs(t - s))) for s in np.arange(0.0, t[-1] + 1e-9, 1.0)]
        return {
            "max_e_f": float(e_f.max()),
            "t_max_e_f": float(t[int(e_f.argmax())]),
            "max_phi_d": float(np.abs(self.column("phi_d")).max()),
            "final_e_x": float(np.linalg.norm(last.x - last.x_r)),
            "min_c_u": float(self.column("c_u").min()),
            "V_x_samples": [float(self.records[i].V_x) for i in idx],
            "V_R_samples": [float(self.records[i].V_R) for i in idx],
            "runtime": self.runtime,
            "ticks": len(self.records),
        }


def _force_error(u_d, M, f) -> float:
    return float(np.linalg.norm(u_d[3:] - (M @ f)[3:]))


def allocate_tick(u_d, M, f_prev, cfg: TeamConfig):
    """EBRCA warm-started from the previous stack.

    A warm start sitting on an AFS boundary can pin the allocator (c_u = 0
    while the stack stays put); when the warm start falls short, the equal
    hover split is tried as well and the result with the smaller force
    error is kept.
    """
    limits = cfg.limits
    hover = hover_stack(cfg)
    if not all(in_agent_afs(fi, limits) for fi in f_prev.reshape(-1, 3)):
        f_prev = hover
    alloc = ebrca(u_d, M, f_prev, limits)
    if alloc.c_u < 1.0 and not np.array_equal(f_prev, hover):
        retry = ebrca(u_d, M, hover, limits)
        if _force_error(u_d, M, retry.f) < _force_error(u_d, M, alloc.f):
            alloc = retry
    return alloc


def run_scenario(cfg: TeamConfig, gains: Gains | None = None, s_planner: float = 0.5,
                 duration: float = 20.0, dt: float = 0.01, substep: float = SUBSTEP,
                 x0=X0, descent_start: float = DESCENT_START) -> Trace:
    """Closed-loop tilting-hover run.

    Each tick: reference -> planner -> projected control law -> allocation
    (warm-started from the previous stack) -> gimbal commands -> plant.
    """
    gains = gains or Gains()
    M = effectiveness_matrix(cfg)
    if wrench_rank(M) < 6:
        raise RankDeficientError("team effectiveness matrix has rank < 6")
    limits = cfg.limits
    cone_plan = AfsCone.from_config(cfg, s_planner)
    cone_full = AfsCone.from_config(cfg, 1.0)

    state = SimState(x=np.array(x0, dtype=float))
    f = hover_stack(cfg)
    trace = Trace()
    started = time.perf_counter()
    n_ticks = int(round(duration / dt))
    for k in range(n_ticks):
        t = k * dt
        state = SimState(state.x, state.R, state.omega, state.v, t)
        ref = reference_at(t, descent_start)
        u_r0 = reference_wrench(state, ref, ref.R_r, gains, cfg)
        plan = plan_attitude(ref, u_r0[3:], cone_plan, state.R)
        ctrl = control_law(state, ref, plan.R_d, gains, cfg, cone_full)

        alloc = allocate_tick(ctrl.u_d, M, f, cfg)
        f = alloc.f
        for i, fi in enumerate(f.reshape(-1, 3)):
            cmd = inverse_map(fi, cfg.coeffs)
            if not cmd.within(limits):
                raise RuntimeError(f"t={t:.2f}: agent {i} command {cmd} violates the limits")
        u = M @ f
        e_f = _force_error(ctrl.u_d, M, f)
        V_R, V_x = lyapunov_diagnostics(state, ref, plan.R_d, gains)
        trace.records.append(TraceRecord(
            t=t, x=state.x.copy(), euler=euler_zyx(state.R), omega=state.omega.copy(),
            v=state.v.copy(), x_r=ref.x_r.copy(), phi_r=float(euler_zyx(ref.R_r)[0]),
            phi_d=float(euler_zyx(plan.R_d)[0]), u_d=ctrl.u_d.copy(), e_f=e_f,
            c_u=alloc.c_u, V_R=V_R, V_x=V_x, t_Tf=ctrl.t_Tf, t_eta=ctrl.t_eta,
            R=state.R.copy(), forces=f.copy(),
        ))
        state = integrate_step(state, u, cfg, dt, substep)
    trace.runtime = time.perf_counter() - started
    log.info("scenario s=%.2f finished %d ticks in %.2fs", s_planner, n_ticks, trace.runtime)
    return trace


def position_errors(trace: Trace) -> np.ndarray:
    return np.array([np.linalg.norm(r.x - r.x_r) for r in trace.records])


__all__ = ["reference_at", "roll_reference", "run_scenario", "Trace", "TraceRecord",
           "TRACE_COLUMNS", "position_errors", "tracking_errors"]
