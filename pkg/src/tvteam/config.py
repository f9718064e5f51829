"""Scenario configuration files (TOML).

Units are SI, angles in radians.  The maximum agent thrust is not stored; it
is derived from the thrust coefficients and the propeller speed limit.
"""
from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .actuation import ActuationLimits, Agent, TeamConfig, ThrustCoefficients, a4_inc
from .controller import Gains
from .scenario import DESCENT_START, X0


class ConfigError(ValueError):
    """Invalid configuration; the message carries ``file:line`` when known."""


@dataclass(eq=False)
class ScenarioConfig:
    team: TeamConfig
    gains: Gains = field(default_factory=Gains)
    s: float = 0.5
    duration: float = 20.0
    dt: float = 0.01
    substep: float = 1e-3
    x0: tuple = X0
    descent_start: float = DESCENT_START
    out_dir: str = "out"

    def __post_init__(self):
        if not 0.0 < self.s <= 1.0:
            raise ValueError(f"s must lie in (0, 1], got {self.s}")
        if self.duration < 0:
            raise ValueError("duration must be nonnegative")
        if self.dt <= 0 or self.substep <= 0:
            raise ValueError("dt and substep must be positive")
        self.x0 = tuple(float(v) for v in self.x0)
        if len(self.x0) != 3:
            raise ValueError("x0 needs three components")


def default_config() -> ScenarioConfig:
    return ScenarioConfig(team=a4_inc())


def to_dict(cfg: ScenarioConfig) -> dict:
    team = cfg.team
    return {
        "team": {
            "m0": team.m0,
            "J0": team.J0.tolist(),
            "agents": [{"p": a.p.tolist(), "psi": a.psi, "mass": a.mass} for a in team.agents],
        },
        "limits": {
            "sigma_x": team.limits.sigma_x,
            "sigma_y": team.limits.sigma_y,
            "sigma_omega": team.limits.sigma_omega,
        },
        "coefficients": {"rho": team.coeffs.rho, "d": team.coeffs.d, "c_l": team.coeffs.c_l},
        "gains": {"K_x": cfg.gains.K_x.tolist(), "K_R": cfg.gains.K_R.tolist(),
                  "K_xi": cfg.gains.K_xi.tolist()},
        "simulation": {"s": cfg.s, "duration": cfg.duration, "dt": cfg.dt,
                       "substep": cfg.substep, "x0": list(cfg.x0),
                       "descent_start": cfg.descent_start},
        "output": {"out_dir": cfg.out_dir},
    }


def dumps(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


def _line_of(text: str, section: str, key: str | None, index: int = 0) -> int | None:
    """1-based line of ``key`` inside the ``index``-th header of ``section``."""
    lines = text.splitlines()
    header = re.compile(r"^\s*\[+\s*" + re.escape(section) + r"(\.[^\]]*)?\s*\]+")
    starts = [i for i, ln in enumerate(lines) if header.match(ln)]
    if len(starts) <= index:
        return None
    start = starts[index]
    if key is None:
        return start + 1
    pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    for i in range(start, len(lines)):
        if pat.match(lines[i]):
            return i + 1
    return start + 1


class _Reader:
    """Pulls typed values out of the parsed tree, remembering where they came from."""

    def __init__(self, data: dict, text: str, source: str):
        self.data, self.text, self.source = data, text, source
        self.index = 0  # which array-of-tables entry is being read

    def fail(self, msg: str, section: str, key: str | None = None):
        line = _line_of(self.text, section, key, self.index if "." in section else 0)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: {msg}")

    def section(self, name: str, required: bool = True) -> dict:
        sec = self.data.get(name)
        if sec is None:
            if required:
                self.fail(f"missing section [{name}]", name)
            return {}
        if not isinstance(sec, dict):
            self.fail(f"[{name}] must be a table", name)
        return sec

    def number(self, sec: dict, section: str, key: str, default=None) -> float:
        if key not in sec:
            if default is None:
                self.fail(f"missing key '{key}'", section)
            return float(default)
        val = sec[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
            self.fail(f"'{key}' must be a finite number", section, key)
        return float(val)

    def vector(self, sec: dict, section: str, key: str, size: int, default=None) -> np.ndarray:
        if key not in sec:
            if default is None:
                self.fail(f"missing key '{key}'", section)
            return np.asarray(default, dtype=float)
        val = sec[key]
        try:
            arr = np.asarray(val, dtype=float)
        except (TypeError, ValueError):
            self.fail(f"'{key}' must be numeric", section, key)
        if arr.size != size or not np.all(np.isfinite(arr)):
            self.fail(f"'{key}' must hold {size} finite numbers", section, key)
        return arr


def parse(text: str, source: str = "<config>") -> ScenarioConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    rd = _Reader(data, text, source)
    defaults = default_config()

    team_sec = rd.section("team")
    agents_raw = team_sec.get("agents")
    if not isinstance(agents_raw, list) or not agents_raw:
        rd.fail("[team] needs at least one [[team.agents]] entry", "team")
    agents = []
    for k, raw in enumerate(agents_raw):
        rd.index = k
        p = rd.vector(raw, "team.agents", "p", 3)
        psi = rd.number(raw, "team.agents", "psi")
        mass = rd.number(raw, "team.agents", "mass")
        try:
            agents.append(Agent(p, psi, mass))
        except ValueError as exc:
            rd.fail(str(exc), "team.agents", "psi" if "psi" in str(exc) else "mass")
    rd.index = 0
    m0 = rd.number(team_sec, "team", "m0")
    J0 = rd.vector(team_sec, "team", "J0", 9).reshape(3, 3)

    lim_sec = rd.section("limits")
    coef_sec = rd.section("coefficients")
    try:
        coeffs = ThrustCoefficients(rd.number(coef_sec, "coefficients", "rho"),
                                    rd.number(coef_sec, "coefficients", "d"),
                                    rd.number(coef_sec, "coefficients", "c_l"))
    except ValueError as exc:
        rd.fail(str(exc), "coefficients")
    try:
        limits = ActuationLimits.from_coefficients(
            rd.number(lim_sec, "limits", "sigma_x"), rd.number(lim_sec, "limits", "sigma_y"),
            rd.number(lim_sec, "limits", "sigma_omega"), coeffs)
    except ValueError as exc:
        key = next((k for k in ("sigma_x", "sigma_y", "sigma_omega") if k in str(exc)), None)
        rd.fail(str(exc), "limits", key)
    try:
        team = TeamConfig(agents, m0, J0, limits, coeffs)
    except ValueError as exc:
        rd.fail(str(exc), "team", "J0" if "J0" in str(exc) else "m0")

    g_sec = rd.section("gains", required=False)
    dg = defaults.gains
    try:
        gains = Gains(rd.vector(g_sec, "gains", "K_x", 3, dg.K_x),
                      rd.vector(g_sec, "gains", "K_R", 3, dg.K_R),
                      rd.vector(g_sec, "gains", "K_xi", 6, dg.K_xi))
    except ValueError as exc:
        rd.fail(str(exc), "gains")

    sim = rd.section("simulation", required=False)
    out = rd.section("output", required=False)
    out_dir = out.get("out_dir", defaults.out_dir)
    if not isinstance(out_dir, str):
        rd.fail("'out_dir' must be a string", "output", "out_dir")
    kwargs = dict(
        s=rd.number(sim, "simulation", "s", defaults.s),
        duration=rd.number(sim, "simulation", "duration", defaults.duration),
        dt=rd.number(sim, "simulation", "dt", defaults.dt),
        substep=rd.number(sim, "simulation", "substep", defaults.substep),
        x0=tuple(rd.vector(sim, "simulation", "x0", 3, defaults.x0)),
        descent_start=rd.number(sim, "simulation", "descent_start", defaults.descent_start),
    )
    try:
        return ScenarioConfig(team=team, gains=gains, out_dir=out_dir, **kwargs)
    except ValueError as exc:
        key = next((k for k in kwargs if str(exc).startswith(k)), None)
        rd.fail(str(exc), "simulation", key)


def load(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse(text, str(path))
