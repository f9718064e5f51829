"""Command line entry point: ``tvteam simulate | allocate | afs-sample | config``.

Exit codes: 0 success, 1 configuration/validation error, 2 runtime or
allocation failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as config_mod
from .actuation import effectiveness_matrix, hover_stack, inverse_map
from .afs import AfsCone, cone_semi_axes, in_agent_afs, in_team_cone
from .allocation import RankDeficientError, ebrca
from .scenario import TRACE_COLUMNS, record_row, run_scenario

log = logging.getLogger("tvteam")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}")


def _load(args) -> config_mod.ScenarioConfig:
    cfg = config_mod.load(args.config) if args.config else config_mod.default_config()
    overrides = {}
    if getattr(args, "s", None) is not None:
        overrides["s"] = args.s
    if getattr(args, "duration", None) is not None:
        overrides["duration"] = args.duration
    if getattr(args, "out_dir", None) is not None:
        overrides["out_dir"] = str(args.out_dir)
    if overrides:
        try:
            cfg = replace(cfg, **overrides)
        except ValueError as exc:
            raise config_mod.ConfigError(f"command line: {exc}") from None
    return cfg


def _tag(s: float) -> str:
    return f"s{s:.2f}".replace(".", "p")


def write_trace_csv(path: Path, trace) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for rec in trace.records:
            writer.writerow([repr(float(v)) for v in record_row(rec)])


def _simulate_one(cfg: config_mod.ScenarioConfig, s: float) -> tuple[float, dict, Path]:
    trace = run_scenario(cfg.team, cfg.gains, s, cfg.duration, cfg.dt, cfg.substep,
                         cfg.x0, cfg.descent_start)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"trace_{_tag(s)}.csv"
    write_trace_csv(csv_path, trace)
    summary = {"s": s, **trace.summary()}
    (out / f"summary_{_tag(s)}.json").write_text(json.dumps(summary, indent=2) + "\n")
    return s, summary, csv_path


def cmd_simulate(args) -> int:
    cfg = _load(args)
    values = args.sweep_s if args.sweep_s else [cfg.s]
    for s in values:
        if not 0.0 < s <= 1.0:
            raise config_mod.ConfigError(f"command line: relaxation {s} outside (0, 1]")
    if len(values) > 1:
        with ProcessPoolExecutor(max_workers=min(len(values), 4)) as pool:
            results = list(pool.map(_simulate_one, [cfg] * len(values), values))
    else:
        results = [_simulate_one(cfg, values[0])]
    for s, summary, path in results:
        log.info("s=%.2f: max e_f %.3g N, max planned roll %.1f deg -> %s", s,
                 summary["max_e_f"], math.degrees(summary["max_phi_d"]), path)
        print(json.dumps({k: v for k, v in summary.items()
                          if not k.endswith("_samples")}))
    return EXIT_OK


def _initial_stack(choice: str, team) -> np.ndarray:
    if choice == "hover":
        return hover_stack(team)
    if choice == "zero":
        return np.zeros(3 * team.n)
    values = _floats(choice)
    if len(values) != 3 * team.n:
        raise config_mod.ConfigError(
            f"command line: initial stack needs {3 * team.n} numbers, got {len(values)}")
    return np.array(values)


def cmd_allocate(args) -> int:
    cfg = _load(args)
    team = cfg.team
    f0 = _initial_stack(args.initial, team)
    for i, fi in enumerate(f0.reshape(-1, 3)):
        if not in_agent_afs(fi, team.limits):
            raise config_mod.ConfigError(f"command line: initial force of agent {i} is outside its AFS")
    M = effectiveness_matrix(team)
    u_d = np.asarray(args.wrench, dtype=float)
    res = ebrca(u_d, M, f0, team.limits)
    agents = []
    for fi in res.forces:
        cmd = inverse_map(fi, team.coeffs)
        agents.append({"f": fi.tolist(), "eta_x": cmd.eta_x, "eta_y": cmd.eta_y, "omega": cmd.omega})
    achieved = M @ res.f
    report = {"c_u": res.c_u, "iterations": res.iterations, "agents": agents,
              "wrench": achieved.tolist(),
              "residual": float(np.linalg.norm(u_d - achieved))}
    if args.json:
        print(json.dumps(report))
    else:
        print(f"c_u = {res.c_u:.6f}  iterations = {res.iterations}")
        for i, a in enumerate(agents):
            fx, fy, fz = a["f"]
            print(f"agent {i}: f = ({fx:+.5f}, {fy:+.5f}, {fz:+.5f}) N  "
                  f"eta_x = {math.degrees(a['eta_x']):+.2f} deg  "
                  f"eta_y = {math.degrees(a['eta_y']):+.2f} deg  omega = {a['omega']:.2f} rad/s")
        print(f"residual |u_d - M f| = {report['residual']:.3e}")
    return EXIT_OK


def afs_samples(team, s: float, z_levels, count: int, seed: int):
    """Rows (fx, fy, fz, in_cone, ebrca_reachable) around the cone at each height.

    The first row per height is the axis point; the rest are uniform over a
    box 1.5 times the ellipse.
    """
    rng = np.random.default_rng(seed)
    cone = AfsCone.from_config(team, s)
    M = effectiveness_matrix(team)
    f0 = hover_stack(team)
    rows = []
    for z in z_levels:
        c_x, c_y = cone_semi_axes(cone, max(z, 0.0))
        half_x = 1.5 * c_x if c_x > 0 else 1.0
        half_y = 1.5 * c_y if c_y > 0 else 1.0
        pts = [(0.0, 0.0, z)]
        for _ in range(max(count - 1, 0)):
            pts.append((rng.uniform(-half_x, half_x), rng.uniform(-half_y, half_y), z))
        for p in pts:
            u = np.array([0.0, 0.0, 0.0, *p])
            reachable = ebrca(u, M, f0, team.limits).c_u >= 1.0
            rows.append((p[0], p[1], p[2], in_team_cone(p, cone), reachable))
    return rows


def cmd_afs_sample(args) -> int:
    cfg = _load(args)
    s = cfg.s
    rows = afs_samples(cfg.team, s, args.z_levels, args.count, args.seed)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh)
        writer.writerow(["fx", "fy", "fz", "in_cone", "ebrca_reachable"])
        for fx, fy, fz, inside, reach in rows:
            writer.writerow([repr(float(fx)), repr(float(fy)), repr(float(fz)), int(inside), int(reach)])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_config(args) -> int:
    cfg = _load(args)
    sys.stdout.write(config_mod.dumps(cfg))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """Usage errors are validation errors: exit 1, not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tvteam", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="TOML scenario file (default: built-in A4-Inc)")
        p.add_argument("--s", type=float, help="planner relaxation in (0, 1]")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", help="run the tilting-hover scenario")
    common(p)
    p.add_argument("--duration", type=float)
    p.add_argument("--out-dir", type=Path)
    p.add_argument("--sweep-s", type=_floats, help="comma separated relaxations, one run each")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("allocate", help="single-shot EBRCA allocation")
    common(p)
    p.add_argument("--wrench", type=float, nargs=6, required=True,
                   metavar=("TX", "TY", "TZ", "FX", "FY", "FZ"))
    p.add_argument("--initial", default="hover",
                   help="'hover', 'zero' or 3n comma separated agent-frame forces")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("afs-sample", help="sample forces against the cone and the allocator")
    common(p)
    p.add_argument("--z-levels", type=_floats, default=[5.0, 15.0, 25.0])
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_afs_sample)

    p = sub.add_parser("config", help="print the effective configuration as TOML")
    common(p)
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except config_mod.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (RankDeficientError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
