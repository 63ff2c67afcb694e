"""Command-line entry point: ``riskmpc {run,field,validate,fixtures}``.

Exit status is 0 on success, 1 for scenario or runtime errors and 2 for usage
errors (argparse's convention).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import logio, sim
from .risk import sample_field
from .scenario import ScenarioError, fixture_names, load_scenario

PROG = "riskmpc"


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog=PROG, description="Risk-field MPC trajectory planner simulations.")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    r = sub.add_parser("run", help="simulate a scenario and write its trajectory log")
    r.add_argument("scenario", help="scenario file or shipped fixture name")
    r.add_argument("--out", help="log path (default: <scenario name>.csv)")
    r.add_argument("--seed", type=int, default=None,
                   help="accepted for compatibility; has no effect (runs are deterministic)")
    r.add_argument("--figures", metavar="DIR", help="also render path/speed/lateral PNGs into DIR")
    r.add_argument("--quiet", action="store_true", help="no per-tick progress on stderr")

    f = sub.add_parser("field", help="sample the combined risk field onto a raster")
    f.add_argument("scenario")
    f.add_argument("--region", nargs=4, type=float, required=True,
                   metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    f.add_argument("--res", type=float, required=True, help="cell size in meters")
    f.add_argument("--time", type=float, default=0.0, help="object poses at this time (s)")
    f.add_argument("--out", help="raster path (default: <scenario name>_field.txt)")
    f.add_argument("--plot", metavar="PNG", help="also render a heatmap")

    v = sub.add_parser("validate", help="parse and validate a scenario without running it")
    v.add_argument("scenario")

    sub.add_parser("fixtures", help="list the shipped scenarios")
    return p


def format_metrics(m: dict) -> str:
    keys = [
        ("ticks", "ticks", "{}"),
        ("mean_solve_time", "mean_solve_time_ms", "{:.2f}"),
        ("std_solve_time", "std_solve_time_ms", "{:.2f}"),
        ("max_solve_time", "max_solve_time_ms", "{:.2f}"),
        ("min_object_distance", "min_object_distance_m", "{:.3f}"),
        ("min_speed", "min_speed_mps", "{:.3f}"),
        ("final_speed", "final_speed_mps", "{:.3f}"),
        ("max_bound_violation", "max_bound_violation_m", "{:.4f}"),
        ("terminal_lateral_error", "terminal_lateral_error_m", "{:.3f}"),
        ("converged_ticks", "converged_ticks", "{}"),
    ]
    parts = []
    for key, label, fmt in keys:
        if key not in m:
            continue
        val = m[key] * 1e3 if label.endswith("_ms") else m[key]
        parts.append(f"{label}={fmt.format(val)}")
    return "metrics " + " ".join(parts)


def _cmd_run(args) -> int:
    scenario = load_scenario(args.scenario)

    def progress(rec):
        print(f"\rt={rec.time:7.2f}s  x={rec.state.x:8.1f}  y={rec.state.y:5.2f}  "
              f"v={rec.state.v:5.2f}", end="", file=sys.stderr, flush=True)

    log = sim.run(scenario, progress=None if args.quiet else progress)
    if not args.quiet:
        print(file=sys.stderr)
    out = Path(args.out) if args.out else Path(f"{scenario.name}.csv")
    logio.write_log(log, out)
    print(f"log {out}")
    if args.figures:
        from .plotting import plot_run

        for path in plot_run(log, scenario, args.figures):
            print(f"figure {path}")
    print(format_metrics(sim.metrics(log, scenario)))
    return 0


def _cmd_field(args) -> int:
    scenario = load_scenario(args.scenario)
    objects = [(o.pose_at(args.time), o.risk) for o in sim.visible_objects(scenario, args.time)]
    grid = sample_field(args.region, args.res, scenario.lanes, objects, scenario.mpc.infra)
    out = Path(args.out) if args.out else Path(f"{scenario.name}_field.txt")
    logio.write_raster(grid, out)
    print(f"raster {out} nx={grid.nx} ny={grid.ny} max={float(grid.values.max()):.6g}")
    if args.plot:
        from .plotting import plot_field

        print(f"figure {plot_field(grid, args.plot, f'{scenario.name} risk at t={args.time:g} s')}")
    return 0


def _cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    print(f"ok {scenario.name}: {len(scenario.objects)} objects, {scenario.n_ticks} ticks "
          f"of {scenario.ts:g} s, horizon {scenario.mpc.horizon}")
    return 0


def _cmd_fixtures(args) -> int:
    for name in fixture_names():
        print(name)
    return 0


COMMANDS = {"run": _cmd_run, "field": _cmd_field, "validate": _cmd_validate, "fixtures": _cmd_fixtures}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (ScenarioError, sim.SimulationError, ValueError, OSError) as err:
        print(f"{PROG}: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
