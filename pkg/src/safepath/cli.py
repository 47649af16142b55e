"""Command-line entry point: ``safepath plan | bench | ablate | eval``.

Exit codes: 0 success, 1 planning failure, 2 usage or input-format error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from . import __version__
from .baselines import astar_shortest, maximin_clearance_path
from .bench import ABLATION_MODES, PLANNERS, MapSpec, aggregate, generate_map, run_ablation, run_benchmark
from .gridmap import GridIndex, MapFormatError, OccupancyGrid, distance_transform, load_map
from .metrics import MetricError, evaluate_planner
from .render import render_svg, write_pgm
from .upp import PlanResult, UnifiedPathPlanner, UppConfig

EXIT_OK = 0
EXIT_PLAN_FAILED = 1
EXIT_USAGE = 2

log = logging.getLogger("safepath")


class UsageError(Exception):
    pass


def load_config(path: Optional[str]) -> UppConfig:
    """Read UppConfig overrides from the ``[upp]`` section of an INI-style file."""
    if path is None:
        return UppConfig()
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from None
    if not parser.has_section("upp"):
        raise UsageError(f"{path}: missing [upp] section")
    try:
        return UppConfig.from_mapping(dict(parser.items("upp")))
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def parse_cell(text: str) -> GridIndex:
    try:
        r, c = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROW,COL, got {text!r}") from None
    return r, c


def parse_inits(text: str) -> List[Tuple[float, float]]:
    out = []
    for item in text.split(","):
        try:
            a, b = (float(v) for v in item.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected ALPHA:BETA pairs, got {item!r}") from None
        out.append((a, b))
    return out


def read_path_file(path: str) -> Tuple[GridIndex, ...]:
    """A path is a JSON array of [row, col] pairs, or one ``row,col`` per line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read path {path}: {exc}") from None
    try:
        if text.lstrip().startswith("["):
            cells = tuple((int(r), int(c)) for r, c in json.loads(text))
        else:
            cells = tuple(parse_cell(line.strip()) for line in text.splitlines() if line.strip())
    except (ValueError, TypeError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"{path}: malformed path ({exc})") from None
    if not cells:
        raise UsageError(f"{path}: empty path")
    return cells


def write_trace(result: PlanResult, out: str) -> None:
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("expansion", "row", "col", "alpha", "beta"))
        for e in result.param_trace or ():
            writer.writerow((e.expansion, e.row, e.col, f"{e.alpha:.6f}", f"{e.beta:.6f}"))


def _load_grid(args) -> OccupancyGrid:
    try:
        return load_map(args.map, cell_size=args.cell_size)
    except OSError as exc:
        raise UsageError(f"cannot read map {args.map}: {exc}") from None


def _metrics_payload(grid, dfield, result: PlanResult, time_ms: float = 0.0) -> dict:
    metrics, osi = evaluate_planner(grid, dfield, result, plan_time=time_ms)
    return {
        "length_m": metrics.length,
        "clearance_cm": metrics.min_clearance * 100.0,
        "turn_deg": metrics.turn_total,
        "O": osi.O,
        "C": osi.C,
        "B": osi.B,
        "R": osi.R,
        "osi": osi.osi,
    }


def cmd_plan(args) -> int:
    grid = _load_grid(args)
    config = load_config(args.config)
    dfield = distance_transform(grid)
    upp = UnifiedPathPlanner(config)
    if args.dump_safety:
        write_pgm(upp.prepare(grid).safety.values, args.dump_safety)

    t0 = time.perf_counter()
    if args.planner == "upp":
        result = upp.plan(grid, args.start, args.goal, trace=bool(args.trace))
    elif args.planner == "astar":
        result = astar_shortest(grid, args.start, args.goal)
    else:
        result = maximin_clearance_path(grid, dfield, args.start, args.goal)
    time_ms = (time.perf_counter() - t0) * 1000.0

    if args.trace and result.param_trace is not None:
        write_trace(result, args.trace)
    payload = {"planner": args.planner, "outcome": result.outcome, "time_ms": time_ms, "expanded": result.expanded}
    if not result.success:
        payload["reason"] = result.reason
        print(json.dumps(payload, indent=2))
        return EXIT_PLAN_FAILED
    payload["g_cost"] = result.g_cost
    payload.update(_metrics_payload(grid, dfield, result, time_ms))
    payload["path"] = [list(n) for n in result.path]
    if args.svg:
        render_svg(grid, [(args.planner, result.path)], args.svg)
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        maps = [MapSpec.parse(s) for s in args.maps]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    planners = [p.strip() for p in args.planners.split(",") if p.strip()]
    config = load_config(args.config)
    report = run_benchmark(maps, planners, trials=args.trials, seed=args.seed, config=config, out_dir=args.out)
    if args.render:
        _render_scenarios(report, maps, args)
    print(json.dumps(report.aggregates(), indent=2, default=str))
    return EXIT_OK


def _render_scenarios(report, maps, args) -> None:
    out = Path(args.out)
    by_scenario = {}
    for row in report.rows:
        if row.path is not None:
            by_scenario.setdefault(row.scenario_id, []).append((row.planner, row.path))
    for spec in maps:
        grid = generate_map(spec)
        for k in range(min(args.render, args.trials)):
            sid = f"{spec.map_id}#{k}"
            if sid in by_scenario:
                render_svg(grid, by_scenario[sid], out / f"{spec.map_id}_{k}.svg")


def cmd_ablate(args) -> int:
    try:
        spec = MapSpec.parse(args.map)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    modes = [m.strip() for m in args.mode.split(",")] if args.mode else list(ABLATION_MODES)
    for m in modes:
        if m not in ABLATION_MODES:
            raise UsageError(f"unknown mode {m!r}; choose from {', '.join(ABLATION_MODES)}")
    config = load_config(args.config)
    report = run_ablation(
        spec, modes=modes, inits=args.inits, trials=args.trials, seed=args.seed, config=config, out_dir=args.out
    )
    summary = {}
    for mode in modes:
        for a0, b0 in args.inits or [(config.alpha_base, config.beta_base)]:
            summary[f"{mode} ({a0:g},{b0:g})"] = aggregate(report.rows_for("upp", mode=mode, alpha0=a0, beta0=b0))
    print(json.dumps(summary, indent=2, default=str))
    return EXIT_OK


def cmd_eval(args) -> int:
    grid = _load_grid(args)
    path = read_path_file(args.path)
    for a, b in zip(path, path[1:]):
        if max(abs(a[0] - b[0]), abs(a[1] - b[1])) != 1:
            raise UsageError(f"path cells {a} and {b} are not adjacent")
    dfield = distance_transform(grid)
    result = PlanResult(outcome="success", path=path)
    try:
        payload = _metrics_payload(grid, dfield, result)
    except (MetricError, IndexError) as exc:
        raise UsageError(f"path is not valid on this map: {exc}") from None
    except RuntimeError as exc:
        raise UsageError(str(exc)) from None
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="safepath", description="Safety-aware grid path planning and benchmarks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="plan one start/goal query on a map file")
    plan.add_argument("--map", required=True, help="ASCII map or PGM image")
    plan.add_argument("--cell-size", type=float, help="meters per cell (required for PGM maps)")
    plan.add_argument("--start", required=True, type=parse_cell, help="ROW,COL")
    plan.add_argument("--goal", required=True, type=parse_cell, help="ROW,COL")
    plan.add_argument("--planner", default="upp", choices=PLANNERS)
    plan.add_argument("--config", help="INI file with an [upp] section overriding planner parameters")
    plan.add_argument("--svg", help="write an SVG of the path")
    plan.add_argument("--trace", help="write the per-expansion (alpha, beta) trace as CSV")
    plan.add_argument("--dump-safety", help="write the safety field as a PGM image")
    plan.set_defaults(func=cmd_plan)

    bench = sub.add_parser("bench", help="run planners over generated maps")
    bench.add_argument(
        "--maps",
        required=True,
        nargs="+",
        help="map specs style:WxH:density:seed[:cell_size], e.g. cluttered-scatter:128x128:0.03:1",
    )
    bench.add_argument("--planners", default="upp,astar", help=f"comma list from {','.join(PLANNERS)}")
    bench.add_argument("--trials", type=int, default=10)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", required=True, help="output directory")
    bench.add_argument("--config")
    bench.add_argument("--render", type=int, default=0, metavar="K", help="SVG for the first K scenarios per map")
    bench.set_defaults(func=cmd_bench)

    ablate = sub.add_parser("ablate", help="UPP with adaptation switched on/off and varied initial weights")
    ablate.add_argument("--map", required=True, help="map spec style:WxH:density:seed[:cell_size]")
    ablate.add_argument("--mode", help=f"comma list from {','.join(ABLATION_MODES)} (default: all)")
    ablate.add_argument("--inits", type=parse_inits, help="ALPHA:BETA pairs, e.g. 0.25:2.5,0.5:10,0.75:40")
    ablate.add_argument("--trials", type=int, default=10)
    ablate.add_argument("--seed", type=int, default=0)
    ablate.add_argument("--out", help="output directory")
    ablate.add_argument("--config")
    ablate.set_defaults(func=cmd_ablate)

    ev = sub.add_parser("eval", help="metrics and OptiSafe index of a given path")
    ev.add_argument("--map", required=True)
    ev.add_argument("--cell-size", type=float)
    ev.add_argument("--path", required=True, help="JSON [[r,c],...] or one ROW,COL per line")
    ev.set_defaults(func=cmd_eval)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, MapFormatError) as exc:
        print(f"safepath: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"safepath: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
