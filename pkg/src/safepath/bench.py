"""Seeded map generation, scenario sampling and planner benchmarks.

Reports are written as CSV (fixed column order), JSON (rows plus
per-planner aggregates) and a JSON-lines sidecar holding every successful
path so metrics can be recomputed from the map.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import statistics
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .baselines import astar_shortest, maximin_clearance_path, reachable_set
from .gridmap import GridIndex, OccupancyGrid, distance_transform
from .metrics import ReferenceCache, evaluate_planner
from .upp import FAILURE, PlanResult, UnifiedPathPlanner, UppConfig

log = logging.getLogger(__name__)

SPARSE = "sparse-blocks"
CLUTTERED = "cluttered-scatter"
STYLES = (SPARSE, CLUTTERED)
MAX_DENSITY = 0.6
BORDER = 2

CSV_COLUMNS = ("scenario_id", "planner", "outcome", "time_ms", "length_m", "clearance_cm", "turn_deg", "O", "C", "osi")
ABLATION_COLUMNS = (
    "mode",
    "alpha0",
    "beta0",
    "scenario_id",
    "outcome",
    "time_ms",
    "length_m",
    "clearance_cm",
    "turn_deg",
    "expanded",
)
ABLATION_MODES = {
    "both-fixed": (False, False),
    "adaptive-alpha": (True, False),
    "adaptive-beta": (False, True),
    "both-adaptive": (True, True),
}
TIMING_NOTE = (
    "time_ms is wall clock around the planning call only; map preparation "
    "(distance transform, safety field) is excluded. Values vary with OS scheduling."
)


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class MapSpec:
    width: int = 128
    height: int = 128
    cell_size: float = 0.05
    density: float = 0.3
    style: str = CLUTTERED
    seed: int = 0

    @property
    def map_id(self) -> str:
        return f"{self.style}-{self.width}x{self.height}-d{self.density:g}-s{self.seed}"

    @classmethod
    def parse(cls, text: str) -> "MapSpec":
        """Parse ``style:WxH:density:seed[:cell_size]``, e.g. ``cluttered-scatter:128x128:0.3:7``."""
        parts = text.strip().split(":")
        if len(parts) not in (4, 5):
            raise ValueError(f"map spec {text!r}: expected style:WxH:density:seed[:cell_size]")
        style, dims, density, seed = parts[:4]
        try:
            w, h = (int(v) for v in dims.lower().split("x"))
            spec = cls(
                width=w,
                height=h,
                density=float(density),
                style=style,
                seed=int(seed),
                cell_size=float(parts[4]) if len(parts) == 5 else 0.05,
            )
        except ValueError as exc:
            raise ValueError(f"map spec {text!r}: {exc}") from None
        return spec


@dataclass(frozen=True)
class Scenario:
    map_id: str
    s: GridIndex
    t: GridIndex
    seed: int
    index: int = 0

    @property
    def scenario_id(self) -> str:
        return f"{self.map_id}#{self.index}"


@dataclass
class BenchRow:
    scenario_id: str
    planner: str
    outcome: str
    time_ms: float = math.nan
    length_m: float = math.nan
    clearance_cm: float = math.nan
    turn_deg: float = math.nan
    O: float = math.nan
    C: float = math.nan
    osi: float = math.nan
    expanded: int = 0
    path: Optional[Tuple[GridIndex, ...]] = None
    extra: Dict[str, object] = field(default_factory=dict)


@dataclass
class BenchReport:
    rows: List[BenchRow] = field(default_factory=list)
    columns: Tuple[str, ...] = CSV_COLUMNS

    def planners(self) -> List[str]:
        seen: List[str] = []
        for row in self.rows:
            if row.planner not in seen:
                seen.append(row.planner)
        return seen

    def rows_for(self, planner: str, **extra) -> List[BenchRow]:
        return [
            r for r in self.rows if r.planner == planner and all(r.extra.get(k) == v for k, v in extra.items())
        ]

    def aggregates(self) -> Dict[str, Dict[str, object]]:
        return {name: aggregate(self.rows_for(name)) for name in self.planners()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            values = {**asdict_row(row), **row.extra}
            writer.writerow(_fmt(values[c]) for c in self.columns)
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "columns": list(self.columns),
            "rows": [{**asdict_row(r), **r.extra, "expanded": r.expanded} for r in self.rows],
            "aggregates": self.aggregates(),
            "note": TIMING_NOTE,
        }

    def write(self, out_dir: str | Path, stem: str = "report") -> Dict[str, Path]:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            paths = {
                "csv": out / f"{stem}.csv",
                "json": out / f"{stem}.json",
                "paths": out / f"{stem}_paths.jsonl",
            }
            paths["csv"].write_text(self.to_csv(), encoding="utf-8")
            paths["json"].write_text(json.dumps(_jsonable(self.to_json()), indent=2, sort_keys=True), encoding="utf-8")
            with paths["paths"].open("w", encoding="utf-8") as fh:
                for r in self.rows:
                    if r.path is not None:
                        record = {"scenario_id": r.scenario_id, "planner": r.planner, **r.extra}
                        record["path"] = [list(n) for n in r.path]
                        fh.write(json.dumps(record, sort_keys=True) + "\n")
        except OSError as exc:
            raise OSError(f"writing report to {out}: {exc}") from exc
        return paths


def asdict_row(row: BenchRow) -> Dict[str, object]:
    return {
        "scenario_id": row.scenario_id,
        "planner": row.planner,
        "outcome": row.outcome,
        "time_ms": row.time_ms,
        "length_m": row.length_m,
        "clearance_cm": row.clearance_cm,
        "turn_deg": row.turn_deg,
        "O": row.O,
        "C": row.C,
        "osi": row.osi,
        "expanded": row.expanded,
    }


def _fmt(value) -> str:
    if isinstance(value, float):
        return "" if math.isnan(value) else f"{value:.6f}"
    return str(value)


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _summary(values: Sequence[float]) -> Dict[str, float]:
    if not values:
        return {"mean": math.nan, "median": math.nan, "min": math.nan}
    return {"mean": statistics.fmean(values), "median": statistics.median(values), "min": min(values)}


def aggregate(rows: Sequence[BenchRow]) -> Dict[str, object]:
    ok = [r for r in rows if r.outcome == "success"]
    out: Dict[str, object] = {
        "rows": len(rows),
        "successes": len(ok),
        "success_rate": 100.0 * len(ok) / len(rows) if rows else math.nan,
    }
    for name in ("time_ms", "length_m", "clearance_cm", "turn_deg", "osi"):
        vals = [getattr(r, name) for r in ok if not math.isnan(getattr(r, name))]
        out[name] = _summary(vals)
    out["expanded"] = _summary([float(r.expanded) for r in ok])
    return out


# -- map generation ---------------------------------------------------------


def generate_map(spec: MapSpec) -> OccupancyGrid:
    """Deterministic random map; obstacles stay out of a 2-cell border.

    The obstacle count targets ``density`` of the whole grid.
    ``sparse-blocks`` drops a few large rectangles, ``cluttered-scatter``
    many rectangles with 1-3 cell sides.
    """
    if not 0 <= spec.density < MAX_DENSITY:
        raise ValueError(f"density must lie in [0, {MAX_DENSITY}), got {spec.density}")
    if spec.style not in STYLES:
        raise ValueError(f"unknown map style {spec.style!r}; choose from {STYLES}")
    if spec.width < 1 or spec.height < 1:
        raise ValueError("map dimensions must be positive")

    h, w = spec.height, spec.width
    cells = np.zeros((h, w), dtype=bool)
    target = int(round(spec.density * w * h))
    if target == 0:
        return OccupancyGrid(cells, spec.cell_size)

    inner_h, inner_w = h - 2 * BORDER, w - 2 * BORDER
    if target > max(inner_h, 0) * max(inner_w, 0):
        raise ValueError(f"density {spec.density} does not fit inside the {BORDER}-cell border of a {w}x{h} map")

    rng = np.random.default_rng(spec.seed)
    if spec.style == CLUTTERED:
        side_lo, side_hi = 1, 3
    else:
        side_lo = max(2, min(inner_h, inner_w) // 16)
        side_hi = max(side_lo, min(inner_h, inner_w) // 5)
    slack = max(1, int(0.005 * w * h))

    count = 0
    for _ in range(200 * target + 1000):
        if count >= target:
            break
        bh = int(rng.integers(side_lo, side_hi + 1))
        bw = int(rng.integers(side_lo, side_hi + 1))
        bh, bw = min(bh, inner_h), min(bw, inner_w)
        r0 = BORDER + int(rng.integers(0, inner_h - bh + 1))
        c0 = BORDER + int(rng.integers(0, inner_w - bw + 1))
        while True:
            added = int(np.count_nonzero(~cells[r0 : r0 + bh, c0 : c0 + bw]))
            if count + added <= target + slack or bh == 1:
                break
            bh -= 1
        if count + added > target + slack:
            continue
        cells[r0 : r0 + bh, c0 : c0 + bw] = True
        count += added
    if count < target:
        raise GenerationError(f"could not reach density {spec.density} for {spec.map_id}")
    return OccupancyGrid(cells, spec.cell_size)


def sample_scenarios(
    grid: OccupancyGrid, count: int, seed: int, map_id: Optional[str] = None, max_tries: int = 200
) -> List[Scenario]:
    """Random reachable start/goal pairs at least max(width, height)/4 apart (Chebyshev)."""
    map_id = map_id or grid.fingerprint
    if count <= 0:
        return []
    free = np.argwhere(~grid.cells)
    if len(free) < 2:
        raise GenerationError(f"{map_id}: need at least two free cells")

    min_sep = max(grid.width, grid.height) / 4.0
    rng = np.random.default_rng(seed)
    components: Dict[GridIndex, frozenset] = {}
    out: List[Scenario] = []
    for index in range(count):
        for _ in range(max_tries):
            s = tuple(int(v) for v in free[rng.integers(len(free))])
            comp = components.get(s)
            if comp is None:
                comp = frozenset(reachable_set(grid, s))
                for n in comp:
                    components[n] = comp
            far = [n for n in comp if max(abs(n[0] - s[0]), abs(n[1] - s[1])) >= min_sep]
            if not far:
                continue
            far.sort()
            t = far[int(rng.integers(len(far)))]
            out.append(Scenario(map_id=map_id, s=s, t=t, seed=seed, index=index))
            break
        else:
            raise GenerationError(f"{map_id}: no valid start/goal pair after {max_tries} tries")
    return out


# -- planners ---------------------------------------------------------------

PlannerFn = Callable[[OccupancyGrid, GridIndex, GridIndex], PlanResult]


class _MapContext:
    """Everything precomputed once per map, shared by all its scenarios."""

    def __init__(self, grid: OccupancyGrid, config: UppConfig):
        self.grid = grid
        self.dfield = distance_transform(grid)
        self.upp = UnifiedPathPlanner(config)
        self.upp.prepare(grid)

    def planner(self, name: str) -> PlannerFn:
        if name == "upp":
            return lambda g, s, t: self.upp.plan(g, s, t)
        if name == "astar":
            return astar_shortest
        if name == "maximin":
            return lambda g, s, t: maximin_clearance_path(g, self.dfield, s, t)
        raise ValueError(f"unknown planner {name!r}; choose from {PLANNERS}")


PLANNERS = ("upp", "astar", "maximin")


def _run_cell(ctx: _MapContext, scenario: Scenario, name: str, cache: ReferenceCache, **extra) -> BenchRow:
    row = BenchRow(scenario_id=scenario.scenario_id, planner=name, outcome=FAILURE, extra=dict(extra))
    try:
        fn = ctx.planner(name)
        t0 = time.perf_counter()
        result = fn(ctx.grid, scenario.s, scenario.t)
        row.time_ms = (time.perf_counter() - t0) * 1000.0
        row.expanded = result.expanded
        row.outcome = result.outcome
        if result.success:
            metrics, osi = evaluate_planner(ctx.grid, ctx.dfield, result, plan_time=row.time_ms, cache=cache)
            row.path = result.path
            row.length_m = metrics.length
            row.clearance_cm = metrics.min_clearance * 100.0
            row.turn_deg = metrics.turn_total
            row.O, row.C, row.osi = osi.O, osi.C, osi.osi
    except Exception:  # a crash fails this row only
        log.exception("planner %s crashed on %s", name, scenario.scenario_id)
        row.outcome = "error"
    return row


def _scenario_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


def run_benchmark(
    maps: Iterable[MapSpec],
    planners: Sequence[str] = ("upp", "astar"),
    trials: int = 10,
    seed: int = 0,
    config: Optional[UppConfig] = None,
    out_dir: Optional[str | Path] = None,
) -> BenchReport:
    if not planners:
        raise ValueError("select at least one planner")
    for name in planners:
        if name not in PLANNERS:
            raise ValueError(f"unknown planner {name!r}; choose from {PLANNERS}")
    config = config or UppConfig()
    report = BenchReport()
    cache = ReferenceCache()
    for i, spec in enumerate(maps):
        if trials <= 0:
            break
        grid = generate_map(spec)
        scenarios = sample_scenarios(grid, trials, _scenario_seed(seed, i), map_id=spec.map_id)
        ctx = _MapContext(grid, config)
        for sc in scenarios:
            for name in planners:
                report.rows.append(_run_cell(ctx, sc, name, cache))
    if out_dir is not None:
        report.write(out_dir)
    return report


def ablation_config(base: UppConfig, mode: str, alpha0: float, beta0: float) -> UppConfig:
    try:
        adapt_alpha, adapt_beta = ABLATION_MODES[mode]
    except KeyError:
        raise ValueError(f"unknown ablation mode {mode!r}; choose from {tuple(ABLATION_MODES)}") from None
    return replace(base, alpha_base=alpha0, beta_base=beta0, adapt_alpha=adapt_alpha, adapt_beta=adapt_beta)


def run_ablation(
    spec: MapSpec,
    modes: Sequence[str] = tuple(ABLATION_MODES),
    inits: Optional[Sequence[Tuple[float, float]]] = None,
    trials: int = 10,
    seed: int = 0,
    config: Optional[UppConfig] = None,
    out_dir: Optional[str | Path] = None,
) -> BenchReport:
    """Run UPP on one map with adaptation branches switched on/off and varied initial weights.

    Rows carry ``mode``, ``alpha0`` and ``beta0`` so they can be grouped with
    :meth:`BenchReport.rows_for`.
    """
    base = config or UppConfig()
    inits = list(inits) if inits else [(base.alpha_base, base.beta_base)]
    grid = generate_map(spec)
    scenarios = sample_scenarios(grid, trials, _scenario_seed(seed, 0), map_id=spec.map_id)
    report = BenchReport(columns=ABLATION_COLUMNS)
    cache = ReferenceCache()
    for mode in modes:
        for alpha0, beta0 in inits:
            ctx = _MapContext(grid, ablation_config(base, mode, alpha0, beta0))
            for sc in scenarios:
                report.rows.append(_run_cell(ctx, sc, "upp", cache, mode=mode, alpha0=alpha0, beta0=beta0))
    if out_dir is not None:
        report.write(out_dir, stem="ablation")
    return report
