"""Path quality metrics and the OptiSafe index.

OptiSafe scores a path against two references on the same start/goal: the
shortest path (optimality index ``O``) and the maximum-clearance path
(safety index ``C``). The combined score is ``(1 - |O - C|) * sqrt(O^2 + C^2) / sqrt(2)``,
which rewards paths that are good on both axes at once.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .baselines import astar_shortest, maximin_clearance_path
from .gridmap import GridIndex, OccupancyGrid
from .upp import PlanResult, wrap_angle


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class PathMetrics:
    length: float  # meters
    min_clearance: float  # meters
    turn_total: float  # degrees
    plan_time: float = 0.0  # milliseconds


@dataclass(frozen=True)
class OptiSafeResult:
    O: float
    C: float
    B: float
    R: float
    osi: float


def path_length(path: Sequence[GridIndex], cell_size: float) -> float:
    if len(path) == 0:
        raise MetricError("path_length of an empty path")
    total = 0.0
    for a, b in zip(path, path[1:]):
        total += math.hypot(b[0] - a[0], b[1] - a[1])
    return total * cell_size


def min_clearance(path: Sequence[GridIndex], dfield: np.ndarray, cell_size: float) -> float:
    """Smallest obstacle distance over the path's cells, in meters."""
    if len(path) == 0:
        raise MetricError("min_clearance of an empty path")
    lowest = math.inf
    for n in path:
        d = float(dfield[n])
        if d <= 0.0:
            raise MetricError(f"path cell {tuple(n)} lies on an obstacle")
        lowest = min(lowest, d)
    return lowest * cell_size


def turning_angle(path: Sequence[GridIndex]) -> float:
    """Total absolute heading change over interior vertices, in degrees."""
    total = 0.0
    for a, b, c in zip(path, path[1:], path[2:]):
        heading_in = math.atan2(b[0] - a[0], b[1] - a[1])
        heading_out = math.atan2(c[0] - b[0], c[1] - b[1])
        total += abs(wrap_angle(heading_out - heading_in))
    return math.degrees(total)


def optisafe_from_indices(O: float, C: float) -> OptiSafeResult:
    B = 1.0 - abs(O - C)
    R = min(1.0, math.hypot(O, C) / math.sqrt(2.0))
    # keep the boundary cases exact when rounding alone would reach them
    if B == 1.0 and O != C:
        B = math.nextafter(1.0, 0.0)
    if R == 1.0 and not (O == 1.0 and C == 1.0):
        R = math.nextafter(1.0, 0.0)
    if R == 0.0 and (O != 0.0 or C != 0.0):
        R = math.ulp(0.0)
    return OptiSafeResult(O=O, C=C, B=B, R=R, osi=B * R)


def optisafe(L_P: float, L_opt: float, D_P: float, D_safe: float) -> OptiSafeResult:
    if D_safe > 0:
        c_dev = 0.0 if D_P >= D_safe else (D_safe - D_P) / D_safe
    else:
        c_dev = 1.0
    if L_opt > 0:
        o_dev = min(1.0, max((L_P - L_opt) / L_opt, 0.0))
    else:
        o_dev = 1.0
    return optisafe_from_indices(1.0 - o_dev, 1.0 - c_dev)


@dataclass(frozen=True)
class References:
    shortest: PlanResult
    safest: PlanResult
    L_opt: float  # meters
    D_safe: float  # meters


class ReferenceCache:
    """Shortest and maximum-clearance reference paths keyed by (grid, s, t).

    Lookups are lock-free; insertion is serialized.
    """

    def __init__(self) -> None:
        self._store: Dict[Tuple[OccupancyGrid, GridIndex, GridIndex], References] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._store)

    def get(self, grid: OccupancyGrid, dfield: np.ndarray, s: GridIndex, t: GridIndex) -> References:
        key = (grid, tuple(s), tuple(t))
        refs = self._store.get(key)
        if refs is not None:
            return refs
        shortest = astar_shortest(grid, s, t)
        safest = maximin_clearance_path(grid, dfield, s, t)
        if not (shortest.success and safest.success):
            raise RuntimeError(f"reference planners found no path between {s} and {t}")
        refs = References(
            shortest=shortest,
            safest=safest,
            L_opt=path_length(shortest.path, grid.cell_size),
            D_safe=min_clearance(safest.path, dfield, grid.cell_size),
        )
        with self._lock:
            return self._store.setdefault(key, refs)


_default_cache = ReferenceCache()


def evaluate_planner(
    grid: OccupancyGrid,
    dfield: np.ndarray,
    result: PlanResult,
    cell_size: Optional[float] = None,
    plan_time: float = 0.0,
    cache: Optional[ReferenceCache] = None,
) -> Tuple[PathMetrics, OptiSafeResult]:
    """Metrics and OptiSafe for a successful plan, against cached reference paths."""
    if not result.success or not result.path:
        raise MetricError("cannot evaluate a failed plan")
    cell_size = grid.cell_size if cell_size is None else cell_size
    cache = _default_cache if cache is None else cache
    path = result.path
    refs = cache.get(grid, dfield, path[0], path[-1])
    if cell_size != grid.cell_size:
        L_opt = path_length(refs.shortest.path, cell_size)
        D_safe = min_clearance(refs.safest.path, dfield, cell_size)
    else:
        L_opt, D_safe = refs.L_opt, refs.D_safe

    metrics = PathMetrics(
        length=path_length(path, cell_size),
        min_clearance=min_clearance(path, dfield, cell_size),
        turn_total=turning_angle(path),
        plan_time=plan_time,
    )
    return metrics, optisafe(metrics.length, L_opt, metrics.min_clearance, D_safe)
