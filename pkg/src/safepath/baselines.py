"""Reference planners: exact shortest paths, maximum-clearance paths and
reachability, all on the same 8-connected graph as the planner."""

from __future__ import annotations

import heapq
import itertools
import math
from collections import deque
from typing import Dict, Optional, Set

import numpy as np

from .gridmap import SQRT2, GridIndex, OccupancyGrid, neighbors
from .upp import (
    INVALID_GOAL,
    INVALID_START,
    NO_PATH,
    SUCCESS,
    PlanResult,
    failure,
    reconstruct_path,
)

UNREACHABLE = math.inf


def _masked_neighbors(grid: OccupancyGrid, n: GridIndex, allowed: Optional[np.ndarray]):
    """Grid neighbors restricted to ``allowed`` cells.

    Corner cutting is still judged against the real obstacles, so the
    restriction only removes cells and never removes a diagonal move that
    the full graph would allow between two allowed cells.
    """
    out = neighbors(grid, n)
    if allowed is None:
        return out
    return [(m, c) for m, c in out if allowed[m]]


def reachable_set(grid: OccupancyGrid, s: GridIndex, allowed: Optional[np.ndarray] = None) -> Set[GridIndex]:
    if not grid.is_free(s) or (allowed is not None and not allowed[s]):
        return set()
    seen = {s}
    queue = deque([s])
    while queue:
        n = queue.popleft()
        for m, _ in _masked_neighbors(grid, n, allowed):
            if m not in seen:
                seen.add(m)
                queue.append(m)
    return seen


def bfs_reachable(grid: OccupancyGrid, s: GridIndex, t: GridIndex, allowed: Optional[np.ndarray] = None) -> bool:
    s, t = tuple(s), tuple(t)
    if not grid.is_free(s) or not grid.is_free(t):
        return False
    if allowed is not None and not (allowed[s] and allowed[t]):
        return False
    if s == t:
        return True
    seen = {s}
    queue = deque([s])
    while queue:
        n = queue.popleft()
        for m, _ in _masked_neighbors(grid, n, allowed):
            if m == t:
                return True
            if m not in seen:
                seen.add(m)
                queue.append(m)
    return False


def dijkstra_costs(grid: OccupancyGrid, s: GridIndex) -> np.ndarray:
    """Single-source shortest-path costs (cell units); ``inf`` marks unreachable cells."""
    s = (int(s[0]), int(s[1]))
    if not grid.is_free(s):
        raise ValueError(f"dijkstra source {s} is out of bounds or occupied")
    dist = np.full(grid.shape, UNREACHABLE)
    dist[s] = 0.0
    heap = [(0.0, s)]
    while heap:
        d, n = heapq.heappop(heap)
        if d > dist[n]:
            continue
        for m, cost in neighbors(grid, n):
            nd = d + cost
            if nd < dist[m]:
                dist[m] = nd
                heapq.heappush(heap, (nd, m))
    return dist


def octile(a: GridIndex, b: GridIndex) -> float:
    dr = abs(a[0] - b[0])
    dc = abs(a[1] - b[1])
    return max(dr, dc) + (SQRT2 - 1.0) * min(dr, dc)


def _astar(grid: OccupancyGrid, s: GridIndex, t: GridIndex, allowed: Optional[np.ndarray] = None) -> PlanResult:
    g: Dict[GridIndex, float] = {s: 0.0}
    parent: Dict[GridIndex, GridIndex] = {}
    closed = set()
    tie = itertools.count()
    h_s = octile(s, t)
    heap = [(h_s, h_s, next(tie), s)]
    expanded = 0
    while heap:
        _, _, _, n = heapq.heappop(heap)
        if n in closed:
            continue
        closed.add(n)
        if n == t:
            return PlanResult(outcome=SUCCESS, path=reconstruct_path(parent, t), expanded=expanded, g_cost=g[t])
        expanded += 1
        g_n = g[n]
        for m, cost in _masked_neighbors(grid, n, allowed):
            if m in closed:
                continue
            g_new = g_n + cost
            if g_new < g.get(m, math.inf):
                g[m] = g_new
                parent[m] = n
                h_m = octile(m, t)
                heapq.heappush(heap, (g_new + h_m, h_m, next(tie), m))
    return failure(NO_PATH, expanded)


def _check_endpoints(grid: OccupancyGrid, s: GridIndex, t: GridIndex) -> Optional[PlanResult]:
    if not grid.is_free(s):
        return failure(INVALID_START)
    if not grid.is_free(t):
        return failure(INVALID_GOAL)
    if s == t:
        return PlanResult(outcome=SUCCESS, path=(s,), g_cost=0.0)
    return None


def astar_shortest(grid: OccupancyGrid, s: GridIndex, t: GridIndex) -> PlanResult:
    """Length-optimal path using the octile heuristic (consistent on this grid)."""
    s = (int(s[0]), int(s[1]))
    t = (int(t[0]), int(t[1]))
    early = _check_endpoints(grid, s, t)
    if early is not None:
        return early
    return _astar(grid, s, t)


def path_bottleneck(path, dfield: np.ndarray) -> float:
    return float(min(dfield[n] for n in path))


def maximin_clearance_path(grid: OccupancyGrid, dfield: np.ndarray, s: GridIndex, t: GridIndex) -> PlanResult:
    """Path maximising the smallest clearance over its cells, shortest among those.

    Binary search over the distinct clearance values for the largest
    threshold that still connects ``s`` and ``t`` through cells at or above
    it, then A* inside that cell set.
    """
    s = (int(s[0]), int(s[1]))
    t = (int(t[0]), int(t[1]))
    early = _check_endpoints(grid, s, t)
    if early is not None:
        return early
    if not bfs_reachable(grid, s, t):
        return failure(NO_PATH)

    cap = min(dfield[s], dfield[t])
    values = np.unique(dfield[~grid.cells])
    values = values[values <= cap]
    # values[0] is always feasible: it is the smallest free clearance
    lo, hi = 0, len(values) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if bfs_reachable(grid, s, t, allowed=dfield >= values[mid]):
            lo = mid
        else:
            hi = mid - 1
    allowed = dfield >= values[lo]
    result = _astar(grid, s, t, allowed)
    if not result.success:
        raise RuntimeError("maximin threshold search lost connectivity")
    return result

