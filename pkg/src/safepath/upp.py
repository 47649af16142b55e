"""Unified Path Planner.

Best-first grid search whose heuristic mixes Manhattan and Chebyshev
distance-to-go with a weighted obstacle-proximity penalty::

    h(n) = alpha * l1(n, t) + (1 - alpha) * linf(n, t) + beta * S(n)

``beta`` and the safety radius are seeded from distance-transform
statistics of the map, then ``alpha`` and ``beta`` are adapted once per
expansion from progress toward the goal and accumulated turning.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from .gridmap import (
    FreeSpaceStats,
    GridIndex,
    OccupancyGrid,
    distance_transform,
    free_space_stats,
    neighbors,
)
from .safety import SafetyField, build_kernel, compute_safety_field

SUCCESS = "success"
FAILURE = "failure"

# failure reason codes
INVALID_START = "invalid_start"
INVALID_GOAL = "invalid_goal"
NO_PATH = "no_path"


@dataclass(frozen=True)
class UppConfig:
    alpha_base: float = 0.5
    beta_base: float = 10.0
    r_base: float = 1.0
    epsilon: float = 0.01
    alpha_min: float = 0.1
    alpha_max: float = 0.9
    # a floor of 1 keeps the proximity penalty comparable to one step of
    # distance; near 0 it decays away on the first few hundred expansions
    beta_min: float = 1.0
    beta_max: float = 50.0
    r_min: int = 1
    r_max: int = 10
    gamma_rec: float = 1.05
    gamma_dec: float = 0.90
    K_beta: int = 10
    tau_goal: float = 0.05
    eta_rec: float = 1.05
    eta_dec: float = 0.95
    K_alpha: int = 8
    tau_ang: float = 0.5
    theta_tar: float = math.pi / 8
    # ablation switches for the two branches of the online update
    adapt_alpha: bool = True
    adapt_beta: bool = True

    def __post_init__(self) -> None:
        problems = []
        if not 0 < self.alpha_base < 1:
            problems.append("alpha_base must lie in (0, 1)")
        if not 0 < self.alpha_min <= self.alpha_max < 1:
            problems.append("need 0 < alpha_min <= alpha_max < 1")
        if not 0 < self.beta_min <= self.beta_max:
            problems.append("need 0 < beta_min <= beta_max")
        if not self.beta_base > 0:
            problems.append("beta_base must be positive")
        if not self.r_base > 0:
            problems.append("r_base must be positive")
        if not 1 <= self.r_min <= self.r_max:
            problems.append("need 1 <= r_min <= r_max")
        if not self.epsilon > 0:
            problems.append("epsilon must be positive")
        if not self.gamma_rec > 1 or not 0 < self.gamma_dec < 1:
            problems.append("need gamma_rec > 1 and 0 < gamma_dec < 1")
        if not self.eta_rec > 1 or not 0 < self.eta_dec < 1:
            problems.append("need eta_rec > 1 and 0 < eta_dec < 1")
        if self.K_beta < 1 or self.K_alpha < 1:
            problems.append("K_beta and K_alpha must be positive")
        if not self.tau_goal > 0 or not self.tau_ang > 0:
            problems.append("tau_goal and tau_ang must be positive")
        if not 0 <= self.theta_tar <= math.pi:
            problems.append("theta_tar must lie in [0, pi]")
        if problems:
            raise ValueError("invalid UppConfig: " + "; ".join(problems))

    @classmethod
    def from_mapping(cls, values: Dict[str, object], base: Optional["UppConfig"] = None) -> "UppConfig":
        """Build a config from string or typed values, overriding ``base``."""
        base = base or cls()
        types = {f.name: f.type for f in fields(cls)}
        updates = {}
        for key, raw in values.items():
            if key not in types:
                raise ValueError(f"unknown UppConfig field {key!r}")
            kind = types[key]
            if kind == "bool":
                if isinstance(raw, str):
                    lowered = raw.strip().lower()
                    if lowered not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
                    updates[key] = lowered in ("true", "1", "yes", "on")
                else:
                    updates[key] = bool(raw)
            elif kind == "int":
                updates[key] = int(raw)
            else:
                updates[key] = float(raw)
        return replace(base, **updates)


@dataclass(frozen=True)
class UppParams:
    alpha: float
    beta: float
    r: int


@dataclass(frozen=True)
class AdaptiveState:
    prev_dist: float
    stalled: int = 0
    turn_sum: float = 0.0
    turn_iter: int = 0


class TraceEntry(NamedTuple):
    expansion: int
    row: int
    col: int
    alpha: float
    beta: float


@dataclass(frozen=True)
class PlanResult:
    outcome: str
    path: Optional[Tuple[GridIndex, ...]] = None
    expanded: int = 0
    g_cost: float = 0.0
    reason: Optional[str] = None
    param_trace: Optional[Tuple[TraceEntry, ...]] = None

    @property
    def success(self) -> bool:
        return self.outcome == SUCCESS


def failure(reason: str, expanded: int = 0, trace=None) -> PlanResult:
    return PlanResult(outcome=FAILURE, expanded=expanded, reason=reason, param_trace=trace)


def _clip(x, lo, hi):
    return min(max(x, lo), hi)


def init_params(
    grid: OccupancyGrid, stats: FreeSpaceStats, config: UppConfig
) -> Tuple[UppParams, SafetyField]:
    """Scale beta and the safety radius from map statistics and build the field."""
    eps = config.epsilon
    beta = _clip(config.beta_base * stats.rho * stats.sigma / (stats.mu + eps), config.beta_min, config.beta_max)
    # round-half-to-even, as Python's round
    r = int(_clip(round(config.r_base * (stats.mu + stats.sigma)), config.r_min, config.r_max))
    alpha = _clip(config.alpha_base, config.alpha_min, config.alpha_max)
    field_ = compute_safety_field(grid, build_kernel(r, eps))
    return UppParams(alpha=alpha, beta=beta, r=r), field_


def heuristic(n: GridIndex, t: GridIndex, params: UppParams, S: SafetyField) -> float:
    dr = abs(n[0] - t[0])
    dc = abs(n[1] - t[1])
    return params.alpha * (dr + dc) + (1.0 - params.alpha) * max(dr, dc) + params.beta * float(S.values[n])


def wrap_angle(x: float) -> float:
    """Map an angle to [-pi, pi) as ((x + pi) mod 2pi) - pi."""
    return (x + math.pi) % (2.0 * math.pi) - math.pi


def _heading(drow: float, dcol: float) -> float:
    return math.atan2(drow, dcol)


def turn_deviation(n: GridIndex, t: GridIndex, parent: Optional[GridIndex]) -> float:
    """|wrapped angle| between the incoming move direction and the direction to the goal."""
    if parent is None:
        return 0.0
    move = _heading(n[0] - parent[0], n[1] - parent[1])
    goal = _heading(t[0] - n[0], t[1] - n[1])
    return abs(wrap_angle(goal - move))


def update_params(
    n: GridIndex,
    t: GridIndex,
    parent_of_n: Optional[GridIndex],
    params: UppParams,
    state: AdaptiveState,
    config: UppConfig,
) -> Tuple[UppParams, AdaptiveState]:
    """One step of the online controller, applied after popping ``n``."""
    alpha, beta = params.alpha, params.beta
    stalled, turn_sum, turn_iter = state.stalled, state.turn_sum, state.turn_iter

    cur_dist = math.hypot(n[0] - t[0], n[1] - t[1])
    if config.adapt_beta:
        delta = cur_dist - state.prev_dist
        if delta < -config.tau_goal:
            stalled = 0
            beta = min(beta * config.gamma_rec, config.beta_max)
        elif delta > config.tau_goal:
            stalled = 0
            beta = max(beta * config.gamma_dec, config.beta_min)
        else:
            stalled += 1
            if stalled >= config.K_beta:
                beta = max(beta * config.gamma_dec, config.beta_min)
                stalled = 0

    if config.adapt_alpha:
        turn_sum += turn_deviation(n, t, parent_of_n) - config.theta_tar
        turn_iter += 1
        if turn_iter >= config.K_alpha:
            if turn_sum > config.tau_ang:
                alpha = min(alpha * config.eta_rec, config.alpha_max)
            elif turn_sum < -config.tau_ang:
                alpha = max(alpha * config.eta_dec, config.alpha_min)
            turn_sum = 0.0
            turn_iter = 0

    return (
        UppParams(alpha=alpha, beta=beta, r=params.r),
        AdaptiveState(prev_dist=cur_dist, stalled=stalled, turn_sum=turn_sum, turn_iter=turn_iter),
    )


@dataclass(frozen=True, eq=False)
class PreparedMap:
    """Per-map precomputation shared by every plan on the same grid."""

    grid: OccupancyGrid
    stats: FreeSpaceStats
    params: UppParams
    safety: SafetyField
    dfield: np.ndarray = field(repr=False)


def prepare_map(grid: OccupancyGrid, config: UppConfig) -> PreparedMap:
    dfield = distance_transform(grid)
    stats = free_space_stats(grid, dfield)
    params, safety = init_params(grid, stats, config)
    return PreparedMap(grid=grid, stats=stats, params=params, safety=safety, dfield=dfield)


def reconstruct_path(parent: Dict[GridIndex, GridIndex], t: GridIndex) -> Tuple[GridIndex, ...]:
    path = [t]
    while path[-1] in parent:
        path.append(parent[path[-1]])
    path.reverse()
    return tuple(path)


class UnifiedPathPlanner:
    """Planner bound to one config; caches map preparation between calls.

    Search state lives inside :meth:`plan`, so one instance can serve
    successive plans; the preparation cache is not guarded for concurrent
    writers.
    """

    def __init__(self, config: Optional[UppConfig] = None):
        self.config = config or UppConfig()
        self._prepared: Dict[OccupancyGrid, PreparedMap] = {}

    def prepare(self, grid: OccupancyGrid) -> PreparedMap:
        prep = self._prepared.get(grid)
        if prep is None:
            prep = prepare_map(grid, self.config)
            self._prepared[grid] = prep
        return prep

    def plan(self, grid: OccupancyGrid, s: GridIndex, t: GridIndex, trace: bool = False) -> PlanResult:
        s = (int(s[0]), int(s[1]))
        t = (int(t[0]), int(t[1]))
        if not grid.is_free(s):
            return failure(INVALID_START)
        if not grid.is_free(t):
            return failure(INVALID_GOAL)
        if s == t:
            return PlanResult(outcome=SUCCESS, path=(s,), g_cost=0.0, param_trace=() if trace else None)

        config = self.config
        prep = self.prepare(grid)
        params = prep.params
        safety = prep.safety
        state = AdaptiveState(prev_dist=math.hypot(s[0] - t[0], s[1] - t[1]))
        records: Optional[List[TraceEntry]] = [] if trace else None

        g: Dict[GridIndex, float] = {s: 0.0}
        parent: Dict[GridIndex, GridIndex] = {}
        closed = set()
        tie = itertools.count()
        h_s = heuristic(s, t, params, safety)
        # (f, h, insertion order, node): ties on f go to smaller h, then FIFO
        open_heap = [(h_s, h_s, next(tie), s)]
        expanded = 0

        while open_heap:
            _, _, _, n = heapq.heappop(open_heap)
            if n in closed:
                continue
            closed.add(n)
            if n == t:
                return PlanResult(
                    outcome=SUCCESS,
                    path=reconstruct_path(parent, t),
                    expanded=expanded,
                    g_cost=g[t],
                    param_trace=tuple(records) if trace else None,
                )

            params, state = update_params(n, t, parent.get(n), params, state, config)
            if records is not None:
                records.append(TraceEntry(expanded, n[0], n[1], params.alpha, params.beta))
            expanded += 1

            g_n = g[n]
            for m, cost in neighbors(grid, n):
                if m in closed:
                    continue
                g_new = g_n + cost
                if g_new < g.get(m, math.inf):
                    g[m] = g_new
                    parent[m] = n
                    h_m = heuristic(m, t, params, safety)
                    heapq.heappush(open_heap, (g_new + h_m, h_m, next(tie), m))

        return failure(NO_PATH, expanded, tuple(records) if trace else None)


def plan(
    grid: OccupancyGrid,
    s: GridIndex,
    t: GridIndex,
    config: Optional[UppConfig] = None,
    trace: bool = False,
) -> PlanResult:
    """Plan once with a fresh planner. Prefer :class:`UnifiedPathPlanner` for repeated queries."""
    return UnifiedPathPlanner(config).plan(grid, s, t, trace=trace)
