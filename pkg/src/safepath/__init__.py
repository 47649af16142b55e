"""Safety-aware grid path planning: the Unified Path Planner, reference
planners, path metrics with the OptiSafe index, and a benchmark harness."""

__version__ = "0.1.0"

from .baselines import astar_shortest, bfs_reachable, dijkstra_costs, maximin_clearance_path
from .gridmap import (
    FreeSpaceStats,
    MapFormatError,
    OccupancyGrid,
    distance_transform,
    free_space_stats,
    load_map,
    neighbors,
    parse_map,
    serialize_map,
)
from .metrics import OptiSafeResult, PathMetrics, evaluate_planner, optisafe
from .safety import SafetyField, SafetyKernel, build_kernel, compute_safety_field, safety_upper_bound
from .upp import PlanResult, UnifiedPathPlanner, UppConfig, UppParams, plan
