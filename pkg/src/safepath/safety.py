"""Inverse-distance obstacle proximity field.

Each free cell accumulates ``1 / (chebyshev_distance + eps)`` for every
obstacle within Chebyshev radius ``r``. Higher values mean closer to more
obstacles; the planner uses the field as a penalty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gridmap import OccupancyGrid

DEFAULT_EPSILON = 0.01


@dataclass(frozen=True, eq=False)
class SafetyKernel:
    radius: int
    epsilon: float
    weights: np.ndarray  # (2r+1, 2r+1), weights[r, r] is the center

    def weight(self, drow: int, dcol: int) -> float:
        return float(self.weights[drow + self.radius, dcol + self.radius])


@dataclass(frozen=True, eq=False)
class SafetyField:
    values: np.ndarray
    radius: int
    epsilon: float

    def __getitem__(self, n) -> float:
        return self.values[n]

    @property
    def upper_bound(self) -> float:
        return safety_upper_bound(2, self.radius, self.epsilon)


def build_kernel(r: int, epsilon: float = DEFAULT_EPSILON) -> SafetyKernel:
    if int(r) != r or r < 1:
        raise ValueError(f"kernel radius must be a positive integer, got {r!r}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    r = int(r)
    offsets = np.arange(-r, r + 1)
    cheb = np.maximum(np.abs(offsets)[:, None], np.abs(offsets)[None, :])
    weights = 1.0 / (cheb + epsilon)
    # the cell itself is never counted
    weights[r, r] = 0.0
    weights.setflags(write=False)
    return SafetyKernel(radius=r, epsilon=float(epsilon), weights=weights)


def compute_safety_field(grid: OccupancyGrid, kernel: SafetyKernel) -> SafetyField:
    """Convolve the obstacle indicator with ``kernel``; outside the map counts as free.

    Offsets are accumulated in row-major kernel order, so every cell sees
    the same floating-point summation order as a plain double loop over the
    kernel window.
    """
    occ = grid.cells.astype(np.float64)
    h, w = occ.shape
    r = kernel.radius
    acc = np.zeros((h, w), dtype=np.float64)
    for dr in range(-r, r + 1):
        # target rows [r0, r1) read source rows shifted by dr
        r0, r1 = max(0, -dr), min(h, h - dr)
        if r0 >= r1:
            continue
        for dc in range(-r, r + 1):
            wgt = kernel.weights[dr + r, dc + r]
            if wgt == 0.0:
                continue
            c0, c1 = max(0, -dc), min(w, w - dc)
            if c0 >= c1:
                continue
            acc[r0:r1, c0:c1] += wgt * occ[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
    acc[grid.cells] = 0.0
    acc.setflags(write=False)
    return SafetyField(values=acc, radius=r, epsilon=kernel.epsilon)


def safety_upper_bound(dims: int, r: int, epsilon: float = DEFAULT_EPSILON) -> float:
    """Largest field value any explorable cell can reach in a ``dims``-dimensional grid.

    Sums, over Chebyshev shells ``d = 1..r``, the shell size
    ``(2d+1)^dims - (2d-1)^dims`` times the per-cell weight ``1/(d+eps)``.
    """
    if dims < 1:
        raise ValueError(f"dims must be >= 1, got {dims}")
    total = 0.0
    for d in range(1, int(r) + 1):
        total += ((2 * d + 1) ** dims - (2 * d - 1) ** dims) / (d + epsilon)
    return total
