"""Occupancy grids: parsing, distance transform, free-space statistics and
8-connected neighbor generation.

Cells are addressed as ``(row, col)`` tuples. Distances are in cell units;
conversion to meters happens in :mod:`safepath.metrics`.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import List, Tuple

import numpy as np
from scipy import ndimage

GridIndex = Tuple[int, int]

SQRT2 = math.sqrt(2.0)

# (drow, dcol, cost); axis moves first so neighbor order is stable
MOVES: Tuple[Tuple[int, int, float], ...] = (
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (1, 0, 1.0),
    (0, -1, 1.0),
    (-1, 1, SQRT2),
    (1, 1, SQRT2),
    (1, -1, SQRT2),
    (-1, -1, SQRT2),
)


class MapFormatError(ValueError):
    """Raised when a map document cannot be parsed."""


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """Binary occupancy lattice. ``cells[row, col]`` is True for obstacles."""

    cells: np.ndarray
    cell_size: float = 1.0
    _hash: int = field(init=False, repr=False, default=0)

    def __post_init__(self) -> None:
        cells = np.array(self.cells, dtype=bool, copy=True)
        if cells.ndim != 2 or cells.shape[0] == 0 or cells.shape[1] == 0:
            raise ValueError(f"occupancy grid must be a non-empty 2D array, got shape {cells.shape}")
        if not (self.cell_size > 0 and math.isfinite(self.cell_size)):
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "cell_size", float(self.cell_size))
        object.__setattr__(self, "_hash", hash((cells.shape, cells.tobytes(), self.cell_size)))

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.cells.shape

    @cached_property
    def fingerprint(self) -> str:
        """Stable content hash, used as a cache key and map identifier."""
        h = hashlib.sha1()
        h.update(f"{self.height}x{self.width}@{self.cell_size!r}".encode())
        h.update(np.packbits(self.cells).tobytes())
        return h.hexdigest()[:16]

    def in_bounds(self, n: GridIndex) -> bool:
        r, c = n
        return 0 <= r < self.height and 0 <= c < self.width

    def is_free(self, n: GridIndex) -> bool:
        return self.in_bounds(n) and not self.cells[n[0], n[1]]

    def obstacle_count(self) -> int:
        return int(np.count_nonzero(self.cells))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            self.cell_size == other.cell_size
            and self.cells.shape == other.cells.shape
            and bool(np.array_equal(self.cells, other.cells))
        )

    def __hash__(self) -> int:
        return self._hash


@dataclass(frozen=True)
class FreeSpaceStats:
    mu: float
    sigma: float
    rho: float


_HEADER = re.compile(r"^cell\s+(\S+)\s*$")


def parse_map(text: str) -> OccupancyGrid:
    """Parse the ASCII map format.

    The first line is ``cell <size>``; each following line is a row of
    ``.`` (free) and ``#`` (obstacle) characters.
    """
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MapFormatError("empty map document")
    m = _HEADER.match(lines[0].strip())
    if m is None:
        raise MapFormatError(f"line 1: expected 'cell <size>' header, got {lines[0]!r}")
    try:
        cell_size = float(m.group(1))
    except ValueError:
        raise MapFormatError(f"line 1: invalid cell size {m.group(1)!r}") from None
    if not (cell_size > 0 and math.isfinite(cell_size)):
        raise MapFormatError(f"line 1: cell size must be positive, got {cell_size}")

    rows = lines[1:]
    if not rows:
        raise MapFormatError("map has no rows")
    width = len(rows[0])
    if width == 0:
        raise MapFormatError("line 2: empty row")
    cells = np.zeros((len(rows), width), dtype=bool)
    for i, row in enumerate(rows):
        lineno = i + 2
        if len(row) != width:
            raise MapFormatError(f"line {lineno}: ragged row, expected {width} characters, got {len(row)}")
        for j, ch in enumerate(row):
            if ch == "#":
                cells[i, j] = True
            elif ch != ".":
                raise MapFormatError(f"line {lineno}, column {j + 1}: unknown character {ch!r}")
    return OccupancyGrid(cells, cell_size)


def serialize_map(grid: OccupancyGrid) -> str:
    out = [f"cell {grid.cell_size!r}"]
    for row in grid.cells:
        out.append("".join("#" if v else "." for v in row))
    return "\n".join(out) + "\n"


def _pgm_tokens(data: bytes):
    """Yield (token, end_offset) for PGM header tokens, skipping comments."""
    i, n = 0, len(data)
    while i < n:
        ch = data[i : i + 1]
        if ch == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < n and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            yield data[i:j], j
            i = j


def parse_pgm(data: bytes, cell_size: float) -> OccupancyGrid:
    """Read a P2/P5 image; pixels darker than mid-grey (< 128 of 255) are obstacles."""
    tokens = _pgm_tokens(data)
    try:
        magic, _ = next(tokens)
        if magic not in (b"P2", b"P5"):
            raise MapFormatError(f"unsupported PGM magic {magic!r}")
        width = int(next(tokens)[0])
        height = int(next(tokens)[0])
        maxval_tok, end = next(tokens)
        maxval = int(maxval_tok)
    except StopIteration:
        raise MapFormatError("truncated PGM header") from None
    except ValueError as exc:
        raise MapFormatError(f"bad PGM header: {exc}") from None
    if width <= 0 or height <= 0 or not (0 < maxval < 65536):
        raise MapFormatError(f"bad PGM dimensions {width}x{height} maxval {maxval}")

    count = width * height
    if magic == b"P5":
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        raw = data[end + 1 : end + 1 + count * dtype.itemsize]
        if len(raw) != count * dtype.itemsize:
            raise MapFormatError("truncated PGM pixel data")
        pixels = np.frombuffer(raw, dtype=dtype).astype(np.int64)
    else:
        try:
            pixels = np.array([int(tok) for tok, _ in tokens], dtype=np.int64)
        except ValueError as exc:
            raise MapFormatError(f"bad P2 pixel value: {exc}") from None
        if pixels.size != count:
            raise MapFormatError(f"expected {count} P2 pixels, got {pixels.size}")
    scaled = pixels.reshape(height, width) * 255.0 / maxval
    return OccupancyGrid(scaled < 128.0, cell_size)


def load_map(path: str | Path, cell_size: float | None = None) -> OccupancyGrid:
    """Load an ASCII map, or a PGM image when ``cell_size`` is supplied or the file is PGM."""
    path = Path(path)
    data = path.read_bytes()
    if data[:2] in (b"P2", b"P5"):
        if cell_size is None:
            raise MapFormatError(f"{path}: PGM maps need an explicit cell size")
        return parse_pgm(data, cell_size)
    try:
        grid = parse_map(data.decode("utf-8"))
    except UnicodeDecodeError:
        raise MapFormatError(f"{path}: not a text map") from None
    except MapFormatError as exc:
        raise MapFormatError(f"{path}: {exc}") from None
    if cell_size is not None:
        grid = OccupancyGrid(grid.cells, cell_size)
    return grid


def distance_transform(grid: OccupancyGrid) -> np.ndarray:
    """Euclidean distance (cell units) from each cell center to the nearest obstacle center.

    Obstacle cells are 0. On a grid with no obstacles every cell holds the
    grid diagonal, so downstream statistics stay finite.
    """
    if not grid.cells.any():
        return np.full(grid.shape, math.hypot(grid.width, grid.height))
    return ndimage.distance_transform_edt(~grid.cells).astype(np.float64)


def free_space_stats(grid: OccupancyGrid, field: np.ndarray) -> FreeSpaceStats:
    free = field[~grid.cells]
    rho = grid.obstacle_count() / grid.cells.size
    if free.size == 0:
        return FreeSpaceStats(mu=0.0, sigma=0.0, rho=rho)
    lo, hi = float(free.min()), float(free.max())
    if lo == hi:
        # pairwise summation leaves ~1e-16 noise on constant data
        return FreeSpaceStats(mu=lo, sigma=0.0, rho=rho)
    return FreeSpaceStats(mu=float(free.mean()), sigma=float(free.std()), rho=rho)


def neighbors(grid: OccupancyGrid, n: GridIndex) -> List[Tuple[GridIndex, float]]:
    """Free 8-connected neighbors of ``n`` with step costs 1 / sqrt(2).

    A diagonal move is dropped when both cells it would squeeze between are
    obstacles.
    """
    cells = grid.cells
    h, w = cells.shape
    r, c = n
    out = []
    for dr, dc, cost in MOVES:
        rr, cc = r + dr, c + dc
        if not (0 <= rr < h and 0 <= cc < w) or cells[rr, cc]:
            continue
        if dr and dc and cells[r + dr, c] and cells[r, c + dc]:
            continue
        out.append(((rr, cc), cost))
    return out
