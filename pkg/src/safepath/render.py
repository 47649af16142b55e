"""SVG figures of maps and paths, and PGM dumps of scalar fields."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

from .gridmap import GridIndex, OccupancyGrid

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")
CELL_PX = 6


def _obstacle_runs(grid: OccupancyGrid):
    """Horizontal runs of obstacle cells as (row, col_start, length)."""
    for r, row in enumerate(grid.cells):
        c, w = 0, len(row)
        while c < w:
            if row[c]:
                start = c
                while c < w and row[c]:
                    c += 1
                yield r, start, c - start
            else:
                c += 1


def render_svg(
    grid: OccupancyGrid,
    paths: Sequence[Tuple[str, Sequence[GridIndex]]],
    out: Optional[str | Path] = None,
    cell_px: int = CELL_PX,
) -> str:
    """Draw obstacles, one polyline per labeled path, start/goal markers and a legend."""
    for label, path in paths:
        for n in path:
            if not grid.is_free(tuple(n)):
                raise ValueError(f"path {label!r} visits blocked or out-of-bounds cell {tuple(n)}")

    legend_h = 18 * len(paths) + (8 if paths else 0)
    width = grid.width * cell_px
    height = grid.height * cell_px
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height + legend_h}" '
        f'viewBox="0 0 {width} {height + legend_h}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff" stroke="#888888"/>',
        '<g id="obstacles" fill="#222222">',
    ]
    for r, c, n in _obstacle_runs(grid):
        parts.append(f'<rect x="{c * cell_px}" y="{r * cell_px}" width="{n * cell_px}" height="{cell_px}"/>')
    parts.append("</g>")

    half = cell_px / 2
    for i, (label, path) in enumerate(paths):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{c * cell_px + half:g},{r * cell_px + half:g}" for r, c in path)
        parts.append(f'<g class="path" id="path-{i}">')
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{max(1, cell_px // 3)}" '
            f'stroke-linejoin="round"><title>{escape(label)}</title></polyline>'
        )
        if path:
            (sr, sc), (tr, tc) = path[0], path[-1]
            parts.append(
                f'<circle class="start" cx="{sc * cell_px + half:g}" cy="{sr * cell_px + half:g}" r="{cell_px}" fill="{color}"/>'
            )
            parts.append(
                f'<rect class="goal" x="{tc * cell_px:g}" y="{tr * cell_px:g}" width="{cell_px}" height="{cell_px}" '
                f'fill="none" stroke="{color}" stroke-width="2"/>'
            )
        parts.append("</g>")

    if paths:
        parts.append('<g id="legend" font-family="sans-serif" font-size="12">')
        for i, (label, _) in enumerate(paths):
            y = height + 14 + 18 * i
            color = PALETTE[i % len(PALETTE)]
            parts.append(f'<line x1="6" y1="{y - 4}" x2="26" y2="{y - 4}" stroke="{color}" stroke-width="3"/>')
            parts.append(f'<text x="32" y="{y}">{escape(label)}</text>')
        parts.append("</g>")
    parts.append("</svg>")
    doc = "\n".join(parts) + "\n"

    if out is not None:
        out = Path(out)
        try:
            out.write_text(doc, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"writing SVG to {out}: {exc}") from exc
    return doc


def field_to_pgm(values: np.ndarray) -> bytes:
    """Binary 8-bit PGM with values scaled so the field maximum is white."""
    vals = np.asarray(values, dtype=np.float64)
    top = vals.max() if vals.size else 0.0
    scaled = np.zeros(vals.shape, dtype=np.uint8) if top <= 0 else np.round(vals / top * 255).astype(np.uint8)
    h, w = scaled.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + scaled.tobytes()


def write_pgm(values: np.ndarray, out: str | Path) -> None:
    out = Path(out)
    try:
        out.write_bytes(field_to_pgm(values))
    except OSError as exc:
        raise OSError(f"writing PGM to {out}: {exc}") from exc
