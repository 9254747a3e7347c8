"""Trajectory CSV files and phase-plane SVG plots.

Both writers are deterministic: the same trajectory always produces the
same bytes.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .core import UnknownSelector
from .triad import TriadTrajectory, coordinate_index

CANVAS = 800
MARGIN = 0.05


def trajectory_header(n: int) -> list[str]:
    return ["step"] + [f"{s}_{i}" for s in "PRQ" for i in range(1, n + 1)]


def write_trajectory(trajectory: TriadTrajectory, path) -> Path:
    """Write one CSV row per recorded step.

    Floats use ``repr``, the shortest string that reads back to the same
    double, so a round trip is bit exact.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(trajectory.n))
        for N, row in enumerate(trajectory.data):
            w.writerow([N, *(repr(float(v)) for v in row)])
    return path


def read_trajectory(path, params=None) -> TriadTrajectory:
    """Load a CSV written by :func:`write_trajectory`.

    Totals are taken from the first row.
    """
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if (len(header) - 1) % 3 or header[0] != "step":
        raise ValueError(f"{path}: unexpected header {header[:4]}...")
    n = (len(header) - 1) // 3
    if header != trajectory_header(n):
        raise ValueError(f"{path}: unexpected header {header[:4]}...")
    if not body:
        raise ValueError(f"{path}: no data rows")
    data = np.array([[float(v) for v in r[1:]] for r in body])
    totals = tuple(float(np.sum(data[0, k * n : (k + 1) * n])) for k in range(3))
    return TriadTrajectory(data, totals, params)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _axis_range(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(np.min(values)), float(np.max(values))
    span = hi - lo
    if span == 0.0:
        span = max(abs(lo), 1.0)
        return lo - 0.5 * span, hi + 0.5 * span
    return lo - MARGIN * span, hi + MARGIN * span


def render_phase_plot(
    trajectory: TriadTrajectory,
    axes: Sequence[str],
    path,
    size: int = CANVAS,
    title: Optional[str] = None,
) -> Path:
    """Project the trajectory onto two coordinates and draw it as an SVG polyline."""
    if len(axes) != 2:
        raise UnknownSelector(f"need exactly two axis selectors, got {list(axes)}")
    xsel, ysel = axes
    xs = trajectory.data[:, coordinate_index(xsel, trajectory.n)]
    ys = trajectory.data[:, coordinate_index(ysel, trajectory.n)]
    x0, x1 = _axis_range(xs)
    y0, y1 = _axis_range(ys)
    m = MARGIN * size
    inner = size - 2 * m
    px = m + (xs - x0) / (x1 - x0) * inner
    py = size - m - (ys - y0) / (y1 - y0) * inner
    points = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
    title = title or f"{ysel} vs {xsel}"

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{_fmt(m)}" y="{_fmt(m)}" width="{_fmt(inner)}" height="{_fmt(inner)}" '
        'fill="none" stroke="black" stroke-width="1"/>',
        f'<polyline fill="none" stroke="steelblue" stroke-width="1" points="{points}"/>',
        f'<circle cx="{_fmt(px[0])}" cy="{_fmt(py[0])}" r="3" fill="green"/>',
        f'<circle cx="{_fmt(px[-1])}" cy="{_fmt(py[-1])}" r="3" fill="red"/>',
        f'<text x="{_fmt(size / 2)}" y="{_fmt(size - m / 4)}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{escape(xsel)}</text>',
        f'<text x="{_fmt(m / 3)}" y="{_fmt(size / 2)}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14" transform="rotate(-90 {_fmt(m / 3)} {_fmt(size / 2)})">{escape(ysel)}</text>',
        f'<text x="{_fmt(m)}" y="{_fmt(size - m / 4)}" font-family="sans-serif" font-size="10">{x0:.6g}</text>',
        f'<text x="{_fmt(size - m)}" y="{_fmt(size - m / 4)}" text-anchor="end" '
        f'font-family="sans-serif" font-size="10">{x1:.6g}</text>',
        f'<text x="{_fmt(m / 4)}" y="{_fmt(size - m)}" font-family="sans-serif" font-size="10">{y0:.6g}</text>',
        f'<text x="{_fmt(m / 4)}" y="{_fmt(m)}" font-family="sans-serif" font-size="10">{y1:.6g}</text>',
        "</svg>",
    ]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path
