"""Small deterministic SVG line-chart writer.

Output is plain SVG 1.1 with exactly one ``<polyline>`` per series, which
keeps files diffable and easy to assert on.  No timestamps or generated ids
are embedded, so identical inputs give identical bytes.
"""

from __future__ import annotations

import math
from typing import Sequence

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
    "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
    "#bcbd22", "#7f7f7f",
)

MARGIN_LEFT = 64
MARGIN_RIGHT = 16
MARGIN_TOP = 36
MARGIN_BOTTOM = 44
MAX_POINTS = 5000


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _decimate(xs: Sequence[float], ys: Sequence[float]):
    n = len(xs)
    if n <= MAX_POINTS:
        return xs, ys
    stride = -(-n // MAX_POINTS)
    keep = list(range(0, n, stride))
    if keep[-1] != n - 1:
        keep.append(n - 1)
    return [xs[i] for i in keep], [ys[i] for i in keep]


def line_chart(
    path,
    title: str,
    x: Sequence[float],
    series: Sequence[tuple[str, Sequence[float]]],
    x_label: str = "time (days)",
    y_label: str = "",
    width: int = 960,
    height: int = 520,
    y_min: float | None = None,
    y_max: float | None = None,
) -> None:
    """Write a line chart of the named series against a shared x axis."""
    if not series:
        raise ValueError("line_chart needs at least one series")
    x = list(map(float, x))
    all_y = [float(v) for _, ys in series for v in ys]
    lo_x, hi_x = min(x), max(x)
    lo_y = min(all_y) if y_min is None else y_min
    hi_y = max(all_y) if y_max is None else y_max
    if hi_y <= lo_y:
        hi_y = lo_y + 1.0
    if hi_x <= lo_x:
        hi_x = lo_x + 1.0
    plot_w = width - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = height - MARGIN_TOP - MARGIN_BOTTOM

    def px(v):
        return MARGIN_LEFT + (v - lo_x) / (hi_x - lo_x) * plot_w

    def py(v):
        return MARGIN_TOP + (hi_y - v) / (hi_y - lo_y) * plot_h

    out = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    )
    out.append(f'<rect width="{width}" height="{height}" fill="#ffffff"/>')
    out.append(
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>'
    )
    axis_style = 'stroke="#444444" stroke-width="1"'
    x0, y0 = MARGIN_LEFT, MARGIN_TOP + plot_h
    out.append(f'<line x1="{x0}" y1="{MARGIN_TOP}" x2="{x0}" y2="{y0}" {axis_style}/>')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0 + plot_w}" y2="{y0}" {axis_style}/>')
    for tx in _ticks(lo_x, hi_x):
        p = px(tx)
        out.append(f'<line x1="{_fmt(p)}" y1="{y0}" x2="{_fmt(p)}" y2="{y0 + 5}" {axis_style}/>')
        out.append(
            f'<text x="{_fmt(p)}" y="{y0 + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{tx:g}</text>'
        )
    for ty in _ticks(lo_y, hi_y):
        p = py(ty)
        out.append(f'<line x1="{x0 - 5}" y1="{_fmt(p)}" x2="{x0}" y2="{_fmt(p)}" {axis_style}/>')
        out.append(
            f'<text x="{x0 - 8}" y="{_fmt(p + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{ty:g}</text>'
        )
    out.append(
        f'<text x="{MARGIN_LEFT + plot_w / 2:.1f}" y="{height - 8}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{x_label}</text>'
    )
    if y_label:
        cy = MARGIN_TOP + plot_h / 2
        out.append(
            f'<text x="14" y="{cy:.1f}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="12" transform="rotate(-90 14 {cy:.1f})">{y_label}</text>'
        )

    for idx, (label, ys) in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        xs_d, ys_d = _decimate(x, [float(v) for v in ys])
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(xs_d, ys_d))
        out.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'
        )
        ly = MARGIN_TOP + 14 + 16 * idx
        lx = MARGIN_LEFT + plot_w - 150
        out.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{lx + 24}" y="{ly}" font-family="sans-serif" '
            f'font-size="11">{label}</text>'
        )
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
