"""Deterministic SVG 1.1 line plots: one polyline per group, linear axes, legend."""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path
from xml.sax.saxutils import escape

from ..exceptions import ArgumentError

WIDTH, HEIGHT = 720, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 170, 30, 60
PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _get(row, column):
    if isinstance(row, dict):
        if column not in row:
            raise ArgumentError(f"unknown column {column!r}")
        return row[column]
    if not hasattr(row, column):
        raise ArgumentError(f"unknown column {column!r}")
    return getattr(row, column)


def _num(value):
    if value is None or value == "":
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def nice_ticks(lo, hi, target=6):
    """Round tick positions (1, 2 or 5 times a power of ten) covering ``[lo, hi]``."""
    if hi < lo:
        lo, hi = hi, lo
    if hi == lo:
        pad = abs(lo) * 0.05 or 1.0
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / max(1, target - 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1.0, 2.0, 5.0, 10.0) if m * mag >= raw)
    first = math.floor(lo / step) * step
    last = math.ceil(hi / step) * step
    count = int(round((last - first) / step))
    return [first + i * step for i in range(count + 1)], step


def _fmt_tick(v, step):
    decimals = max(0, -int(math.floor(math.log10(step)))) if step < 1 else 0
    text = f"{v:.{decimals}f}"
    return "0" if text in ("-0", "-0.0", "-0.00") else text


def aggregate(rows, x, y, group_by):
    """Mean of ``y`` per ``x`` within each group, groups and x values sorted."""
    acc = defaultdict(lambda: defaultdict(list))
    for row in rows:
        xv, yv = _num(_get(row, x)), _num(_get(row, y))
        if xv is None or yv is None:
            continue
        acc[str(_get(row, group_by))][xv].append(yv)
    return {
        g: [(xv, sum(ys) / len(ys)) for xv, ys in sorted(points.items())]
        for g, points in sorted(acc.items())
    }


def render_svg(rows, spec):
    x, y, group_by = spec["x"], spec["y"], spec.get("group_by", "solver")
    rows = list(rows)
    if not rows:
        raise ArgumentError("nothing to plot: no rows")
    for col in (x, y, group_by):
        _get(rows[0], col)
    series = aggregate(rows, x, y, group_by)
    if not series:
        raise ArgumentError(f"nothing to plot: column {y!r} has no numeric values")
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    xticks, xstep = nice_ticks(min(xs), max(xs))
    yticks, ystep = nice_ticks(min(ys), max(ys))
    x0, x1, y0, y1 = xticks[0], xticks[-1], yticks[0], yticks[-1]
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(v):
        return MARGIN_L + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN_T + ph - (v - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<title>{escape(y)} vs {escape(x)} by {escape(group_by)}</title>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        '<g font-family="sans-serif" font-size="11" fill="#000000">',
    ]
    bottom, right = MARGIN_T + ph, MARGIN_L + pw
    for v in xticks:
        px = sx(v)
        out.append(f'<line x1="{px:.2f}" y1="{MARGIN_T}" x2="{px:.2f}" y2="{bottom}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{px:.2f}" y="{bottom + 16}" text-anchor="middle">{_fmt_tick(v, xstep)}</text>')
    for v in yticks:
        py = sy(v)
        out.append(f'<line x1="{MARGIN_L}" y1="{py:.2f}" x2="{right}" y2="{py:.2f}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{py + 4:.2f}" text-anchor="end">{_fmt_tick(v, ystep)}</text>')
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="#000000"/>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.2f}" y="{HEIGHT - 18}" text-anchor="middle">{escape(x)}</text>')
    out.append(
        f'<text x="18" y="{MARGIN_T + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {MARGIN_T + ph / 2:.2f})">{escape(y)}</text>'
    )
    out.append("</g>")
    for i, (name, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = MARGIN_T + 12 + 18 * i
        lx = right + 14
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 22}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text x="{lx + 28}" y="{ly + 4}" font-family="sans-serif" font-size="11">{escape(name)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(rows, spec, out):
    """Write the plot to ``out``; identical input gives identical bytes."""
    text = render_svg(rows, spec)
    Path(out).write_bytes(text.encode("utf-8"))
    return Path(out)


__all__ = ["emit_svg", "render_svg", "aggregate", "nice_ticks"]
