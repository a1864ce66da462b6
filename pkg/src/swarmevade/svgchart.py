"""Minimal SVG line charts (axes + polylines), no plotting dependencies."""

from __future__ import annotations

import math
from typing import Sequence

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(x: float) -> str:
    return format(x, ".6g")


def line_chart(
    x: Sequence[float],
    series: dict[str, Sequence[float]],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    width: int = 720,
    height: int = 420,
) -> str:
    """Render named series over a shared x axis as standalone SVG text."""
    margin_l, margin_r, margin_t, margin_b = 60, 20, 36, 46
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b

    xs = list(x)
    finite = [
        v for values in series.values() for v in values
        if v is not None and not math.isnan(v)
    ]
    if not xs or not finite:
        x_min, x_max, y_min, y_max = 0.0, 1.0, 0.0, 1.0
    else:
        x_min, x_max = min(xs), max(xs)
        y_min, y_max = min(finite), max(finite)
    if x_max <= x_min:
        x_max = x_min + 1.0
    if y_max <= y_min:
        y_max = y_min + 1.0
    pad = 0.05 * (y_max - y_min)
    y_min -= pad
    y_max += pad

    def sx(v: float) -> float:
        return margin_l + (v - x_min) / (x_max - x_min) * plot_w

    def sy(v: float) -> float:
        return margin_t + (y_max - v) / (y_max - y_min) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{margin_l}" y1="{margin_t}" x2="{margin_l}" '
        f'y2="{margin_t + plot_h}" stroke="black"/>',
        f'<line x1="{margin_l}" y1="{margin_t + plot_h}" x2="{margin_l + plot_w}" '
        f'y2="{margin_t + plot_h}" stroke="black"/>',
    ]

    for i in range(5):
        fx = x_min + (x_max - x_min) * i / 4
        fy = y_min + (y_max - y_min) * i / 4
        parts.append(
            f'<text x="{sx(fx):.1f}" y="{margin_t + plot_h + 16}" '
            f'text-anchor="middle">{_fmt(fx)}</text>'
        )
        parts.append(
            f'<text x="{margin_l - 6}" y="{sy(fy):.1f}" '
            f'text-anchor="end" dominant-baseline="middle">{_fmt(fy)}</text>'
        )
        parts.append(
            f'<line x1="{margin_l}" y1="{sy(fy):.1f}" x2="{margin_l + plot_w}" '
            f'y2="{sy(fy):.1f}" stroke="#dddddd"/>'
        )

    parts.append(
        f'<text x="{margin_l + plot_w / 2}" y="{height - 8}" '
        f'text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{margin_t + plot_h / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {margin_t + plot_h / 2})">{y_label}</text>'
    )

    for idx, (name, values) in enumerate(series.items()):
        color = _COLORS[idx % len(_COLORS)]
        points = " ".join(
            f"{sx(px):.2f},{sy(py):.2f}"
            for px, py in zip(xs, values)
            if py is not None and not math.isnan(py)
        )
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>'
        )
        parts.append(
            f'<text x="{margin_l + plot_w - 6}" y="{margin_t + 14 + 16 * idx}" '
            f'text-anchor="end" fill="{color}">{name}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts)
