"""Self-contained SVG line charts of a benchmark forecast.

The file is plain text generated with fixed float formatting, so identical
bundles produce identical bytes; no plotting library is involved. The test
window is shaded, each series gets its own stroke, and a legend sits in the
right margin.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .series import PollutantKind, TimeSeries

WIDTH = 860.0
HEIGHT = 420.0
MARGIN_LEFT = 64.0
MARGIN_RIGHT = 176.0
MARGIN_TOP = 28.0
MARGIN_BOTTOM = 44.0

_SERIES_STYLE = {
    "actual": ("#222222", ""),
    "additive": ("#1f77b4", ""),
    "lstm": ("#d62728", "6,3"),
}
_FALLBACK_STYLE = ("#2ca02c", "2,2")


@dataclass(frozen=True)
class ForecastBundle:
    """Everything one chart needs: history plus per-model test forecasts."""

    state: str
    pollutant: PollutantKind
    actual: TimeSeries
    forecasts: dict[str, np.ndarray]  # values over the test window, model-keyed
    test_start_index: int


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def x_position(index: int, n: int) -> float:
    """Pixel x of month `index` in a series of n months."""
    inner = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    if n == 1:
        return MARGIN_LEFT + inner / 2.0
    return MARGIN_LEFT + inner * index / (n - 1)


def render_plot(bundle: ForecastBundle, path) -> None:
    """Write the chart; a degenerate single-point bundle still renders."""
    actual = bundle.actual
    n = len(actual)
    series: list[tuple[str, int, np.ndarray]] = [("actual", 0, actual.values)]
    for name in sorted(bundle.forecasts):
        series.append((name, bundle.test_start_index, np.asarray(bundle.forecasts[name])))

    finite = np.concatenate([v[np.isfinite(v)] for _, _, v in series if len(v)])
    lo = float(finite.min()) if len(finite) else 0.0
    hi = float(finite.max()) if len(finite) else 1.0
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    inner_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def ypos(v: float) -> float:
        return MARGIN_TOP + inner_h * (hi - v) / (hi - lo)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(WIDTH)}" '
        f'height="{_fmt(HEIGHT)}" viewBox="0 0 {_fmt(WIDTH)} {_fmt(HEIGHT)}">',
        f'<rect width="{_fmt(WIDTH)}" height="{_fmt(HEIGHT)}" fill="#ffffff"/>',
        f'<text x="{_fmt(MARGIN_LEFT)}" y="18" font-family="sans-serif" font-size="13">'
        f"{bundle.state} / {bundle.pollutant.name} forecast</text>",
    ]

    if bundle.test_start_index < n:
        x0 = x_position(bundle.test_start_index, n)
        x1 = x_position(n - 1, n)
        out.append(
            f'<rect id="test-window" x="{_fmt(x0)}" y="{_fmt(MARGIN_TOP)}" '
            f'width="{_fmt(x1 - x0)}" height="{_fmt(inner_h)}" fill="#dddddd"/>'
        )

    axis_y = HEIGHT - MARGIN_BOTTOM
    out.append(
        f'<line x1="{_fmt(MARGIN_LEFT)}" y1="{_fmt(axis_y)}" '
        f'x2="{_fmt(WIDTH - MARGIN_RIGHT)}" y2="{_fmt(axis_y)}" stroke="#555555"/>'
    )
    out.append(
        f'<line x1="{_fmt(MARGIN_LEFT)}" y1="{_fmt(MARGIN_TOP)}" '
        f'x2="{_fmt(MARGIN_LEFT)}" y2="{_fmt(axis_y)}" stroke="#555555"/>'
    )
    for level, anchor_y in ((hi - pad, MARGIN_TOP + pad / (hi - lo) * inner_h + 4),
                            (lo + pad, axis_y)):
        out.append(
            f'<text x="{_fmt(MARGIN_LEFT - 6)}" y="{_fmt(anchor_y)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{level:.3g}</text>'
        )
    for idx, stamp in enumerate(actual.stamps):
        if stamp.month == 1:
            xp = x_position(idx, n)
            out.append(
                f'<text x="{_fmt(xp)}" y="{_fmt(axis_y + 14)}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="10">{stamp.year}</text>'
            )

    legend_y = MARGIN_TOP + 12
    for name, offset, values in series:
        color, dash = _SERIES_STYLE.get(name, _FALLBACK_STYLE)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        points = [
            f"{_fmt(x_position(offset + i, n))},{_fmt(ypos(float(v)))}"
            for i, v in enumerate(values)
            if np.isfinite(v)
        ]
        if len(points) == 1:
            cx, cy = points[0].split(",")
            out.append(f'<circle cx="{cx}" cy="{cy}" r="2.5" fill="{color}"/>')
        elif points:
            out.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} '
                f'points="{" ".join(points)}"/>'
            )
        lx = WIDTH - MARGIN_RIGHT + 12
        out.append(
            f'<line x1="{_fmt(lx)}" y1="{_fmt(legend_y - 4)}" x2="{_fmt(lx + 22)}" '
            f'y2="{_fmt(legend_y - 4)}" stroke="{color}" stroke-width="1.5"{dash_attr}/>'
        )
        out.append(
            f'<text x="{_fmt(lx + 28)}" y="{_fmt(legend_y)}" font-family="sans-serif" '
            f'font-size="11">{name}</text>'
        )
        legend_y += 16

    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
