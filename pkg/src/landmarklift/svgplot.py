"""Minimal deterministic SVG output: scatter plots and loss curves.

Output depends only on the data passed in — no timestamps, random ids, or
library version strings — so identical runs produce byte-identical files.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInputError

_SIZE = 480
_MARGIN = 48
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _axis_range(values: np.ndarray) -> tuple[float, float]:
    lo = float(values.min())
    hi = float(values.max())
    pad = 0.05 * (hi - lo) if hi > lo else max(abs(hi), 1.0) * 0.05
    return lo - pad, hi + pad


class _Canvas:
    def __init__(self, title: str, xlim, ylim, xlabel: str, ylabel: str):
        self.xlim = xlim
        self.ylim = ylim
        inner = _SIZE - 2 * _MARGIN
        self.sx = lambda x: _MARGIN + (x - xlim[0]) / (xlim[1] - xlim[0]) * inner
        self.sy = lambda y: _SIZE - _MARGIN - (y - ylim[0]) / (ylim[1] - ylim[0]) * inner
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" '
            f'height="{_SIZE}" viewBox="0 0 {_SIZE} {_SIZE}">',
            f'<rect width="{_SIZE}" height="{_SIZE}" fill="white"/>',
            f'<text x="{_SIZE // 2}" y="24" text-anchor="middle" '
            f'font-family="monospace" font-size="14">{title}</text>',
        ]
        m, s = _MARGIN, _SIZE
        self.parts.append(
            f'<path d="M {m} {m} L {m} {s - m} L {s - m} {s - m}" '
            'fill="none" stroke="black" stroke-width="1"/>'
        )
        for frac in (0.0, 0.5, 1.0):
            xv = xlim[0] + frac * (xlim[1] - xlim[0])
            yv = ylim[0] + frac * (ylim[1] - ylim[0])
            self.parts.append(
                f'<text x="{_fmt(self.sx(xv))}" y="{s - m + 18}" '
                f'text-anchor="middle" font-family="monospace" font-size="10">'
                f"{_fmt(xv)}</text>"
            )
            self.parts.append(
                f'<text x="{m - 6}" y="{_fmt(self.sy(yv) + 3)}" '
                f'text-anchor="end" font-family="monospace" font-size="10">'
                f"{_fmt(yv)}</text>"
            )
        self.parts.append(
            f'<text x="{s // 2}" y="{s - 10}" text-anchor="middle" '
            f'font-family="monospace" font-size="12">{xlabel}</text>'
        )
        self.parts.append(
            f'<text x="14" y="{s // 2}" text-anchor="middle" '
            f'font-family="monospace" font-size="12" '
            f'transform="rotate(-90 14 {s // 2})">{ylabel}</text>'
        )
        self._legend_y = _MARGIN + 6

    def legend(self, label: str, color: str, marker: str):
        x = _SIZE - _MARGIN - 120
        y = self._legend_y
        self._legend_y += 16
        self.parts.append(self._marker(x, y - 3, color, marker))
        self.parts.append(
            f'<text x="{x + 10}" y="{y}" font-family="monospace" '
            f'font-size="11">{label}</text>'
        )

    @staticmethod
    def _marker(cx, cy, color, marker):
        if marker == "cross":
            return (
                f'<path d="M {_fmt(cx - 3)} {_fmt(cy - 3)} L {_fmt(cx + 3)} '
                f"{_fmt(cy + 3)} M {_fmt(cx - 3)} {_fmt(cy + 3)} "
                f'L {_fmt(cx + 3)} {_fmt(cy - 3)}" stroke="{color}" '
                'stroke-width="1.5" fill="none"/>'
            )
        return f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="3" fill="{color}"/>'

    def scatter(self, xy: np.ndarray, color: str, marker: str):
        for x, y in xy:
            self.parts.append(self._marker(self.sx(x), self.sy(y), color, marker))

    def polyline(self, xy: np.ndarray, color: str):
        pts = " ".join(f"{_fmt(self.sx(x))},{_fmt(self.sy(y))}" for x, y in xy)
        self.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            'stroke-width="1.5"/>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def scatter_svg(
    groups: list[tuple[str, np.ndarray]],
    title: str = "",
    xlabel: str = "x",
    ylabel: str = "y",
) -> str:
    """Scatter plot of labeled 2D point groups; axes cover every point."""
    arrays = [np.asarray(xy, dtype=np.float64) for _, xy in groups]
    if not arrays or any(a.size == 0 for a in arrays):
        raise DegenerateInputError("nothing to plot")
    stacked = np.vstack(arrays)
    canvas = _Canvas(
        title, _axis_range(stacked[:, 0]), _axis_range(stacked[:, 1]),
        xlabel, ylabel,
    )
    markers = ("circle", "cross")
    for i, ((label, _), xy) in enumerate(zip(groups, arrays)):
        color = _COLORS[i % len(_COLORS)]
        marker = markers[i % len(markers)]
        canvas.scatter(xy, color, marker)
        canvas.legend(label, color, marker)
    return canvas.render()


def curves_svg(
    series: dict[str, np.ndarray],
    title: str = "",
    xlabel: str = "epoch",
    ylabel: str = "loss",
) -> str:
    """Line plot of named 1-D series over their indices."""
    if not series or any(len(v) == 0 for v in series.values()):
        raise DegenerateInputError("nothing to plot")
    ys = [np.asarray(v, dtype=np.float64) for v in series.values()]
    all_y = np.concatenate(ys)
    xmax = max(len(y) for y in ys) - 1
    canvas = _Canvas(
        title, (0.0, float(max(xmax, 1))), _axis_range(all_y), xlabel, ylabel
    )
    for i, (label, y) in enumerate(zip(series.keys(), ys)):
        color = _COLORS[i % len(_COLORS)]
        xy = np.column_stack([np.arange(len(y), dtype=np.float64), y])
        canvas.polyline(xy, color)
        canvas.legend(label, color, "circle")
    return canvas.render()
