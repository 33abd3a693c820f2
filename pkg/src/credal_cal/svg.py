"""
Minimal SVG charts: line plots, scatter plots and histograms.

Output depends only on the data, so identical inputs give identical files.
"""

from __future__ import annotations

from html import escape

import numpy as np

WIDTH, HEIGHT = 480, 360
MARGIN = dict(left=56, right=16, top=32, bottom=44)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _num(x: float) -> str:
    return format(float(x), ".2f")


class _Frame:
    def __init__(self, xlim, ylim, title, xlabel, ylabel):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self.left, self.top = MARGIN["left"], MARGIN["top"]
        self.w = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
            f'<text x="{self.left + self.w / 2}" y="{HEIGHT - 8}" text-anchor="middle">{escape(xlabel)}</text>',
            f'<text x="14" y="{self.top + self.h / 2}" text-anchor="middle" '
            f'transform="rotate(-90 14 {self.top + self.h / 2})">{escape(ylabel)}</text>',
        ]
        self._axes()

    def px(self, x):
        return self.left + (float(x) - self.x0) / (self.x1 - self.x0) * self.w

    def py(self, y):
        return self.top + self.h - (float(y) - self.y0) / (self.y1 - self.y0) * self.h

    def _axes(self):
        b = self.top + self.h
        self.parts.append(f'<rect x="{self.left}" y="{self.top}" width="{self.w}" height="{self.h}" '
                          'fill="none" stroke="#444"/>')
        for t in np.linspace(self.x0, self.x1, 6):
            x = _num(self.px(t))
            self.parts.append(f'<line x1="{x}" y1="{b}" x2="{x}" y2="{b + 4}" stroke="#444"/>')
            self.parts.append(f'<text x="{x}" y="{b + 16}" text-anchor="middle">{t:.3g}</text>')
        for t in np.linspace(self.y0, self.y1, 6):
            y = _num(self.py(t))
            self.parts.append(f'<line x1="{self.left - 4}" y1="{y}" x2="{self.left}" y2="{y}" stroke="#444"/>')
            self.parts.append(f'<text x="{self.left - 6}" y="{y}" text-anchor="end" dy="3">{t:.3g}</text>')

    def polyline(self, xs, ys, color, dash=None, width=1.5):
        pts = " ".join(f"{_num(self.px(x))},{_num(self.py(y))}" for x, y in zip(xs, ys))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"{extra}/>')

    def vline(self, x, color, dash="4,3"):
        self.polyline([x, x], [self.y0, self.y1], color, dash)

    def legend(self, labels, colors):
        for i, (lab, col) in enumerate(zip(labels, colors)):
            y = self.top + 14 + 14 * i
            x = self.left + 8
            self.parts.append(f'<line x1="{x}" y1="{y - 4}" x2="{x + 16}" y2="{y - 4}" stroke="{col}" stroke-width="2"/>')
            self.parts.append(f'<text x="{x + 20}" y="{y}">{escape(lab)}</text>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def line_plot(series: dict, title: str = "", xlabel: str = "", ylabel: str = "",
              xlim=None, ylim=None, diagonal: bool = False) -> str:
    """``series`` maps a label to ``(xs, ys)``; optional dashed identity line."""
    allx = np.concatenate([np.asarray(v[0], float) for v in series.values()]) if series else np.zeros(1)
    ally = np.concatenate([np.asarray(v[1], float) for v in series.values()]) if series else np.zeros(1)
    xlim = xlim or (float(allx.min()), float(allx.max()))
    ylim = ylim or (float(min(0.0, ally.min())), float(max(1.0, ally.max())))
    fr = _Frame(xlim, ylim, title, xlabel, ylabel)
    if diagonal:
        lo, hi = max(xlim[0], ylim[0]), min(xlim[1], ylim[1])
        fr.polyline([lo, hi], [lo, hi], "#888", dash="4,3", width=1)
    colors = []
    for i, (label, (xs, ys)) in enumerate(series.items()):
        col = PALETTE[i % len(PALETTE)]
        colors.append(col)
        fr.polyline(xs, ys, col)
        for x, y in zip(xs, ys):
            fr.parts.append(f'<circle cx="{_num(fr.px(x))}" cy="{_num(fr.py(y))}" r="2.5" fill="{col}"/>')
    fr.legend(list(series), colors)
    return fr.render()


def scatter_plot(points, title: str = "", xlabel: str = "", ylabel: str = "", outline=None,
                 xlim=(0.0, 1.0), ylim=(0.0, 1.0), radius: float = 1.2) -> str:
    """Points ``(n, 2)``; ``outline`` is an optional closed polygon ``(m, 2)``."""
    pts = np.asarray(points, dtype=float)
    fr = _Frame(xlim, ylim, title, xlabel, ylabel)
    if outline is not None:
        ol = np.asarray(outline, dtype=float)
        fr.polyline(np.r_[ol[:, 0], ol[0, 0]], np.r_[ol[:, 1], ol[0, 1]], "#444", width=1)
    for x, y in pts:
        fr.parts.append(f'<circle cx="{_num(fr.px(x))}" cy="{_num(fr.py(y))}" r="{radius}" '
                        f'fill="{PALETTE[0]}" fill-opacity="0.5"/>')
    return fr.render()


def histogram(values, bins: int = 30, title: str = "", xlabel: str = "", markers: dict | None = None) -> str:
    """Histogram of ``values``; ``markers`` maps a label to an x position drawn as a dashed line."""
    v = np.asarray(values, dtype=float)
    counts, edges = np.histogram(v, bins=bins)
    fr = _Frame((float(edges[0]), float(edges[-1])), (0.0, float(max(counts.max(), 1))), title, xlabel, "count")
    for c, a, b in zip(counts, edges[:-1], edges[1:]):
        x, w = fr.px(a), fr.px(b) - fr.px(a)
        y = fr.py(c)
        fr.parts.append(f'<rect x="{_num(x)}" y="{_num(y)}" width="{_num(w)}" '
                        f'height="{_num(fr.py(0) - y)}" fill="{PALETTE[0]}" fill-opacity="0.6" stroke="white"/>')
    markers = markers or {}
    colors = []
    for i, (label, x) in enumerate(markers.items()):
        col = "black" if i == 0 else PALETTE[1 + (i - 1) % (len(PALETTE) - 1)]
        colors.append(col)
        fr.vline(x, col)
    fr.legend(list(markers), colors)
    return fr.render()
