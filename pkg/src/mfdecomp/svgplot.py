"""Standalone SVG line plots: no external assets, nothing beyond stdlib.

Produces the figure types the pipeline needs: log-log fluctuation
functions, h(q) with error bars, f(alpha), and log-scale spread curves.
`render_svg` returns the SVG text plus the number of points that had to be
dropped (non-finite, or non-positive on a log axis) so callers can record
the count in their run manifest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Curve", "render_svg"]

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"]

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 72, 20, 34, 56


@dataclass(eq=False)
class Curve:
    x: np.ndarray
    y: np.ndarray
    yerr: np.ndarray | None = None
    label: str = ""
    marker: bool = False


class _Scale:
    def __init__(self, lo: float, hi: float, log: bool, px0: float, px1: float):
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        self.lo, self.hi, self.log = lo, hi, log
        self.px0, self.px1 = px0, px1

    def __call__(self, v: float) -> float:
        t = math.log10(v) if self.log else v
        return self.px0 + (t - self.lo) / (self.hi - self.lo) * (self.px1 - self.px0)

    def ticks(self) -> list[float]:
        if self.log:
            lo, hi = math.floor(self.lo), math.ceil(self.hi)
            step = max(1, int(math.ceil((hi - lo) / 8)))
            return [10.0**e for e in range(int(lo), int(hi) + 1, step)]
        span = self.hi - self.lo
        raw = span / 5
        mag = 10.0 ** math.floor(math.log10(raw))
        step = min(s for s in (mag, 2 * mag, 2.5 * mag, 5 * mag, 10 * mag) if s >= raw)
        first = math.ceil(self.lo / step) * step
        out = []
        t = first
        while t <= self.hi + 1e-9 * span:
            out.append(0.0 if abs(t) < 1e-12 * span else t)
            t += step
        return out


def _finite_mask(c: Curve, xlog: bool, ylog: bool) -> np.ndarray:
    x = np.asarray(c.x, dtype=float)
    y = np.asarray(c.y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    if xlog:
        ok &= x > 0
    if ylog:
        ok &= y > 0
    return ok


def render_svg(
    curves,
    xlabel: str,
    ylabel: str,
    xlog: bool = False,
    ylog: bool = False,
    title: str | None = None,
) -> tuple[str, int]:
    """Render curves into a self-contained SVG string.

    Returns (svg_text, dropped_point_count).
    """
    if not curves:
        raise ValueError("no curves to plot")
    dropped = 0
    xs, ys = [], []
    masks = []
    for c in curves:
        ok = _finite_mask(c, xlog, ylog)
        dropped += int(np.count_nonzero(~ok))
        masks.append(ok)
        if np.any(ok):
            xs.append(np.asarray(c.x, float)[ok])
            y = np.asarray(c.y, float)[ok]
            ys.append(y)
            if c.yerr is not None and not ylog:
                e = np.asarray(c.yerr, float)[ok]
                ys.extend([y - e, y + e])
    if not xs:
        xs, ys = [np.array([1.0])], [np.array([1.0])]
    allx = np.concatenate(xs)
    ally = np.concatenate(ys)
    sx = _Scale(float(allx.min()), float(allx.max()), xlog, _ML, _W - _MR)
    sy = _Scale(float(ally.min()), float(ally.max()), ylog, _H - _MB, _MT)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        f'fill="none" stroke="black"/>',
    ]
    if title:
        parts.append(f'<text x="{_W / 2:.0f}" y="20" text-anchor="middle">{_esc(title)}</text>')

    for t in sx.ticks():
        px = sx(t)
        if not _ML - 0.5 <= px <= _W - _MR + 0.5:
            continue
        parts.append(f'<line x1="{px:.1f}" y1="{_H - _MB}" x2="{px:.1f}" y2="{_H - _MB + 5}" stroke="black"/>')
        parts.append(f'<text x="{px:.1f}" y="{_H - _MB + 18}" text-anchor="middle">{t:g}</text>')
    for t in sy.ticks():
        py = sy(t)
        if not _MT - 0.5 <= py <= _H - _MB + 0.5:
            continue
        parts.append(f'<line x1="{_ML - 5}" y1="{py:.1f}" x2="{_ML}" y2="{py:.1f}" stroke="black"/>')
        parts.append(f'<text x="{_ML - 8}" y="{py + 4:.1f}" text-anchor="end">{t:g}</text>')
    scale_note = lambda log: " (log scale)" if log else ""  # noqa: E731
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2:.0f}" y="{_H - 16}" text-anchor="middle">'
        f"{_esc(xlabel + scale_note(xlog))}</text>"
    )
    parts.append(
        f'<text x="18" y="{(_MT + _H - _MB) / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(_MT + _H - _MB) / 2:.0f})">{_esc(ylabel + scale_note(ylog))}</text>'
    )

    for idx, (c, ok) in enumerate(zip(curves, masks)):
        color = _COLORS[idx % len(_COLORS)]
        x = np.asarray(c.x, float)
        y = np.asarray(c.y, float)
        segments = _runs(ok)
        for a, b in segments:
            pts = " ".join(f"{sx(x[i]):.2f},{sy(y[i]):.2f}" for i in range(a, b))
            if b - a == 1:
                parts.append(f'<circle cx="{sx(x[a]):.2f}" cy="{sy(y[a]):.2f}" r="3" fill="{color}"/>')
            else:
                parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.2"/>')
        if c.marker:
            for i in np.flatnonzero(ok):
                parts.append(f'<circle cx="{sx(x[i]):.2f}" cy="{sy(y[i]):.2f}" r="2.5" fill="{color}"/>')
        if c.yerr is not None:
            e = np.asarray(c.yerr, float)
            for i in np.flatnonzero(ok):
                y0, y1 = y[i] - e[i], y[i] + e[i]
                if ylog:
                    y0 = max(y0, 1e-300)
                    if y0 <= 0:
                        continue
                px, p0, p1 = sx(x[i]), sy(y0), sy(y1)
                parts.append(f'<line x1="{px:.2f}" y1="{p0:.2f}" x2="{px:.2f}" y2="{p1:.2f}" stroke="{color}"/>')
                parts.append(f'<line x1="{px - 3:.2f}" y1="{p0:.2f}" x2="{px + 3:.2f}" y2="{p0:.2f}" stroke="{color}"/>')
                parts.append(f'<line x1="{px - 3:.2f}" y1="{p1:.2f}" x2="{px + 3:.2f}" y2="{p1:.2f}" stroke="{color}"/>')

    labeled = [c for c in curves if c.label]
    if labeled:
        for j, c in enumerate(labeled):
            color = _COLORS[curves.index(c) % len(_COLORS)]
            ly = _MT + 14 + 16 * j
            parts.append(f'<line x1="{_W - _MR - 120}" y1="{ly - 4}" x2="{_W - _MR - 100}" y2="{ly - 4}" '
                         f'stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{_W - _MR - 94}" y="{ly}">{_esc(c.label)}</text>')

    parts.append("</svg>")
    return "\n".join(parts), dropped


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Contiguous index runs of True in mask (polyline segments between gaps)."""
    out = []
    start = None
    for i, flag in enumerate(mask):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            out.append((start, i))
            start = None
    if start is not None:
        out.append((start, len(mask)))
    return out


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
