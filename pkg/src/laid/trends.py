"""Least-squares trend lines and standalone SVG scatter panels."""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import FitError


@dataclass(frozen=True)
class TrendFit:
    slope: float
    intercept: float
    r_squared: float
    n: int

    def __call__(self, x):
        return self.slope * np.asarray(x, dtype=float) + self.intercept


def linear_fit(points) -> TrendFit:
    """Ordinary least squares y = slope * x + intercept with R^2 = 1 - SS_res / SS_tot.

    R^2 is defined as 0 when every y is equal.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise FitError("need at least two (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise FitError("all x values are equal")
    dy = y - y.mean()
    slope = float(dx @ dy) / sxx
    intercept = float(y.mean() - slope * x.mean())
    ss_tot = float(dy @ dy)
    if ss_tot == 0.0:
        return TrendFit(slope, intercept, 0.0, len(pts))
    resid = y - (slope * x + intercept)
    r2 = 1.0 - float(resid @ resid) / ss_tot
    return TrendFit(slope, intercept, min(max(r2, 0.0), 1.0), len(pts))


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    span = hi - lo
    raw = span / max(count - 1, 1)
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    first = np.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + step * 1e-9:
        ticks.append(round(float(t), 10))
        t += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def emit_scatter_svg(points, fit: TrendFit, x_label: str = "", y_label: str = "",
                     title: str = "", width: int = 480, height: int = 360) -> str:
    """Scatter plot with the trend line over the data's x-range and an R^2 note.

    Output is byte-deterministic for equal inputs.
    """
    pts = np.asarray(points, dtype=np.float64)
    xs, ys = pts[:, 0], pts[:, 1]
    left, right, top, bottom = 60, 20, 30, 50
    pw, ph = width - left - right, height - top - bottom
    x_lo, x_hi = float(xs.min()), float(xs.max())
    line_y = fit(np.array([x_lo, x_hi]))
    y_lo = float(min(ys.min(), line_y.min()))
    y_hi = float(max(ys.max(), line_y.max()))
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad_x, pad_y = 0.05 * (x_hi - x_lo), 0.05 * (y_hi - y_lo)
    x_lo, x_hi, y_lo, y_hi = x_lo - pad_x, x_hi + pad_x, y_lo - pad_y, y_hi + pad_y

    def sx(v):
        return left + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return top + (y_hi - v) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.2f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for t in _nice_ticks(x_lo, x_hi):
        out.append(f'<line x1="{_fmt(sx(t))}" y1="{top + ph}" x2="{_fmt(sx(t))}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(sx(t))}" y="{top + ph + 18}" text-anchor="middle" font-size="10">{t:g}</text>')
    for t in _nice_ticks(y_lo, y_hi):
        out.append(f'<line x1="{left - 5}" y1="{_fmt(sy(t))}" x2="{left}" y2="{_fmt(sy(t))}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{_fmt(sy(t) + 3)}" text-anchor="end" font-size="10">{t:g}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 10}" text-anchor="middle" font-size="12">{escape(x_label)}</text>')
    out.append(f'<text x="15" y="{top + ph / 2:.2f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 15 {top + ph / 2:.2f})">{escape(y_label)}</text>')
    for x, y in zip(xs, ys):
        out.append(f'<circle class="point" cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="3.5" fill="steelblue"/>')
    x0, x1 = float(xs.min()), float(xs.max())
    out.append(f'<line class="trend" x1="{_fmt(sx(x0))}" y1="{_fmt(sy(fit(x0)))}" '
               f'x2="{_fmt(sx(x1))}" y2="{_fmt(sy(fit(x1)))}" stroke="crimson" stroke-width="2"/>')
    out.append(f'<text x="{left + pw - 4}" y="{top + 14}" text-anchor="end" font-size="12">'
               f'y = {fit.slope:.4g}x {"-" if fit.intercept < 0 else "+"} {abs(fit.intercept):.4g}, '
               f'R² = {fit.r_squared:.2f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
