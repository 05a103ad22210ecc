"""Static SVG plots written by hand (no plotting backend, byte-stable output)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=70, right=170, top=30, bottom=55)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"]


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    yerr: np.ndarray | None = None
    dashed: bool = False
    markers: bool = True


class _Axis:
    def __init__(self, lo: float, hi: float, log: bool, p0: float, p1: float):
        if log:
            lo, hi = math.log10(lo), math.log10(hi)
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        pad = 0.05 * (hi - lo)
        self.lo, self.hi, self.log = lo - pad, hi + pad, log
        self.p0, self.p1 = p0, p1

    def __call__(self, v: float) -> float:
        u = math.log10(v) if self.log else v
        return self.p0 + (u - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)

    def ticks(self) -> list[float]:
        if self.log:
            return [10.0**e for e in range(math.ceil(self.lo), math.floor(self.hi) + 1)]
        step = 10 ** math.floor(math.log10((self.hi - self.lo) / 5))
        for m in (1, 2, 5, 10):
            if (self.hi - self.lo) / (m * step) <= 7:
                step *= m
                break
        first = math.ceil(self.lo / step) * step
        return [first + i * step for i in range(int((self.hi - first) / step) + 1)]


def _num(v: float) -> str:
    return f"{v:.2f}"


def _tick_label(v: float, log: bool) -> str:
    if log:
        return f"1e{int(round(math.log10(v)))}"
    return f"{v:g}"


def render_svg(series: Sequence[Series], xlabel: str, ylabel: str, title: str,
               logx: bool = False, logy: bool = False) -> str:
    """A line chart with optional error bars; non-positive values are dropped on log axes."""
    pts = []
    for s in series:
        keep = np.isfinite(s.x) & np.isfinite(s.y)
        if logx:
            keep &= s.x > 0
        if logy:
            keep &= s.y > 0
        pts.append(keep)
    xs = np.concatenate([s.x[k] for s, k in zip(series, pts)]) if series else np.array([])
    ys = np.concatenate([s.y[k] for s, k in zip(series, pts)]) if series else np.array([])
    if xs.size == 0:
        xs, ys = np.array([1.0, 10.0]), np.array([1.0, 10.0])
    ax = _Axis(xs.min(), xs.max(), logx, MARGIN["left"], WIDTH - MARGIN["right"])
    ay = _Axis(ys.min(), ys.max(), logy, HEIGHT - MARGIN["bottom"], MARGIN["top"])

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2 - MARGIN["right"] / 2:.0f}" y="18" text-anchor="middle">{escape(title)}</text>',
    ]
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
    out.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="black"/>')
    for t in ax.ticks():
        px = ax(t)
        if x0 - 0.5 <= px <= x1 + 0.5:
            out.append(f'<line x1="{_num(px)}" y1="{y0}" x2="{_num(px)}" y2="{y0 + 5}" stroke="black"/>')
            out.append(f'<text x="{_num(px)}" y="{y0 + 18}" text-anchor="middle">{_tick_label(t, logx)}</text>')
    for t in ay.ticks():
        py = ay(t)
        if y1 - 0.5 <= py <= y0 + 0.5:
            out.append(f'<line x1="{x0 - 5}" y1="{_num(py)}" x2="{x0}" y2="{_num(py)}" stroke="black"/>')
            out.append(f'<text x="{x0 - 8}" y="{_num(py + 4)}" text-anchor="end">{_tick_label(t, logy)}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.0f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text transform="translate(18 {(y0 + y1) / 2:.0f}) rotate(-90)" '
               f'text-anchor="middle">{escape(ylabel)}</text>')

    for n, (s, keep) in enumerate(zip(series, pts)):
        color = "#555555" if s.dashed else PALETTE[n % len(PALETTE)]
        dash = ' stroke-dasharray="6 4"' if s.dashed else ""
        x, y = s.x[keep], s.y[keep]
        order = np.argsort(x, kind="stable")
        x, y = x[order], y[order]
        if x.size:
            path = " ".join(f"{_num(ax(a))},{_num(ay(b))}" for a, b in zip(x, y))
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        if s.markers:
            err = None if s.yerr is None else s.yerr[keep][order]
            for i, (a, b) in enumerate(zip(x, y)):
                if err is not None and err[i] > 0:
                    lo, hi = b - err[i], b + err[i]
                    if not logy or lo > 0:
                        out.append(f'<line x1="{_num(ax(a))}" y1="{_num(ay(lo))}" x2="{_num(ax(a))}" '
                                   f'y2="{_num(ay(hi))}" stroke="{color}"/>')
                out.append(f'<circle cx="{_num(ax(a))}" cy="{_num(ay(b))}" r="3" fill="{color}"/>')
        ly = MARGIN["top"] + 14 + 18 * n
        out.append(f'<line x1="{x1 + 12}" y1="{ly - 4}" x2="{x1 + 34}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="1.5"{dash}/>')
        out.append(f'<text x="{x1 + 40}" y="{ly}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _guide(q: np.ndarray, y: np.ndarray) -> Series:
    """``c q^{-1/3}`` anchored at the smallest q of the first curve."""
    i = int(np.argmin(q))
    c = y[i] * q[i] ** (1 / 3)
    grid = np.geomspace(q.min(), q.max(), 20)
    return Series("q^-1/3", grid, c * grid ** (-1 / 3), dashed=True, markers=False)


def _label(pt) -> str:
    s = f"{pt.model.value} {pt.boundary.value} p={pt.p:g}"
    if pt.model.value == "boundary":
        s += f" tn={pt.t_noise}"
    return s


def plot_vs_q(points, path: str | Path, observable: str = "EN") -> None:
    """Observable against q on log-log axes, one curve per (series, L), with a q^-1/3 guide."""
    groups: dict = {}
    for pt in points:
        if pt.q > 0:
            groups.setdefault((_label(pt), pt.L), []).append(pt)
    series = []
    for (lab, L), pts in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        q = np.array([p.q for p in pts])
        v = np.array([p.observable(observable) for p in pts]).reshape(-1, 2)
        series.append(Series(f"{lab} L={L}", q, v[:, 0], v[:, 1]))
    withpos = [s for s in series if np.any((s.y > 0) & (s.x > 0))]
    if withpos:
        s = withpos[0]
        m = (s.y > 0) & (s.x > 0)
        series.append(_guide(s.x[m], s.y[m]))
    name = "E_N" if observable == "EN" else "I(A:B)"
    Path(path).write_text(render_svg(series, "q", name, f"{name} vs reset rate", logx=True, logy=True))


def plot_vs_l(points, path: str | Path, observable: str = "EN") -> None:
    """Observable against L, one curve per (series, q)."""
    groups: dict = {}
    for pt in points:
        groups.setdefault((_label(pt), pt.q), []).append(pt)
    series = []
    for (lab, q), pts in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        L = np.array([p.L for p in pts], dtype=float)
        v = np.array([p.observable(observable) for p in pts]).reshape(-1, 2)
        series.append(Series(f"{lab} q={q:.4g}", L, v[:, 0], v[:, 1]))
    name = "E_N" if observable == "EN" else "I(A:B)"
    Path(path).write_text(render_svg(series, "L", name, f"{name} vs system size"))
