"""Minimal deterministic SVG line charts.

Hand-rolled on purpose: byte-identical output for identical input (no
timestamps, no generated ids), which the reporting tests rely on.  Each chart
embeds a ``data-range`` comment recording the data bounding box so emitted
files can be checked without a real SVG parser.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

__all__ = ["line_chart"]

_WIDTH, _HEIGHT = 640, 420
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 28, 46
_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _fmt(v: float) -> str:
    """Fixed-notation, trailing-zero-free coordinate formatting."""
    s = f"{v:.2f}"
    s = s.rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    return [10.0 ** e for e in range(lo_e, hi_e + 1)
            if lo <= 10.0 ** e <= hi * (1 + 1e-12)]


class _Axis:
    def __init__(self, lo: float, hi: float, pix_lo: float, pix_hi: float,
                 log: bool):
        if log:
            lo = max(lo, 1e-300)
            hi = max(hi, lo * 10.0)
        if hi <= lo:
            hi = lo + 1.0
        self.lo, self.hi, self.log = lo, hi, log
        self.pix_lo, self.pix_hi = pix_lo, pix_hi

    def to_pix(self, v: float) -> float:
        if self.log:
            v = max(v, self.lo)
            frac = (math.log10(v) - math.log10(self.lo)) / \
                (math.log10(self.hi) - math.log10(self.lo))
        else:
            frac = (v - self.lo) / (self.hi - self.lo)
        return self.pix_lo + frac * (self.pix_hi - self.pix_lo)

    def ticks(self) -> list[float]:
        return _log_ticks(self.lo, self.hi) if self.log \
            else _nice_ticks(self.lo, self.hi)


def _tick_label(v: float) -> str:
    if v != 0 and (abs(v) >= 1e5 or abs(v) < 1e-3):
        return f"{v:.0e}"
    return _fmt(v)


def line_chart(series: Sequence[dict], title: str = "", xlabel: str = "",
               ylabel: str = "", x_log: bool = False, y_log: bool = False,
               path: Optional[str] = None) -> str:
    """Render line series (dicts with x, y, optional y_lo/y_hi band and
    label) to an SVG string; optionally write it to ``path``."""
    xs, ys = [], []
    for s in series:
        xs.extend(float(v) for v in s["x"])
        ys.extend(float(v) for v in s["y"])
        for key in ("y_lo", "y_hi"):
            if key in s and s[key] is not None:
                ys.extend(float(v) for v in s[key])
    have_data = bool(xs)
    if have_data:
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
        if not y_log:
            pad = 0.05 * (y1 - y0 or abs(y1) or 1.0)
            y0, y1 = y0 - pad, y1 + pad
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    xa = _Axis(x0, x1, _MARGIN_L, _WIDTH - _MARGIN_R, x_log)
    ya = _Axis(y0, y1, _HEIGHT - _MARGIN_B, _MARGIN_T, y_log)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f"<!-- data-range {_fmt(x0)} {_fmt(x1)} {_fmt(y0)} {_fmt(y1)} -->",
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
    ]
    # frame
    fl, fr = _MARGIN_L, _WIDTH - _MARGIN_R
    ft, fb = _MARGIN_T, _HEIGHT - _MARGIN_B
    parts.append(f'<rect x="{fl}" y="{ft}" width="{fr - fl}" '
                 f'height="{fb - ft}" fill="none" stroke="#333"/>')
    for t in xa.ticks():
        px = _fmt(xa.to_pix(t))
        parts.append(f'<line x1="{px}" y1="{fb}" x2="{px}" y2="{fb + 4}" '
                     f'stroke="#333"/>')
        parts.append(f'<text x="{px}" y="{fb + 16}" font-size="10" '
                     f'text-anchor="middle" font-family="sans-serif">'
                     f'{_tick_label(t)}</text>')
    for t in ya.ticks():
        py = _fmt(ya.to_pix(t))
        parts.append(f'<line x1="{fl - 4}" y1="{py}" x2="{fl}" y2="{py}" '
                     f'stroke="#333"/>')
        parts.append(f'<text x="{fl - 6}" y="{py}" font-size="10" '
                     f'text-anchor="end" dominant-baseline="middle" '
                     f'font-family="sans-serif">{_tick_label(t)}</text>')
    if title:
        parts.append(f'<text x="{(fl + fr) / 2:.0f}" y="18" font-size="13" '
                     f'text-anchor="middle" font-family="sans-serif">'
                     f'{title}</text>')
    if xlabel:
        parts.append(f'<text x="{(fl + fr) / 2:.0f}" y="{_HEIGHT - 10}" '
                     f'font-size="11" text-anchor="middle" '
                     f'font-family="sans-serif">{xlabel}</text>')
    if ylabel:
        parts.append(f'<text x="14" y="{(ft + fb) / 2:.0f}" font-size="11" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'transform="rotate(-90 14 {(ft + fb) / 2:.0f})">'
                     f'{ylabel}</text>')

    for i, s in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        sx = [xa.to_pix(float(v)) for v in s["x"]]
        if s.get("y_lo") is not None and s.get("y_hi") is not None:
            hi_pts = [f"{_fmt(px)},{_fmt(ya.to_pix(float(v)))}"
                      for px, v in zip(sx, s["y_hi"])]
            lo_pts = [f"{_fmt(px)},{_fmt(ya.to_pix(float(v)))}"
                      for px, v in zip(reversed(sx), reversed(list(s["y_lo"])))]
            parts.append(f'<polygon points="{" ".join(hi_pts + lo_pts)}" '
                         f'fill="{color}" opacity="0.15"/>')
        pts = " ".join(f"{_fmt(px)},{_fmt(ya.to_pix(float(v)))}"
                       for px, v in zip(sx, s["y"]))
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        if s.get("label"):
            ly = ft + 14 + 14 * i
            parts.append(f'<line x1="{fr - 120}" y1="{ly}" x2="{fr - 100}" '
                         f'y2="{ly}" stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{fr - 95}" y="{ly + 3}" font-size="10" '
                         f'font-family="sans-serif">{s["label"]}</text>')
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(svg)
    return svg
