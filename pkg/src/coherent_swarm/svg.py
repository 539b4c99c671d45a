"""Minimal static SVG line charts with deterministic output."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 400
_L, _R, _T, _B = 70, 150, 40, 50


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [round(start + i * step, 12) for i in range(int((hi - start) / step + 1e-9) + 1)]


def line_chart(series, title: str, xlabel: str, ylabel: str, *, ylim=None) -> str:
    """Render ``{label: (x, y)}`` as polylines. Non-finite points break a line."""
    xs = np.concatenate([np.asarray(x, float) for x, _ in series.values()])
    ys = np.concatenate([np.asarray(y, float) for _, y in series.values()])
    xs, ys = xs[np.isfinite(xs)], ys[np.isfinite(ys)]
    x0, x1 = (float(xs.min()), float(xs.max())) if xs.size else (0.0, 1.0)
    y0, y1 = ylim if ylim else ((float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0))
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = _W - _L - _R, _H - _T - _B

    def px(v):
        return _L + (v - x0) / (x1 - x0) * pw

    def py(v):
        return _T + ph - (min(max(v, y0), y1) - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<rect x="{_L}" y="{_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{px(t):.1f}" y="{_T + ph + 15}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{_L - 5}" y="{py(t) + 4:.1f}" text-anchor="end">{t:g}</text>')
        out.append(f'<line x1="{_L}" x2="{_L + pw}" y1="{py(t):.1f}" y2="{py(t):.1f}" stroke="#ddd"/>')
    out.append(f'<text x="{_L + pw / 2:.1f}" y="{_H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="15" y="{_T + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 15 {_T + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for i, (label, (x, y)) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        seg: list[str] = []
        for a, b in zip(np.asarray(x, float), np.asarray(y, float)):
            if math.isfinite(a) and math.isfinite(b):
                seg.append(f"{px(a):.2f},{py(b):.2f}")
            elif seg:
                out.append(f'<polyline fill="none" stroke="{color}" points="{" ".join(seg)}"/>')
                seg = []
        if seg:
            out.append(f'<polyline fill="none" stroke="{color}" points="{" ".join(seg)}"/>')
        ly = _T + 15 + 18 * i
        out.append(f'<line x1="{_L + pw + 10}" x2="{_L + pw + 30}" y1="{ly}" y2="{ly}" stroke="{color}"/>')
        out.append(f'<text x="{_L + pw + 35}" y="{ly + 4}">{escape(str(label))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
