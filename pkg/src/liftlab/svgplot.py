"""Minimal SVG emission for line charts, body outlines, and flow profiles.
No plotting dependency; output is deterministic text."""

from __future__ import annotations

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, n: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    raw = np.linspace(lo, hi, n)
    return [float(t) for t in raw]


def line_chart(series, title: str = "", xlabel: str = "", ylabel: str = "",
               width: int = 640, height: int = 420) -> str:
    """Polyline chart; series is a list of (x array, y array, label)."""
    ml, mr, mt, mb = 64, 16, 36, 48
    iw, ih = width - ml - mr, height - mt - mb
    xs = np.concatenate([np.asarray(s[0], dtype=float) for s in series])
    ys = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    y0, y1 = float(np.min(ys)), float(np.max(ys))
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def px(x):
        return ml + (x - x0) / (x1 - x0) * iw

    def py(y):
        return mt + (y1 - y) / (y1 - y0) * ih

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           '<rect width="100%" height="100%" fill="white"/>']
    if title:
        out.append(f'<text x="{width / 2}" y="20" text-anchor="middle" '
                   f'font-size="14" font-family="sans-serif">{title}</text>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{iw}" height="{ih}" '
               'fill="none" stroke="#333" stroke-width="1"/>')
    for t in _ticks(x0, x1):
        X = px(t)
        out.append(f'<line x1="{_fmt(X)}" y1="{mt + ih}" x2="{_fmt(X)}" '
                   f'y2="{mt + ih + 5}" stroke="#333"/>')
        out.append(f'<text x="{_fmt(X)}" y="{mt + ih + 18}" text-anchor="middle" '
                   f'font-size="10" font-family="sans-serif">{_fmt(t)}</text>')
    for t in _ticks(y0, y1):
        Y = py(t)
        out.append(f'<line x1="{ml - 5}" y1="{_fmt(Y)}" x2="{ml}" y2="{_fmt(Y)}" '
                   'stroke="#333"/>')
        out.append(f'<text x="{ml - 8}" y="{_fmt(Y + 3)}" text-anchor="end" '
                   f'font-size="10" font-family="sans-serif">{_fmt(t)}</text>')
    if xlabel:
        out.append(f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" '
                   f'font-size="12" font-family="sans-serif">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{height / 2}" text-anchor="middle" '
                   f'font-size="12" font-family="sans-serif" '
                   f'transform="rotate(-90 14 {height / 2})">{ylabel}</text>')
    if y0 < 0.0 < y1:
        Y = py(0.0)
        out.append(f'<line x1="{ml}" y1="{_fmt(Y)}" x2="{ml + iw}" y2="{_fmt(Y)}" '
                   'stroke="#bbb" stroke-dasharray="4 3"/>')
    for i, (sx, sy, label) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{_fmt(px(float(x)))},{_fmt(py(float(y)))}"
                       for x, y in zip(sx, sy))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                   'stroke-width="1.5"/>')
        if label:
            out.append(f'<text x="{ml + 10}" y="{mt + 16 + 14 * i}" font-size="11" '
                       f'font-family="sans-serif" fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out)


def shape_plot(shapes, channel=None, confinement=None, title: str = "",
               width: int = 640) -> str:
    """Outline plot of body polygons, optionally with the channel and the
    confinement rectangle; shapes is a list of (vertices array, label)."""
    if channel is not None:
        x1, y1 = channel.L, channel.H
        x0, y0 = -x1, -y1
    else:
        allv = np.vstack([np.asarray(s[0]) for s in shapes])
        x0, y0 = allv.min(axis=0) - 0.1
        x1, y1 = allv.max(axis=0) + 0.1
    m = 20
    scale = (width - 2 * m) / (x1 - x0)
    height = int((y1 - y0) * scale) + 2 * m + (24 if title else 0)
    top = m + (24 if title else 0)

    def px(x):
        return m + (x - x0) * scale

    def py(y):
        return top + (y1 - y) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           '<rect width="100%" height="100%" fill="white"/>']
    if title:
        out.append(f'<text x="{width / 2}" y="18" text-anchor="middle" '
                   f'font-size="14" font-family="sans-serif">{title}</text>')

    def rect_path(L, H, color, dash=""):
        pts = [(-L, -H), (L, -H), (L, H), (-L, H)]
        s = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in pts)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polygon points="{s}" fill="none" stroke="{color}" '
                   f'stroke-width="1"{extra}/>')

    if channel is not None:
        rect_path(channel.L, channel.H, "#333")
    if confinement is not None:
        rect_path(confinement.L, confinement.H, "#999", dash="5 4")
    for i, (verts, label) in enumerate(shapes):
        color = _COLORS[i % len(_COLORS)]
        s = " ".join(f"{_fmt(px(float(x)))},{_fmt(py(float(y)))}" for x, y in verts)
        out.append(f'<polygon points="{s}" fill="{color}" fill-opacity="0.15" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        if label:
            out.append(f'<text x="{m + 6}" y="{top + 14 + 14 * i}" font-size="11" '
                       f'font-family="sans-serif" fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out)


def profile_plot(profiles, title: str = "flow profiles") -> str:
    """Flow profiles drawn as value vs height; profiles is a list of
    (FlowProfile, label)."""
    series = [(p.values, p.grid, label) for p, label in profiles]
    return line_chart(series, title=title, xlabel="velocity", ylabel="x2")
