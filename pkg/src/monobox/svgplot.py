"""Minimal deterministic SVG line charts: axes, decade ticks, polylines, legend.

No timestamps, no randomness, fixed float formatting, so identical inputs
produce byte-identical files and golden tests stay possible.
"""

from __future__ import annotations

import math

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
DASHES = ("", "6,3", "2,2", "8,3,2,3", "4,4", "1,3")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _tick_label(exp: int) -> str:
    return f"1e{exp:+d}".replace("+", "") if exp < 0 else (
        "1" if exp == 0 else f"1e{exp}")


def _decades(lo: float, hi: float):
    e0 = math.floor(math.log10(lo))
    e1 = math.ceil(math.log10(hi))
    if e1 == e0:
        e1 += 1
    return list(range(e0, e1 + 1))


def loglog_chart(series, title: str, xlabel: str, ylabel: str) -> str:
    """Log-log chart of one or more (name, xs, ys) series.

    Non-positive points are dropped (they have no log coordinate); an empty
    chart still renders axes so harness output stays diffable.
    """
    cleaned = []
    for name, xs, ys in series:
        pts = [(float(x), float(y)) for x, y in zip(xs, ys)
               if x > 0.0 and y > 0.0 and math.isfinite(x) and math.isfinite(y)]
        cleaned.append((str(name), pts))

    all_pts = [pt for _, pts in cleaned for pt in pts]
    if all_pts:
        x_lo = min(p[0] for p in all_pts)
        x_hi = max(p[0] for p in all_pts)
        y_lo = min(p[1] for p in all_pts)
        y_hi = max(p[1] for p in all_pts)
    else:
        x_lo, x_hi, y_lo, y_hi = 1.0, 10.0, 1.0, 10.0

    xd = _decades(x_lo, x_hi)
    yd = _decades(y_lo, y_hi)
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(x: float) -> float:
        return MARGIN_L + plot_w * (math.log10(x) - xd[0]) / (xd[-1] - xd[0])

    def py(y: float) -> float:
        return MARGIN_T + plot_h * (1.0 - (math.log10(y) - yd[0]) / (yd[-1] - yd[0]))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" '
        f'font-family="monospace" font-size="15">{title}</text>',
    ]
    axis = (f'M {MARGIN_L} {MARGIN_T} L {MARGIN_L} {HEIGHT - MARGIN_B} '
            f'L {WIDTH - MARGIN_R} {HEIGHT - MARGIN_B}')
    parts.append(f'<path d="{axis}" stroke="black" fill="none" stroke-width="1"/>')

    for e in xd:
        x = px(10.0 ** e)
        parts.append(f'<line x1="{_fmt(x)}" y1="{MARGIN_T}" x2="{_fmt(x)}" '
                     f'y2="{HEIGHT - MARGIN_B}" stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{_fmt(x)}" y="{HEIGHT - MARGIN_B + 18}" '
                     f'text-anchor="middle" font-family="monospace" '
                     f'font-size="11">{_tick_label(e)}</text>')
    for e in yd:
        y = py(10.0 ** e)
        parts.append(f'<line x1="{MARGIN_L}" y1="{_fmt(y)}" '
                     f'x2="{WIDTH - MARGIN_R}" y2="{_fmt(y)}" '
                     f'stroke="#dddddd" stroke-width="1"/>')
        parts.append(f'<text x="{MARGIN_L - 6}" y="{_fmt(y + 4)}" '
                     f'text-anchor="end" font-family="monospace" '
                     f'font-size="11">{_tick_label(e)}</text>')

    parts.append(f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" text-anchor="middle" '
                 f'font-family="monospace" font-size="12">{xlabel}</text>')
    parts.append(f'<text x="16" y="{HEIGHT // 2}" text-anchor="middle" '
                 f'font-family="monospace" font-size="12" '
                 f'transform="rotate(-90 16 {HEIGHT // 2})">{ylabel}</text>')

    for i, (name, pts) in enumerate(cleaned):
        color = PALETTE[i % len(PALETTE)]
        dash = DASHES[i % len(DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        if pts:
            coords = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in pts)
            parts.append(f'<polyline points="{coords}" fill="none" '
                         f'stroke="{color}" stroke-width="1.5"{dash_attr}/>')
            for x, y in pts:
                parts.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" '
                             f'r="2.2" fill="{color}"/>')
        ly = MARGIN_T + 14 + 16 * i
        parts.append(f'<line x1="{MARGIN_L + 10}" y1="{ly - 4}" '
                     f'x2="{MARGIN_L + 34}" y2="{ly - 4}" stroke="{color}" '
                     f'stroke-width="1.5"{dash_attr}/>')
        parts.append(f'<text x="{MARGIN_L + 40}" y="{ly}" '
                     f'font-family="monospace" font-size="11">{name}</text>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
