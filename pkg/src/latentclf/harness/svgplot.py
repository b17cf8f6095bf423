"""Minimal standalone SVG line plots; no plotting dependency."""

from __future__ import annotations

import math

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#17becf", "#e377c2")

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 150, 40, 55


def _escape(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))


def line_plot(path, series: dict[str, list[tuple[float, float]]], title: str = "",
              xlabel: str = "", ylabel: str = "", log_x: bool = False,
              y_range: tuple[float, float] | None = None) -> None:
    """Write an SVG with one polyline per named series and a legend."""
    points = [p for pts in series.values() for p in pts]
    if not points:
        raise ValueError("nothing to plot")
    xs = [x for x, _ in points]
    ys = [y for _, y in points]

    def tx(x: float) -> float:
        return math.log10(x) if log_x else x

    x_lo, x_hi = min(map(tx, xs)), max(map(tx, xs))
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_range is not None:
        y_lo, y_hi = y_range
    else:
        y_lo, y_hi = min(ys), max(ys)
        if y_hi == y_lo:
            y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
        pad = 0.05 * (y_hi - y_lo)
        y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(x: float) -> float:
        return MARGIN_L + plot_w * (tx(x) - x_lo) / (x_hi - x_lo)

    def py(y: float) -> float:
        return MARGIN_T + plot_h * (1.0 - (y - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2}" y="24" text-anchor="middle" font-size="16" '
        f'font-family="sans-serif">{_escape(title)}</text>',
    ]
    axis = (f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" '
            f'y2="{HEIGHT - MARGIN_B}" stroke="black"/>'
            f'<line x1="{MARGIN_L}" y1="{HEIGHT - MARGIN_B}" x2="{WIDTH - MARGIN_R}" '
            f'y2="{HEIGHT - MARGIN_B}" stroke="black"/>')
    parts.append(axis)

    # y ticks
    for i in range(6):
        y = y_lo + i * (y_hi - y_lo) / 5
        parts.append(
            f'<line x1="{MARGIN_L - 4}" y1="{py(y):.1f}" x2="{MARGIN_L}" y2="{py(y):.1f}" '
            f'stroke="black"/>'
            f'<text x="{MARGIN_L - 8}" y="{py(y) + 4:.1f}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif">{y:.2f}</text>')
    # x ticks at the observed x values
    for x in sorted(set(xs)):
        parts.append(
            f'<line x1="{px(x):.1f}" y1="{HEIGHT - MARGIN_B}" x2="{px(x):.1f}" '
            f'y2="{HEIGHT - MARGIN_B + 4}" stroke="black"/>'
            f'<text x="{px(x):.1f}" y="{HEIGHT - MARGIN_B + 18}" text-anchor="middle" '
            f'font-size="11" font-family="sans-serif">{x:g}</text>')

    parts.append(
        f'<text x="{MARGIN_L + plot_w / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-size="13" font-family="sans-serif">{_escape(xlabel)}</text>')
    parts.append(
        f'<text x="18" y="{MARGIN_T + plot_h / 2}" text-anchor="middle" font-size="13" '
        f'font-family="sans-serif" transform="rotate(-90 18 {MARGIN_T + plot_h / 2})">'
        f'{_escape(ylabel)}</text>')

    for i, (name, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in sorted(pts))
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                     f'stroke-width="2"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="{color}"/>')
        ly = MARGIN_T + 16 + 18 * i
        lx = WIDTH - MARGIN_R + 10
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 28}" y="{ly}" font-size="12" '
                     f'font-family="sans-serif">{_escape(name)}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
