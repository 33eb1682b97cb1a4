"""Minimal deterministic SVG plots of coefficient functions.

Hand-rolled SVG 1.1 with polylines, axes, and a legend: no timestamps or
generated ids, so identical inputs produce identical bytes.  Styling follows
the usual comparison convention: the true coefficient as a solid black line,
the plain-lasso estimate as blue squares, the adaptive estimate as a red
dashed line.
"""

from __future__ import annotations

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 20, 45

STYLES = {
    "true": {"label": "true", "color": "#000000", "kind": "line", "dash": None},
    "fsl": {"label": "FSL", "color": "#1f4fbf", "kind": "squares", "dash": None},
    "afsl": {"label": "AFSL", "color": "#c02020", "kind": "line", "dash": "7,4"},
}


def _fmt(v) -> str:
    return format(float(v), ".6g")


def _scale(vals, lo, hi, out_lo, out_hi):
    span = hi - lo
    if span == 0:
        span = 1.0
    return out_lo + (np.asarray(vals, dtype=float) - lo) * (out_hi - out_lo) / span


def svg_curve_plot(grid, curves, title="") -> str:
    """Render named curves over a common grid as an SVG document string.

    ``curves`` maps a style key from :data:`STYLES` to a value array of the
    same length as ``grid``.
    """
    grid = np.asarray(grid, dtype=float)
    if not curves:
        raise ValueError("nothing to plot")
    allvals = np.concatenate([np.asarray(v, dtype=float) for v in curves.values()])
    ylo, yhi = float(np.min(allvals)), float(np.max(allvals))
    if ylo == yhi:
        ylo, yhi = ylo - 1.0, yhi + 1.0
    pad = 0.05 * (yhi - ylo)
    ylo, yhi = ylo - pad, yhi + pad
    xlo, xhi = float(grid[0]), float(grid[-1])

    xs = _scale(grid, xlo, xhi, MARGIN_L, WIDTH - MARGIN_R)

    def ys(vals):
        return _scale(vals, ylo, yhi, HEIGHT - MARGIN_B, MARGIN_T)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
    ]
    # axes
    x0, y0 = MARGIN_L, HEIGHT - MARGIN_B
    x1, y1 = WIDTH - MARGIN_R, MARGIN_T
    parts.append(
        f'<polyline points="{x0},{y1} {x0},{y0} {x1},{y0}" fill="none" '
        'stroke="#444444" stroke-width="1"/>'
    )
    for frac in (0.0, 0.5, 1.0):
        gx = xlo + frac * (xhi - xlo)
        px = _fmt(_scale([gx], xlo, xhi, MARGIN_L, WIDTH - MARGIN_R)[0])
        parts.append(
            f'<text x="{px}" y="{HEIGHT - MARGIN_B + 18}" font-size="11" '
            f'font-family="monospace" text-anchor="middle">{_fmt(gx)}</text>'
        )
        gy = ylo + frac * (yhi - ylo)
        py = _fmt(ys([gy])[0])
        parts.append(
            f'<text x="{MARGIN_L - 6}" y="{py}" font-size="11" font-family="monospace" '
            f'text-anchor="end" dominant-baseline="middle">{_fmt(gy)}</text>'
        )
    if title:
        parts.append(
            f'<text x="{WIDTH // 2}" y="14" font-size="13" font-family="monospace" '
            f'text-anchor="middle">{title}</text>'
        )
    legend_y = MARGIN_T + 8
    for key, vals in curves.items():
        style = STYLES[key]
        py = ys(vals)
        if style["kind"] == "squares":
            for px, pv in zip(xs, py):
                parts.append(
                    f'<rect x="{_fmt(px - 2.5)}" y="{_fmt(pv - 2.5)}" width="5" height="5" '
                    f'fill="{style["color"]}"/>'
                )
        else:
            points = " ".join(f"{_fmt(px)},{_fmt(pv)}" for px, pv in zip(xs, py))
            dash = f' stroke-dasharray="{style["dash"]}"' if style["dash"] else ""
            parts.append(
                f'<polyline points="{points}" fill="none" stroke="{style["color"]}" '
                f'stroke-width="1.8"{dash}/>'
            )
        lx = WIDTH - MARGIN_R - 130
        if style["kind"] == "squares":
            parts.append(
                f'<rect x="{lx}" y="{legend_y - 4}" width="5" height="5" fill="{style["color"]}"/>'
            )
        else:
            dash = f' stroke-dasharray="{style["dash"]}"' if style["dash"] else ""
            parts.append(
                f'<line x1="{lx - 6}" y1="{legend_y}" x2="{lx + 12}" y2="{legend_y}" '
                f'stroke="{style["color"]}" stroke-width="1.8"{dash}/>'
            )
        parts.append(
            f'<text x="{lx + 18}" y="{legend_y + 4}" font-size="11" '
            f'font-family="monospace">{style["label"]}</text>'
        )
        legend_y += 16
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_coefficient_svg(path, grid, curves, title="") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg_curve_plot(grid, curves, title))
