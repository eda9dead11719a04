"""Deterministic SVG rendering of the etch polygon set.

The viewBox spans the chip exactly (um coordinates); geometry is y-flipped
into SVG's downward axis inside a transform group.  Polarity only swaps the
two fill colors: "draw-etch" paints etched regions dark on a light (metal)
chip, "draw-metal" inverts.
"""

from __future__ import annotations

from cpwkit.layout.polygons import Polygon

ETCH_COLOR = "#111111"
METAL_COLOR = "#f5f5f0"


def write_svg(
    polygons: list[Polygon],
    width_um: float,
    height_um: float,
    polarity: str = "draw-etch",
    scale_bar_um: float = 1000.0,
) -> str:
    if polarity == "draw-etch":
        background, fill = METAL_COLOR, ETCH_COLOR
    elif polarity == "draw-metal":
        background, fill = ETCH_COLOR, METAL_COLOR
    else:
        raise ValueError(f"unknown polarity {polarity!r}")

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width_um:g} {height_um:g}">',
        f'<rect x="0" y="0" width="{width_um:g}" height="{height_um:g}" '
        f'fill="{background}"/>',
        f'<g transform="translate(0,{height_um:g}) scale(1,-1)" fill="{fill}" '
        'stroke="none">',
    ]
    for poly in polygons:
        coords = " ".join(f"{x:.3f},{y:.3f}" for x, y in poly.points)
        lines.append(f'<polygon points="{coords}"/>')
    lines.append("</g>")

    # Scale bar (drawn in SVG axes, lower-left corner).
    bar_y = height_um - 0.03 * height_um
    bar_x = 0.03 * width_um
    tick = 0.008 * height_um
    bar_color = ETCH_COLOR if polarity == "draw-etch" else METAL_COLOR
    lines.append(
        f'<g stroke="{bar_color}" stroke-width="{0.004 * height_um:.1f}" fill="{bar_color}">'
    )
    lines.append(
        f'<line x1="{bar_x:.1f}" y1="{bar_y:.1f}" x2="{bar_x + scale_bar_um:.1f}" y2="{bar_y:.1f}"/>'
    )
    for x in (bar_x, bar_x + scale_bar_um):
        lines.append(
            f'<line x1="{x:.1f}" y1="{bar_y - tick:.1f}" x2="{x:.1f}" y2="{bar_y + tick:.1f}"/>'
        )
    lines.append(
        f'<text x="{bar_x:.1f}" y="{bar_y - 2 * tick:.1f}" '
        f'font-family="monospace" font-size="{0.016 * height_um:.1f}" stroke="none">'
        f"{scale_bar_um / 1000:g} mm</text>"
    )
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
