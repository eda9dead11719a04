"""Minimal stroke font for etched chip labels.

Each glyph is a list of line strokes on a unit cell (x in [0, 0.7], y in
[0, 1]); rendering turns every stroke into an etched quad of the requested
stroke width, with square caps so joints close.  Uppercase letters, digits,
dash, dot, and space only; text is uppercased on render.
"""

from __future__ import annotations

import math

import numpy as np

W = 0.7  # glyph width in cell units

GLYPHS: dict[str, list[tuple[tuple[float, float], tuple[float, float]]]] = {
    "0": [((0, 0), (W, 0)), ((W, 0), (W, 1)), ((W, 1), (0, 1)), ((0, 1), (0, 0))],
    "1": [((0.35, 0), (0.35, 1)), ((0.15, 0.8), (0.35, 1)), ((0.15, 0), (0.55, 0))],
    "2": [((0, 1), (W, 1)), ((W, 1), (W, 0.5)), ((W, 0.5), (0, 0.5)), ((0, 0.5), (0, 0)), ((0, 0), (W, 0))],
    "3": [((0, 1), (W, 1)), ((W, 1), (W, 0)), ((W, 0), (0, 0)), ((0.25, 0.5), (W, 0.5))],
    "4": [((0, 1), (0, 0.5)), ((0, 0.5), (W, 0.5)), ((W, 1), (W, 0))],
    "5": [((W, 1), (0, 1)), ((0, 1), (0, 0.5)), ((0, 0.5), (W, 0.5)), ((W, 0.5), (W, 0)), ((W, 0), (0, 0))],
    "6": [((W, 1), (0, 1)), ((0, 1), (0, 0)), ((0, 0), (W, 0)), ((W, 0), (W, 0.5)), ((W, 0.5), (0, 0.5))],
    "7": [((0, 1), (W, 1)), ((W, 1), (0.2, 0))],
    "8": [((0, 0), (W, 0)), ((W, 0), (W, 1)), ((W, 1), (0, 1)), ((0, 1), (0, 0)), ((0, 0.5), (W, 0.5))],
    "9": [((W, 0.5), (0, 0.5)), ((0, 0.5), (0, 1)), ((0, 1), (W, 1)), ((W, 1), (W, 0))],
    "A": [((0, 0), (0, 1)), ((W, 0), (W, 1)), ((0, 1), (W, 1)), ((0, 0.5), (W, 0.5))],
    "B": [((0, 0), (0, 1)), ((0, 1), (0.6, 1)), ((0.6, 1), (0.6, 0.5)), ((0, 0.5), (W, 0.5)), ((W, 0.5), (W, 0)), ((W, 0), (0, 0))],
    "C": [((W, 1), (0, 1)), ((0, 1), (0, 0)), ((0, 0), (W, 0))],
    "D": [((0, 0), (0, 1)), ((0, 1), (0.5, 1)), ((0.5, 1), (W, 0.75)), ((W, 0.75), (W, 0.25)), ((W, 0.25), (0.5, 0)), ((0.5, 0), (0, 0))],
    "E": [((W, 1), (0, 1)), ((0, 1), (0, 0)), ((0, 0), (W, 0)), ((0, 0.5), (0.55, 0.5))],
    "F": [((W, 1), (0, 1)), ((0, 1), (0, 0)), ((0, 0.5), (0.55, 0.5))],
    "G": [((W, 1), (0, 1)), ((0, 1), (0, 0)), ((0, 0), (W, 0)), ((W, 0), (W, 0.45)), ((W, 0.45), (0.4, 0.45))],
    "H": [((0, 0), (0, 1)), ((W, 0), (W, 1)), ((0, 0.5), (W, 0.5))],
    "I": [((0.35, 0), (0.35, 1)), ((0.1, 1), (0.6, 1)), ((0.1, 0), (0.6, 0))],
    "J": [((W, 1), (W, 0)), ((W, 0), (0, 0)), ((0, 0), (0, 0.3))],
    "K": [((0, 0), (0, 1)), ((0, 0.5), (W, 1)), ((0, 0.5), (W, 0))],
    "L": [((0, 1), (0, 0)), ((0, 0), (W, 0))],
    "M": [((0, 0), (0, 1)), ((0, 1), (0.35, 0.5)), ((0.35, 0.5), (W, 1)), ((W, 1), (W, 0))],
    "N": [((0, 0), (0, 1)), ((0, 1), (W, 0)), ((W, 0), (W, 1))],
    "O": [((0, 0), (W, 0)), ((W, 0), (W, 1)), ((W, 1), (0, 1)), ((0, 1), (0, 0))],
    "P": [((0, 0), (0, 1)), ((0, 1), (W, 1)), ((W, 1), (W, 0.5)), ((W, 0.5), (0, 0.5))],
    "Q": [((0, 0), (W, 0)), ((W, 0), (W, 1)), ((W, 1), (0, 1)), ((0, 1), (0, 0)), ((0.45, 0.25), (W, -0.08))],
    "R": [((0, 0), (0, 1)), ((0, 1), (W, 1)), ((W, 1), (W, 0.5)), ((W, 0.5), (0, 0.5)), ((0.25, 0.5), (W, 0))],
    "S": [((W, 1), (0, 1)), ((0, 1), (0, 0.5)), ((0, 0.5), (W, 0.5)), ((W, 0.5), (W, 0)), ((W, 0), (0, 0))],
    "T": [((0, 1), (W, 1)), ((0.35, 1), (0.35, 0))],
    "U": [((0, 1), (0, 0)), ((0, 0), (W, 0)), ((W, 0), (W, 1))],
    "V": [((0, 1), (0.35, 0)), ((0.35, 0), (W, 1))],
    "W": [((0, 1), (0.15, 0)), ((0.15, 0), (0.35, 0.6)), ((0.35, 0.6), (0.55, 0)), ((0.55, 0), (W, 1))],
    "X": [((0, 0), (W, 1)), ((0, 1), (W, 0))],
    "Y": [((0, 1), (0.35, 0.5)), ((W, 1), (0.35, 0.5)), ((0.35, 0.5), (0.35, 0))],
    "Z": [((0, 1), (W, 1)), ((W, 1), (0, 0)), ((0, 0), (W, 0))],
    "-": [((0.1, 0.5), (0.6, 0.5))],
    ".": [((0.3, 0), (0.42, 0.12))],
    " ": [],
}

#: Horizontal advance between glyph origins, in cell units.
ADVANCE = 1.0


def text_polygons(text, x_um, y_um, height_um, stroke_frac=0.12, group="label"):
    """Etched stroke quads for a text string anchored at its lower-left corner."""
    from cpwkit.layout.polygons import Polygon

    stroke = stroke_frac * height_um
    polys = []
    for idx, ch in enumerate(text.upper()):
        if ch not in GLYPHS:
            raise ValueError(f"glyph {ch!r} not available in the stroke font")
        ox = x_um + idx * ADVANCE * height_um
        for (x1, y1), (x2, y2) in GLYPHS[ch]:
            p0 = np.array([ox + x1 * height_um, y_um + y1 * height_um])
            p1 = np.array([ox + x2 * height_um, y_um + y2 * height_um])
            d = p1 - p0
            norm = math.hypot(*d)
            if norm == 0:
                continue
            d = d / norm
            n = np.array([-d[1], d[0]])
            half = stroke / 2.0
            a = p0 - d * half
            b = p1 + d * half
            pts = np.array([a + n * half, b + n * half, b - n * half, a - n * half])
            polys.append(Polygon(pts, group=group, kind="label"))
    return polys


def text_width_um(text: str, height_um: float) -> float:
    return len(text) * ADVANCE * height_um
