"""Etch-polygon generation: CPW bands, terminations, launchers, full chips.

Polygons represent etched (metal-removed) regions.  Every CPW path becomes
two gap bands (one quad or annular strip per segment per side); terminations
add cap pieces.  The shorted end keeps ground continuous and only rounds the
band ends; the open end adds a gap cap ahead of the trace tip, rounds the cap
corners, and bites the trace-tip corners, so all metal corners at resonator
ends carry the fillet radius.

Pieces abut edge-to-edge but never overlap, so total etch area is the plain
sum of polygon areas.  All vertices are produced in deterministic order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cpwkit.cpw import CpwGeometry
from cpwkit.errors import DesignRuleError, GeometryConflictError
from cpwkit.layout.path import (
    ArcSegment,
    CenterlinePath,
    LineSegment,
    ResonatorDesign,
)
from cpwkit.layout.textfont import text_polygons

#: Maximum angular step when discretizing arcs (degrees).
ARC_STEP_DEG = 2.0


@dataclass
class Polygon:
    """A simple polygon: (N, 2) vertex array in um, CCW, not closed."""

    points: np.ndarray
    group: str
    kind: str = "poly"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("polygon needs an (N, 2) vertex array")
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.hypot(*(pts[1:] - pts[:-1]).T) > 1e-9
        if np.hypot(*(pts[0] - pts[-1])) <= 1e-9 and keep[-1]:
            keep[-1] = False
        pts = pts[keep]
        if pts.shape[0] < 3:
            raise ValueError("polygon needs at least 3 distinct vertices")
        if self.signed_area(pts) < 0:
            pts = pts[::-1].copy()
        self.points = pts

    @staticmethod
    def signed_area(pts: np.ndarray) -> float:
        x, y = pts[:, 0], pts[:, 1]
        return 0.5 * float(
            np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)
        )

    @property
    def area(self) -> float:
        return self.signed_area(self.points)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return (
            float(self.points[:, 0].min()),
            float(self.points[:, 1].min()),
            float(self.points[:, 0].max()),
            float(self.points[:, 1].max()),
        )


def _arc_points(center, radius, theta0, theta1, step_deg=ARC_STEP_DEG):
    sweep = theta1 - theta0
    n = max(2, int(math.ceil(abs(sweep) / math.radians(step_deg))) + 1)
    thetas = np.linspace(theta0, theta1, n)
    return np.column_stack(
        [center[0] + radius * np.cos(thetas), center[1] + radius * np.sin(thetas)]
    )


def _unit(dx, dy):
    norm = math.hypot(dx, dy)
    return dx / norm, dy / norm


def _segment_heading(segment, at_start: bool) -> tuple[float, float]:
    if isinstance(segment, LineSegment):
        return _unit(
            segment.end[0] - segment.start[0], segment.end[1] - segment.start[1]
        )
    theta = segment.theta0 if at_start else segment.theta1
    sign = 1.0 if segment.sweep > 0 else -1.0
    return (-sign * math.sin(theta), sign * math.cos(theta))


def _line_band(p0, p1, lo: float, hi: float, left: bool):
    dx, dy = _unit(p1[0] - p0[0], p1[1] - p0[1])
    nx, ny = (-dy, dx) if left else (dy, -dx)
    a = (p0[0] + lo * nx, p0[1] + lo * ny)
    b = (p1[0] + lo * nx, p1[1] + lo * ny)
    c = (p1[0] + hi * nx, p1[1] + hi * ny)
    d = (p0[0] + hi * nx, p0[1] + hi * ny)
    return np.array([a, b, c, d])


def _arc_band(seg: ArcSegment, lo: float, hi: float, left: bool, step_deg):
    ccw = seg.sweep > 0
    # For a CCW arc the center lies on the path's left; left offsets shrink
    # the radius there, and grow it for a CW arc.
    inner_side = left == ccw
    if inner_side:
        r_a, r_b = seg.radius - hi, seg.radius - lo
    else:
        r_a, r_b = seg.radius + lo, seg.radius + hi
    if r_a <= 0:
        raise DesignRuleError(
            f"band offset {hi} um exceeds arc radius {seg.radius} um"
        )
    chain_a = _arc_points(seg.center, r_a, seg.theta0, seg.theta1, step_deg)
    chain_b = _arc_points(seg.center, r_b, seg.theta1, seg.theta0, step_deg)
    return np.vstack([chain_a, chain_b])


def _nearest_angle(reference: float, angle: float) -> float:
    """Angle equivalent to `angle` within pi of `reference` (shortest sweep)."""
    while angle - reference > math.pi:
        angle -= 2 * math.pi
    while angle - reference < -math.pi:
        angle += 2 * math.pi
    return angle


def _shorted_end_caps(p0, heading, cpw: CpwGeometry, fillet: float, group: str):
    """Rounded band ends at the shorted end (metal stays continuous beyond).

    Each gap band is shortened by the fillet radius; this piece restores the
    first slab with both rear corners rounded (a half-stadium end when the
    fillet equals half the gap).
    """
    hx, hy = heading
    s2 = cpw.trace_width_um / 2.0
    g = cpw.gap_um
    f = fillet
    out = []
    for left in (True, False):
        nx, ny = (-hy, hx) if left else (hy, -hx)

        def pt(along, offset, nx=nx, ny=ny):
            return (
                p0[0] + along * hx + offset * nx,
                p0[1] + along * hy + offset * ny,
            )

        th_h_back = math.atan2(-hy, -hx)
        th_n_in = math.atan2(-ny, -nx)
        th_n_out = math.atan2(ny, nx)
        o_in = pt(f, s2 + f)
        o_out = pt(f, s2 + g - f)
        # inner corner: from the cut line (offset s2) around to the end edge
        arc_in = _arc_points(o_in, f, th_n_in, _nearest_angle(th_n_in, th_h_back))
        # outer corner: from the end edge around to the cut line (offset s2+g)
        arc_out = _arc_points(o_out, f, th_h_back, _nearest_angle(th_h_back, th_n_out))
        pts = np.vstack([arc_in, arc_out, np.array([pt(f, s2 + g), pt(f, s2)])])
        out.append(Polygon(pts, group=group, kind="short-cap"))
    return out


def _open_end_polygons(pe, heading, cpw: CpwGeometry, fillet: float, group: str):
    """Gap cap ahead of the trace tip, rounded cap corners, trace-tip bites."""
    hx, hy = heading
    s2 = cpw.trace_width_um / 2.0
    g = cpw.gap_um
    w = s2 + g
    f = fillet
    nx, ny = -hy, hx  # left normal

    def pt(along, offset):
        return (
            pe[0] + along * hx + offset * nx,
            pe[1] + along * hy + offset * ny,
        )

    th_h = math.atan2(hy, hx)
    th_n = math.atan2(ny, nx)
    th_n_back = math.atan2(-ny, -nx)

    # Cap: rectangle [0, g] x [-w, w] with both forward corners rounded.
    o_l = pt(g - f, w - f)
    o_r = pt(g - f, -(w - f))
    arc_l = _arc_points(o_l, f, th_n, _nearest_angle(th_n, th_h))
    arc_r = _arc_points(o_r, f, th_h, _nearest_angle(th_h, th_n_back))
    cap_pts = np.vstack([np.array([pt(0.0, -w), pt(0.0, w)]), arc_l, arc_r])
    polys = [Polygon(cap_pts, group=group, kind="open-cap")]

    # Trace-tip bites: quarter-round removal at the two metal tip corners.
    for side in (1.0, -1.0):
        corner = pt(0.0, side * s2)
        o = pt(-f, side * (s2 - f))
        th_tip = th_h  # tangent point on the tip face lies toward +h from o
        th_side = th_n if side > 0 else th_n_back
        arc = _arc_points(o, f, th_tip, _nearest_angle(th_tip, th_side))
        pts = np.vstack([np.array([corner]), arc])
        polys.append(Polygon(pts, group=group, kind="tip-bite"))
    return polys


def path_to_etch_polygons(
    path: CenterlinePath,
    cpw: CpwGeometry,
    group: str,
    fillet_radius_um: float = 1.5,
    start_termination: str = "short",
    end_termination: str = "open",
    arc_step_deg: float = ARC_STEP_DEG,
) -> list[Polygon]:
    """Etch bands plus termination pieces for one CPW path."""
    s2 = cpw.trace_width_um / 2.0
    g = cpw.gap_um
    f = fillet_radius_um
    polys: list[Polygon] = []

    segments = list(path.segments)
    if start_termination == "short":
        first = segments[0]
        if not isinstance(first, LineSegment) or first.length <= f:
            raise DesignRuleError("shorted end must start with a line longer than the fillet")
        hx, hy = _segment_heading(first, at_start=True)
        segments[0] = LineSegment(
            (first.start[0] + f * hx, first.start[1] + f * hy), first.end
        )
        polys.extend(
            _shorted_end_caps(first.start, (hx, hy), cpw, f, group)
        )

    for seg in segments:
        for left in (True, False):
            if isinstance(seg, LineSegment):
                pts = _line_band(seg.start, seg.end, s2, s2 + g, left)
            else:
                pts = _arc_band(seg, s2, s2 + g, left, arc_step_deg)
            polys.append(Polygon(pts, group=group, kind="band"))

    if end_termination == "open":
        last = segments[-1]
        heading = _segment_heading(last, at_start=False)
        polys.extend(_open_end_polygons(path.end, heading, cpw, f, group))
    elif end_termination not in ("none",):
        raise ValueError(f"unknown end termination {end_termination!r}")
    if start_termination not in ("short", "none"):
        raise ValueError(f"unknown start termination {start_termination!r}")
    return polys


TAPER_STEPS = 96


def _taper_bands(p0, p1, s0, g0, s1, g1, group: str, steps: int = TAPER_STEPS):
    """Two gap bands of a raised-cosine CPW taper.

    The cosine profile has zero slope at both junctions, so the perpendicular
    slot width never pinches below the narrow-end gap (a straight taper to a
    minimum-width gap would).  With g proportional to s the s/(s+2g) ratio is
    constant along the taper.
    """
    dx, dy = _unit(p1[0] - p0[0], p1[1] - p0[1])
    length = math.hypot(p1[0] - p0[0], p1[1] - p0[1])
    t = np.linspace(0.0, 1.0, steps + 1)
    blend = 0.5 * (1.0 - np.cos(math.pi * t))
    s_t = s0 + (s1 - s0) * blend
    g_t = g0 + (g1 - g0) * blend
    along_x = p0[0] + t * length * dx
    along_y = p0[1] + t * length * dy
    out = []
    for left in (True, False):
        nx, ny = (-dy, dx) if left else (dy, -dx)
        inner = np.column_stack(
            [along_x + (s_t / 2) * nx, along_y + (s_t / 2) * ny]
        )
        outer = np.column_stack(
            [along_x + (s_t / 2 + g_t) * nx, along_y + (s_t / 2 + g_t) * ny]
        )
        pts = np.vstack([inner, outer[::-1]])
        out.append(Polygon(pts, group=group, kind="taper"))
    return out


@dataclass(frozen=True)
class BondPadSpec:
    """Launcher: edge mouth, straight pad, impedance-matched linear taper.

    Pad trace and gap keep s/(s+2g) equal to the feedline's ratio, so the
    conformal-mapping impedance is constant along the taper.
    """

    trace_width_um: float = 250.0
    gap_um: float = 125.0
    taper_length_um: float = 300.0
    pad_length_um: float = 300.0
    edge_setback_um: float = 125.0

    @property
    def total_length_um(self) -> float:
        return self.edge_setback_um + self.pad_length_um + self.taper_length_um

    def matches_ratio(self, cpw: CpwGeometry, tol: float = 1e-9) -> bool:
        k_pad = self.trace_width_um / (self.trace_width_um + 2 * self.gap_um)
        return abs(k_pad - cpw.modulus) < tol


@dataclass(frozen=True)
class PlacedResonator:
    design: ResonatorDesign
    anchor_x_um: float  # chip x of the shorted end
    side: str = "below"  # "below" or "above" the feedline

    def __post_init__(self):
        if self.side not in ("below", "above"):
            raise ValueError("side must be 'below' or 'above'")


@dataclass(frozen=True)
class LabelSpec:
    text: str
    x_um: float
    y_um: float
    height_um: float = 150.0


@dataclass
class ChipDesign:
    """Complete two-port chip: feedline, launchers, resonators, labels."""

    width_um: float = 7500.0
    height_um: float = 7500.0
    cpw: CpwGeometry = field(default_factory=CpwGeometry)
    bond_pad: BondPadSpec = field(default_factory=BondPadSpec)
    resonators: list[PlacedResonator] = field(default_factory=list)
    labels: list[LabelSpec] = field(default_factory=list)
    design_name: str = "CPW8R"
    ground_plane_polarity: str = "draw-etch"
    label_stroke_frac: float = 0.12

    def __post_init__(self):
        if self.ground_plane_polarity not in ("draw-etch", "draw-metal"):
            raise ValueError("polarity must be 'draw-etch' or 'draw-metal'")
        if not self.bond_pad.matches_ratio(self.cpw):
            raise DesignRuleError(
                "bond pad must preserve the feedline s/(s+2g) ratio"
            )

    @property
    def feedline_y_um(self) -> float:
        return self.height_um / 2.0

    @property
    def feedline_span_x_um(self) -> tuple[float, float]:
        """x extent of the straight feedline between the two tapers."""
        t = self.bond_pad.total_length_um
        return (t, self.width_um - t)

    def resonator_center_offset_um(self, design: ResonatorDesign) -> float:
        """Centerline-to-centerline distance between feedline and coupler."""
        return (
            self.cpw.span_um / 2.0
            + design.feedline_offset_gap_um
            + design.cpw.span_um / 2.0
        )

    def placed_path(self, placed: PlacedResonator) -> CenterlinePath:
        dy = self.resonator_center_offset_um(placed.design)
        path = placed.design.path
        if placed.side == "above":
            path = path.mirrored_y()
            return path.translated(placed.anchor_x_um, self.feedline_y_um + dy)
        return path.translated(placed.anchor_x_um, self.feedline_y_um - dy)


def _launcher_polygons(design: ChipDesign, west: bool) -> list[Polygon]:
    pad = design.bond_pad
    cpw = design.cpw
    y = design.feedline_y_um
    sgn = 1.0 if west else -1.0
    x_edge = 0.0 if west else design.width_um
    x_mouth_end = x_edge + sgn * pad.edge_setback_um
    x_pad_end = x_mouth_end + sgn * pad.pad_length_um
    x_taper_end = x_pad_end + sgn * pad.taper_length_um
    group = "feedline"

    w_mouth = pad.trace_width_um / 2.0 + pad.gap_um
    mouth = Polygon(
        np.array(
            [
                (min(x_edge, x_mouth_end), y - w_mouth),
                (max(x_edge, x_mouth_end), y - w_mouth),
                (max(x_edge, x_mouth_end), y + w_mouth),
                (min(x_edge, x_mouth_end), y + w_mouth),
            ]
        ),
        group=group,
        kind="mouth",
    )
    out = [mouth]
    out += _taper_bands(
        (x_mouth_end, y),
        (x_pad_end, y),
        pad.trace_width_um,
        pad.gap_um,
        pad.trace_width_um,
        pad.gap_um,
        group,
        steps=1,
    )
    out += _taper_bands(
        (x_pad_end, y),
        (x_taper_end, y),
        pad.trace_width_um,
        pad.gap_um,
        cpw.trace_width_um,
        cpw.gap_um,
        group,
    )
    return out


def _segments_intersect(p, p2, q, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(q, q2, p)
    d2 = orient(q, q2, p2)
    d3 = orient(p, p2, q)
    d4 = orient(p, p2, q2)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


def _groups_conflict(a: list[Polygon], b: list[Polygon]) -> bool:
    """True if any polygon edges of group a cross group b (strict crossing)."""
    for pa in a:
        ba = pa.bbox
        for pb in b:
            bb = pb.bbox
            if ba[2] < bb[0] or bb[2] < ba[0] or ba[3] < bb[1] or bb[3] < ba[1]:
                continue
            pts_a = pa.points
            pts_b = pb.points
            for i in range(len(pts_a)):
                p, p2 = pts_a[i], pts_a[(i + 1) % len(pts_a)]
                for j in range(len(pts_b)):
                    q, q2 = pts_b[j], pts_b[(j + 1) % len(pts_b)]
                    if _segments_intersect(p, p2, q, q2):
                        return True
            # containment without edge crossings
            if _point_in_polygon(pts_a[0], pts_b) or _point_in_polygon(pts_b[0], pts_a):
                return True
    return False


def _point_in_polygon(point, pts) -> bool:
    x, y = point
    inside = False
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x_cross > x:
                inside = not inside
    return inside


def render_chip(design: ChipDesign, arc_step_deg: float = ARC_STEP_DEG) -> list[Polygon]:
    """Flatten a ChipDesign into its deterministic etch polygon list."""
    polys: list[Polygon] = []

    # Feedline between the taper tips.
    x0, x1 = design.feedline_span_x_um
    feed_path = CenterlinePath((LineSegment((x0, design.feedline_y_um), (x1, design.feedline_y_um)),))
    polys += path_to_etch_polygons(
        feed_path,
        design.cpw,
        group="feedline",
        start_termination="none",
        end_termination="none",
        arc_step_deg=arc_step_deg,
    )
    polys += _launcher_polygons(design, west=True)
    polys += _launcher_polygons(design, west=False)

    for placed in design.resonators:
        d = placed.design
        span_x = design.feedline_span_x_um
        if not (span_x[0] <= placed.anchor_x_um <= span_x[1] - d.coupler_length_um):
            raise DesignRuleError(
                f"{d.label}: coupler does not fit on the straight feedline span"
            )
        chip_path = design.placed_path(placed)
        polys += path_to_etch_polygons(
            chip_path,
            d.cpw,
            group=d.label,
            fillet_radius_um=d.fillet_radius_um,
            start_termination="short",
            end_termination="open",
            arc_step_deg=arc_step_deg,
        )

    for i, label in enumerate(design.labels):
        polys += text_polygons(
            label.text,
            label.x_um,
            label.y_um,
            label.height_um,
            stroke_frac=design.label_stroke_frac,
            group=f"label{i}:{label.text}",
        )

    for p in polys:
        x_lo, y_lo, x_hi, y_hi = p.bbox
        if x_lo < -1e-9 or y_lo < -1e-9 or x_hi > design.width_um + 1e-9 or y_hi > design.height_um + 1e-9:
            raise DesignRuleError(
                f"polygon of group {p.group} extends outside the chip: "
                f"bbox=({x_lo:.1f},{y_lo:.1f},{x_hi:.1f},{y_hi:.1f})"
            )

    _check_group_conflicts(polys)
    return polys


def _check_group_conflicts(polys: list[Polygon]) -> None:
    groups: dict[str, list[Polygon]] = {}
    for p in polys:
        groups.setdefault(p.group, []).append(p)
    names = sorted(groups)
    boxes = {}
    for name in names:
        bs = np.array([p.bbox for p in groups[name]])
        boxes[name] = (bs[:, 0].min(), bs[:, 1].min(), bs[:, 2].max(), bs[:, 3].max())
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            ba, bb = boxes[a], boxes[b]
            if ba[2] < bb[0] or bb[2] < ba[0] or ba[3] < bb[1] or bb[3] < ba[1]:
                continue
            if _groups_conflict(groups[a], groups[b]):
                raise GeometryConflictError(
                    f"etch geometry of {a!r} overlaps {b!r}"
                )


def total_etch_area_um2(polys: list[Polygon]) -> float:
    return float(sum(p.area for p in polys))
