"""Wirebond planning and ground-plane connectivity checking.

Bond families:

* feedline straddles, on a fixed interval strictly inside the straight
  feedline span (the launcher mouths separate the two ground half-planes, so
  these bonds are what reconnects them);
* resonator straddles, one per meander leg plus the tail, landing midway
  between adjacent legs;
* ground stitches across each launcher mouth.

Every endpoint must land on metal and every bond must straddle etched area;
the planner enforces both, stretching or skipping bonds (with a warning)
when an endpoint would land on etch.

Connectivity is checked on a rasterized metal map: metal components are graph
nodes, bonds are edges, and the graph must connect every ground component.
The signal net (feedline trace and pads) is excluded, as are cosmetic
islands below an area threshold (enclosed counters of label glyphs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from matplotlib.path import Path as MplPath
from scipy import ndimage

from cpwkit.errors import DesignRuleError
from cpwkit.layout.polygons import ChipDesign, Polygon


@dataclass(frozen=True)
class Bond:
    x1_um: float
    y1_um: float
    x2_um: float
    y2_um: float
    purpose: str  # feedline-straddle | resonator-straddle | ground-stitch

    @property
    def span_um(self) -> float:
        return math.hypot(self.x2_um - self.x1_um, self.y2_um - self.y1_um)

    @property
    def midpoint(self) -> tuple[float, float]:
        return (0.5 * (self.x1_um + self.x2_um), 0.5 * (self.y1_um + self.y2_um))


@dataclass
class WirebondMap:
    bonds: list[Bond] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def by_purpose(self, purpose: str) -> list[Bond]:
        return [b for b in self.bonds if b.purpose == purpose]


@dataclass(frozen=True)
class BondRules:
    feedline_interval_um: float = 400.0
    feedline_span_um: float = 90.0
    min_span_um: float = 75.0
    max_span_um: float = 600.0
    min_landing_um: float = 30.0
    stitch_margin_um: float = 40.0

    def __post_init__(self):
        if not self.min_span_um <= self.feedline_span_um <= self.max_span_um:
            raise DesignRuleError("feedline bond span outside the allowed range")


class EtchTester:
    """Point-on-etch and segment-crossing queries against the polygon set."""

    def __init__(self, polygons: list[Polygon]):
        self.polygons = polygons
        self._paths = [MplPath(p.points) for p in polygons]
        self._bbox = np.array([p.bbox for p in polygons])

    def on_etch(self, x: float, y: float) -> bool:
        b = self._bbox
        hits = np.nonzero(
            (b[:, 0] <= x) & (x <= b[:, 2]) & (b[:, 1] <= y) & (y <= b[:, 3])
        )[0]
        return any(self._paths[i].contains_point((x, y)) for i in hits)

    def segment_crosses_etch(self, x1, y1, x2, y2) -> bool:
        lo_x, hi_x = min(x1, x2), max(x1, x2)
        lo_y, hi_y = min(y1, y2), max(y1, y2)
        b = self._bbox
        hits = np.nonzero(
            (b[:, 0] <= hi_x) & (lo_x <= b[:, 2]) & (b[:, 1] <= hi_y) & (lo_y <= b[:, 3])
        )[0]
        p = np.array([x1, y1])
        q = np.array([x2, y2])
        for i in hits:
            pts = self.polygons[i].points
            nxt = np.roll(pts, -1, axis=0)
            if _segment_hits_any(p, q, pts, nxt):
                return True
            if self._paths[i].contains_point(((x1 + x2) / 2, (y1 + y2) / 2)):
                return True
        return False


def _segment_hits_any(p, q, a0, a1) -> bool:
    def orient(pp, qq, rr):
        return (qq[..., 0] - pp[..., 0]) * (rr[..., 1] - pp[..., 1]) - (
            qq[..., 1] - pp[..., 1]
        ) * (rr[..., 0] - pp[..., 0])

    d1 = orient(a0, a1, p)
    d2 = orient(a0, a1, q)
    d3 = orient(p[None, :], q[None, :], a0)
    d4 = orient(p[None, :], q[None, :], a1)
    return bool(np.any(((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0))))


def _adjust_endpoint_span(
    tester: EtchTester, x: float, y_center: float, half: float, max_half: float
):
    """Grow a symmetric vertical span until both endpoints land on metal."""
    h = half
    while h <= max_half:
        if not tester.on_etch(x, y_center - h) and not tester.on_etch(x, y_center + h):
            return h
        h += 5.0
    return None


def plan_wirebonds(
    design: ChipDesign,
    polygons: list[Polygon],
    rules: BondRules = BondRules(),
) -> WirebondMap:
    tester = EtchTester(polygons)
    out = WirebondMap()
    y_f = design.feedline_y_um

    # Feedline straddles: strictly interior grid of the straight span.
    x_lo, x_hi = design.feedline_span_x_um
    span_len = x_hi - x_lo
    k = 1
    while k * rules.feedline_interval_um < span_len - 1e-9:
        x = x_lo + k * rules.feedline_interval_um
        k += 1
        h = _adjust_endpoint_span(
            tester, x, y_f, rules.feedline_span_um / 2.0, rules.max_span_um / 2.0
        )
        if h is None:
            out.warnings.append(
                f"feedline straddle at x={x:.0f} um skipped: no metal landing "
                f"within the span limit"
            )
            continue
        out.bonds.append(Bond(x, y_f - h, x, y_f + h, "feedline-straddle"))

    # Resonator straddles: one bond over each meander leg and the tail.
    for placed in design.resonators:
        d = placed.design
        pitch = d.meander_pitch_um
        landing = pitch - d.cpw.span_um
        if landing < rules.min_landing_um:
            out.warnings.append(
                f"{d.label}: meander pitch {pitch} um leaves only {landing:.0f} um "
                f"landing; resonator skipped"
            )
            continue
        if not rules.min_span_um <= pitch <= rules.max_span_um:
            out.warnings.append(
                f"{d.label}: leg straddle span {pitch} um outside bond limits; skipped"
            )
            continue
        # Rows to straddle: every leg plus the tail row.
        n_rows = d.n_legs + 1
        rows_local_y = [d.first_leg_y_local_um - k * pitch for k in range(n_rows)]
        x_center = d.meander_x_center_local_um
        dy_center = design.resonator_center_offset_um(d)
        for row_y in rows_local_y:
            if placed.side == "below":
                yc = y_f - dy_center + row_y
            else:
                yc = y_f + dy_center - row_y
            placed_ok = False
            for dx in (0.0, -30.0, 30.0, -60.0, 60.0):
                x = placed.anchor_x_um + x_center + dx
                y1, y2 = yc - pitch / 2.0, yc + pitch / 2.0
                if not tester.on_etch(x, y1) and not tester.on_etch(x, y2):
                    out.bonds.append(Bond(x, y1, x, y2, "resonator-straddle"))
                    placed_ok = True
                    break
            if not placed_ok:
                out.warnings.append(
                    f"{d.label}: no metal landing for the straddle near y={yc:.0f} um"
                )

    # Ground stitches across the two launcher mouths.
    pad = design.bond_pad
    half_w = pad.trace_width_um / 2.0 + pad.gap_um + rules.stitch_margin_um
    for x in (
        pad.edge_setback_um / 2.0,
        design.width_um - pad.edge_setback_um / 2.0,
    ):
        if 2 * half_w > rules.max_span_um:
            out.warnings.append(
                f"mouth stitch at x={x:.0f} um exceeds the bond span limit; skipped"
            )
            continue
        if tester.on_etch(x, y_f - half_w) or tester.on_etch(x, y_f + half_w):
            out.warnings.append(f"mouth stitch at x={x:.0f} um has no landing; skipped")
            continue
        out.bonds.append(Bond(x, y_f - half_w, x, y_f + half_w, "ground-stitch"))

    # Post-conditions: endpoints on metal, spans legal, every bond straddles etch.
    for b in out.bonds:
        if not rules.min_span_um - 1e-9 <= b.span_um <= rules.max_span_um + 1e-9:
            raise DesignRuleError(f"bond span {b.span_um:.0f} um outside limits")
        if not tester.segment_crosses_etch(b.x1_um, b.y1_um, b.x2_um, b.y2_um):
            raise DesignRuleError(
                f"bond at {b.midpoint} does not straddle any etch region"
            )
    return out


@dataclass
class GroundReport:
    n_components: int
    n_ground_components: int
    n_small_islands: int
    connected: bool
    resolution_um: float


def rasterize_metal(
    polygons: list[Polygon],
    width_um: float,
    height_um: float,
    resolution_um: float = 1.0,
) -> np.ndarray:
    """Boolean metal map: True where metal remains after etching."""
    nx = int(round(width_um / resolution_um))
    ny = int(round(height_um / resolution_um))
    metal = np.ones((ny, nx), dtype=bool)
    for poly in polygons:
        x_lo, y_lo, x_hi, y_hi = poly.bbox
        i0 = max(0, int(x_lo / resolution_um) - 1)
        i1 = min(nx, int(x_hi / resolution_um) + 2)
        j0 = max(0, int(y_lo / resolution_um) - 1)
        j1 = min(ny, int(y_hi / resolution_um) + 2)
        if i0 >= i1 or j0 >= j1:
            continue
        xs = (np.arange(i0, i1) + 0.5) * resolution_um
        ys = (np.arange(j0, j1) + 0.5) * resolution_um
        gx, gy = np.meshgrid(xs, ys)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        inside = MplPath(poly.points).contains_points(pts).reshape(gy.shape)
        metal[j0:j1, i0:i1] &= ~inside
    return metal


def ground_connectivity(
    design: ChipDesign,
    polygons: list[Polygon],
    bonds: list[Bond],
    resolution_um: float = 1.0,
    min_island_area_um2: float = 5e4,
) -> GroundReport:
    """Check the ground-plane adjacency graph (components as nodes, bonds as edges)."""
    metal = rasterize_metal(polygons, design.width_um, design.height_um, resolution_um)
    comp, n_comp = ndimage.label(metal)

    def comp_at(x, y):
        j = min(comp.shape[0] - 1, max(0, int(y / resolution_um)))
        i = min(comp.shape[1] - 1, max(0, int(x / resolution_um)))
        return int(comp[j, i])

    # Signal net: the feedline trace at chip center.
    signal = comp_at(design.width_um / 2.0, design.feedline_y_um)

    areas = ndimage.sum_labels(
        np.ones_like(comp, dtype=float), comp, index=np.arange(1, n_comp + 1)
    ) * (resolution_um**2)
    ground_ids = [
        cid
        for cid in range(1, n_comp + 1)
        if cid != signal and areas[cid - 1] >= min_island_area_um2
    ]
    small = int(sum(1 for cid in range(1, n_comp + 1) if cid != signal) - len(ground_ids))

    parent = {cid: cid for cid in ground_ids}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for b in bonds:
        c1 = comp_at(b.x1_um, b.y1_um)
        c2 = comp_at(b.x2_um, b.y2_um)
        if c1 in parent and c2 in parent:
            union(c1, c2)

    roots = {find(cid) for cid in ground_ids}
    return GroundReport(
        n_components=n_comp,
        n_ground_components=len(ground_ids),
        n_small_islands=small,
        connected=len(roots) <= 1,
        resolution_um=resolution_um,
    )
