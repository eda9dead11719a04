"""Design-rule scan: minimum feature width and cross-group spacing.

Width check: smallest distance between facing edge pairs of the same polygon
(normals opposed), which for a gap band is exactly the etched slot width.
It applies to ribbon-like pieces (bands, tapers, mouths, label strokes);
termination pieces (end caps and fillet bites) are tangent wedges whose own
width tapers to zero by construction while the surrounding etch union stays
wide, so they are validated through their construction parameters (gap at or
above the minimum feature, fillet at most half the gap) instead.

Spacing check: smallest distance between facing edges of polygons from
different groups (feedline vs. each resonator vs. labels); pieces of one
group legally abut, so same-group pairs are exempt and their geometry is
guaranteed by construction parameters instead.

Long edges are chunked before the KD-tree candidate search so query radii
stay small.  Arc discretization makes band widths read a hair under nominal
(sagitta of the outer chord), hence the small default tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from cpwkit.layout.polygons import Polygon

#: Discretization allowance on the nominal minimum feature (um).
DEFAULT_TOLERANCE_UM = 0.02

#: Polygon kinds whose internal width is a real design feature.
WIDTH_CHECK_KINDS = ("band", "taper", "mouth", "label", "poly")

_CHUNK_UM = 20.0


@dataclass
class DrcViolation:
    kind: str  # "width" or "spacing"
    distance_um: float
    location_um: tuple[float, float]
    groups: tuple[str, str]


@dataclass
class DrcReport:
    min_feature_um: float
    tolerance_um: float
    min_width_um: float
    min_spacing_um: float
    violations: list[DrcViolation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _collect_edges(polygons: list[Polygon]):
    p0s, p1s, groups, polys, widthable = [], [], [], [], []
    for pid, poly in enumerate(polygons):
        pts = poly.points
        nxt = np.roll(pts, -1, axis=0)
        p0s.append(pts)
        p1s.append(nxt)
        groups.extend([poly.group] * len(pts))
        polys.extend([pid] * len(pts))
        widthable.extend([poly.kind in WIDTH_CHECK_KINDS] * len(pts))
    p0 = np.vstack(p0s)
    p1 = np.vstack(p1s)
    group_ids, group_names = _intern(groups)
    return p0, p1, group_ids, np.asarray(polys), np.asarray(widthable), group_names


def _intern(names):
    table: dict[str, int] = {}
    out = np.empty(len(names), dtype=np.int64)
    for i, n in enumerate(names):
        out[i] = table.setdefault(n, len(table))
    inverse = [None] * len(table)
    for name, idx in table.items():
        inverse[idx] = name
    return out, inverse


def _chunk_edges(p0, p1, group_ids, poly_ids, widthable):
    length = np.hypot(*(p1 - p0).T)
    n_chunks = np.maximum(1, np.ceil(length / _CHUNK_UM)).astype(int)
    total = int(n_chunks.sum())
    c0 = np.empty((total, 2))
    c1 = np.empty((total, 2))
    cg = np.empty(total, dtype=np.int64)
    cp = np.empty(total, dtype=np.int64)
    ce = np.empty(total, dtype=np.int64)  # original edge id
    cw = np.empty(total, dtype=bool)
    pos = 0
    for i in range(len(p0)):
        n = n_chunks[i]
        ts = np.linspace(0.0, 1.0, n + 1)[:, None]
        pts = p0[i] + ts * (p1[i] - p0[i])
        c0[pos : pos + n] = pts[:-1]
        c1[pos : pos + n] = pts[1:]
        cg[pos : pos + n] = group_ids[i]
        cp[pos : pos + n] = poly_ids[i]
        ce[pos : pos + n] = i
        cw[pos : pos + n] = widthable[i]
        pos += n
    return c0, c1, cg, cp, ce, cw


def _segment_pair_distance(a0, a1, b0, b1):
    """Vectorized minimum distance between segment pairs (N,2 arrays each)."""

    def point_seg(p, q0, q1):
        d = q1 - q0
        denom = np.einsum("ij,ij->i", d, d)
        t = np.einsum("ij,ij->i", p - q0, d) / np.where(denom > 0, denom, 1.0)
        t = np.clip(t, 0.0, 1.0)
        proj = q0 + t[:, None] * d
        return np.hypot(*(p - proj).T)

    d = np.minimum(point_seg(a0, b0, b1), point_seg(a1, b0, b1))
    d = np.minimum(d, point_seg(b0, a0, a1))
    d = np.minimum(d, point_seg(b1, a0, a1))
    # crossing pairs have distance zero
    crossing = _segments_cross(a0, a1, b0, b1)
    return np.where(crossing, 0.0, d)


def _share_endpoint(a0, a1, b0, b1, tol=1e-9):
    close = lambda p, q: np.hypot(p[:, 0] - q[:, 0], p[:, 1] - q[:, 1]) < tol
    return close(a0, b0) | close(a0, b1) | close(a1, b0) | close(a1, b1)


def _segments_cross(a0, a1, b0, b1):
    def orient(p, q, r):
        return (q[:, 0] - p[:, 0]) * (r[:, 1] - p[:, 1]) - (q[:, 1] - p[:, 1]) * (
            r[:, 0] - p[:, 0]
        )

    d1 = orient(b0, b1, a0)
    d2 = orient(b0, b1, a1)
    d3 = orient(a0, a1, b0)
    d4 = orient(a0, a1, b1)
    return ((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0))


def run_drc(
    polygons: list[Polygon],
    min_feature_um: float = 3.0,
    tolerance_um: float = DEFAULT_TOLERANCE_UM,
    facing_dot: float = -0.3,
) -> DrcReport:
    """Scan for etch features (width or spacing) below the minimum."""
    p0, p1, group_ids, poly_ids, widthable, group_names = _collect_edges(polygons)

    # Outward normal of a CCW polygon edge points right of its direction.
    d = p1 - p0
    length = np.hypot(d[:, 0], d[:, 1])
    d_unit = d / length[:, None]
    normals = np.column_stack([d_unit[:, 1], -d_unit[:, 0]])

    c0, c1, cg, cp, ce, cw = _chunk_edges(p0, p1, group_ids, poly_ids, widthable)
    c_norm = normals[ce]
    mids = 0.5 * (c0 + c1)
    tree = cKDTree(mids)
    radius = _CHUNK_UM + min_feature_um
    pairs = tree.query_pairs(r=radius, output_type="ndarray")
    if len(pairs) == 0:
        return DrcReport(min_feature_um, tolerance_um, np.inf, np.inf, [])

    i, j = pairs[:, 0], pairs[:, 1]
    same_poly = cp[i] == cp[j]
    same_group = cg[i] == cg[j]
    facing = np.einsum("ij,ij->i", c_norm[i], c_norm[j]) < facing_dot
    adjacent = same_poly & (np.abs(ce[i] - ce[j]) <= 1)
    touching = _share_endpoint(c0[i], c1[i], c0[j], c1[j])
    width_mask = same_poly & facing & ~adjacent & ~touching & cw[i] & cw[j]
    spacing_mask = ~same_group & facing

    threshold = min_feature_um - tolerance_um
    report = DrcReport(min_feature_um, tolerance_um, np.inf, np.inf, [])
    for mask, kind in ((width_mask, "width"), (spacing_mask, "spacing")):
        if not mask.any():
            continue
        ii, jj = i[mask], j[mask]
        dist = _segment_pair_distance(c0[ii], c1[ii], c0[jj], c1[jj])
        k_min = int(np.argmin(dist))
        best = float(dist[k_min])
        if kind == "width":
            report.min_width_um = best
        else:
            report.min_spacing_um = best
        bad = np.nonzero(dist < threshold)[0]
        for k in bad[np.argsort(dist[bad])][:20]:
            report.violations.append(
                DrcViolation(
                    kind=kind,
                    distance_um=float(dist[k]),
                    location_um=(
                        float(mids[ii[k], 0]),
                        float(mids[ii[k], 1]),
                    ),
                    groups=(
                        group_names[cg[ii[k]]],
                        group_names[cg[jj[k]]],
                    ),
                )
            )
    return report
