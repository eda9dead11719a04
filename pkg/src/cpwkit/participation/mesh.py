"""Nonuniform rectilinear meshing of the CPW cross-section.

Grid lines land exactly on every material boundary (conductor edges, metal
top, substrate surface, trench floor, undercut extents, box walls).  Between
boundaries the spacing grows geometrically from a fine seed at each boundary
up to a far-field cap of domain/50.  The refinement level shrinks the growth
ratio so that each level multiplies the cell count by roughly 2.5x.

The mesh carries the material assignment: cell permittivity, the substrate
area fraction of each cell (mixed cells occur only along the curved trench
undercut), a metal-cell mask, and the Dirichlet node mask/values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cpwkit.errors import MeshBudgetError
from cpwkit.participation.model import CrossSectionModel

#: Geometric growth ratio at refinement 0; level k uses RHO0**(1/1.6**k).
RHO0 = 1.8
LEVEL_FACTOR = 1.6

#: Far-field cell cap as a fraction of the domain extent.
FAR_CAP_FRACTION = 1.0 / 50.0

#: Default mesh budget (cells); requests beyond it raise MeshBudgetError.
DEFAULT_CELL_BUDGET = 20_000_000

_SNAP = 1e-12


@dataclass
class Mesh:
    """Tensor-product grid plus per-cell materials and node boundary conditions."""

    x_um: np.ndarray  # grid lines, shape (nx,)
    y_um: np.ndarray  # grid lines, shape (ny,)
    cell_eps: np.ndarray  # (ny-1, nx-1) blended relative permittivity
    frac_substrate: np.ndarray  # (ny-1, nx-1) substrate area fraction
    metal_cell: np.ndarray  # (ny-1, nx-1) bool, field excluded
    dirichlet: np.ndarray  # (ny, nx) bool
    dirichlet_value: np.ndarray  # (ny, nx) float, valid where dirichlet
    refinement: int

    @property
    def nx(self) -> int:
        return self.x_um.size

    @property
    def ny(self) -> int:
        return self.y_um.size

    @property
    def cell_count(self) -> int:
        return (self.nx - 1) * (self.ny - 1)

    @property
    def node_count(self) -> int:
        return self.nx * self.ny

    @property
    def dx_um(self) -> np.ndarray:
        return np.diff(self.x_um)

    @property
    def dy_um(self) -> np.ndarray:
        return np.diff(self.y_um)

    def x_index(self, value: float) -> int:
        i = int(np.argmin(np.abs(self.x_um - value)))
        if abs(self.x_um[i] - value) > 1e-9 * max(1.0, abs(value)):
            raise KeyError(f"no grid line at x={value}")
        return i

    def y_index(self, value: float) -> int:
        j = int(np.argmin(np.abs(self.y_um - value)))
        if abs(self.y_um[j] - value) > 1e-9 * max(1.0, abs(value)):
            raise KeyError(f"no grid line at y={value}")
        return j


def growth_ratio(refinement: int) -> float:
    return RHO0 ** (1.0 / LEVEL_FACTOR**refinement)


def _fill_interval(a: float, b: float, ha: float, hb: float, rho: float, hmax: float):
    """Grid lines over [a, b] grading geometrically from seeds ha and hb.

    Sizes from both ends are generated until they cover the span, then scaled
    down by a common factor so the last line lands exactly on b.  Scaling is
    always <= 1, so seed and cap contracts survive.
    """
    span = b - a
    if span <= 0:
        raise ValueError("interval must have positive span")
    ha = min(ha, hmax)
    hb = min(hb, hmax)
    left, right = [], []
    h_l, h_r = ha, hb
    total = 0.0
    while total < span:
        if h_l <= h_r:
            step = min(h_l, hmax)
            left.append(step)
            h_l *= rho
        else:
            step = min(h_r, hmax)
            right.append(step)
            h_r *= rho
        total += step
    scale = span / total
    sizes = np.array(left + right[::-1]) * scale
    lines = a + np.cumsum(sizes)
    lines[-1] = b
    return lines[:-1]  # interior lines plus none of the endpoints


def _assemble_lines(criticals: list[tuple[float, float]], rho: float, hmax: float):
    """Sorted unique grid lines from (position, seed size) anchor points."""
    pts = sorted(criticals)
    merged: list[tuple[float, float]] = []
    for pos, seed in pts:
        if merged and abs(pos - merged[-1][0]) < _SNAP * max(1.0, abs(pos)):
            merged[-1] = (merged[-1][0], min(merged[-1][1], seed))
        else:
            merged.append((pos, seed))
    lines = [merged[0][0]]
    for (a, ha), (b, hb) in zip(merged, merged[1:]):
        lines.extend(_fill_interval(a, b, ha, hb, rho, hmax))
        lines.append(b)
    return np.asarray(lines)


def build_mesh(
    model: CrossSectionModel,
    refinement: int = 2,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> Mesh:
    """Mesh the cross-section at the given refinement level."""
    if refinement < 0:
        raise ValueError("refinement must be >= 0")
    cpw = model.cpw
    s2 = cpw.trace_width_um / 2.0
    g = cpw.gap_um
    tm = cpw.metal_thickness_um
    d = model.trench_um
    half = model.domain_um / 2.0
    rho = growth_ratio(refinement)
    hmax = model.domain_um * FAR_CAP_FRACTION

    # Seed size at material boundaries: never above half the thinnest layer
    # (interface contract), and never above a fine span-relative default, so
    # the mesh does not change when layers get thicker (keeps p_j linear in t).
    t_seed = model.min_layer_um / 2.0
    default_seed = cpw.span_um / 8000.0
    edge_seed = min(t_seed, default_seed) if t_seed > 0 else default_seed
    coarse_seed = hmax

    x_anchors = [(0.0, edge_seed * 8), (s2, edge_seed), (s2 + g, edge_seed), (half, coarse_seed)]
    if d > 0 and model.trench_profile == "isotropic-undercut":
        x_anchors += [(s2 - d, edge_seed * 2), (s2 + g + d, edge_seed * 2)]
    x_pos = _assemble_lines(x_anchors, rho, hmax)
    # Mirror for exact left/right symmetry.
    x = np.concatenate([-x_pos[:0:-1], x_pos])

    y_anchors = [(-half, coarse_seed), (0.0, edge_seed), (half, coarse_seed)]
    if tm > 0:
        y_anchors.append((tm, edge_seed))
    if d > 0:
        y_anchors.append((-d, edge_seed * 2))
    y = _assemble_lines(y_anchors, rho, hmax)

    est_cells = (x.size - 1) * (y.size - 1)
    if est_cells > cell_budget:
        over = est_cells / cell_budget
        drop = max(1, int(math.ceil(math.log(over) / math.log(2.5))))
        raise MeshBudgetError(
            f"refinement {refinement} needs {est_cells} cells, budget is "
            f"{cell_budget}; try refinement {refinement - drop}",
            suggested_refinement=refinement - drop,
        )

    cell_eps, frac_sub, metal_cell = _assign_materials(x, y, model)
    dirichlet, dval = _dirichlet_nodes(x, y, model)
    return Mesh(
        x_um=x,
        y_um=y,
        cell_eps=cell_eps,
        frac_substrate=frac_sub,
        metal_cell=metal_cell,
        dirichlet=dirichlet,
        dirichlet_value=dval,
        refinement=refinement,
    )


def _quarter_disk_fraction(x0, x1, y0, y1, cx, r, side, samples=16):
    """Area fraction of cell [x0,x1]x[y0,y1] inside the undercut quarter-disk.

    The disk is centered at (cx, 0); side -1 keeps x <= cx (undercut pointing
    toward the trace), +1 keeps x >= cx.  Subcell midpoint sampling; cells
    near the arc are nanometer-scale, so the residual error is negligible.
    """
    xs = x0 + (np.arange(samples) + 0.5) * (x1 - x0) / samples
    ys = y0 + (np.arange(samples) + 0.5) * (y1 - y0) / samples
    gx, gy = np.meshgrid(xs, ys)
    inside = (gx - cx) ** 2 + gy**2 <= r * r
    if side < 0:
        inside &= gx <= cx
    else:
        inside &= gx >= cx
    return float(np.count_nonzero(inside)) / (samples * samples)


def _assign_materials(x, y, model: CrossSectionModel):
    cpw = model.cpw
    s2 = cpw.trace_width_um / 2.0
    g = cpw.gap_um
    tm = cpw.metal_thickness_um
    d = model.trench_um
    er = cpw.substrate_eps_r

    xc = 0.5 * (x[:-1] + x[1:])
    yc = 0.5 * (y[:-1] + y[1:])
    ny_c, nx_c = yc.size, xc.size
    XC = np.broadcast_to(xc, (ny_c, nx_c))
    YC = np.broadcast_to(yc[:, None], (ny_c, nx_c))

    # Removed (vacuum) fraction of each substrate cell.
    frac_removed = np.zeros((ny_c, nx_c))
    below = YC < 0
    if d > 0:
        band = below & (YC > -d)
        open_gap = band & (np.abs(XC) >= s2) & (np.abs(XC) <= s2 + g)
        frac_removed[open_gap] = 1.0
        if model.trench_profile == "isotropic-undercut":
            # Undercut quarter-disks at the four metal edges.
            for cx_c, side in ((s2, -1), (s2 + g, +1), (-s2, +1), (-(s2 + g), -1)):
                lo, hi = (cx_c - d, cx_c) if side < 0 else (cx_c, cx_c + d)
                cols = np.nonzero((xc > lo - 1e-15) & (xc < hi + 1e-15))[0]
                rows = np.nonzero((yc > -d) & (yc < 0))[0]
                for j in rows:
                    for i in cols:
                        frac_removed[j, i] = _quarter_disk_fraction(
                            x[i], x[i + 1], y[j], y[j + 1], cx_c, d, side
                        )

    frac_sub = np.where(below, 1.0 - frac_removed, 0.0)
    cell_eps = frac_sub * er + (1.0 - frac_sub) * 1.0

    # Metal cells: field excluded.
    metal_cell = np.zeros((ny_c, nx_c), dtype=bool)
    if tm > 0:
        film = (YC > 0) & (YC < tm)
        metal_cell |= film & (np.abs(XC) < s2)
        metal_cell |= film & (np.abs(XC) > s2 + g)
    cell_eps[metal_cell] = 0.0
    frac_sub[metal_cell] = 0.0
    return cell_eps, frac_sub, metal_cell


def _dirichlet_nodes(x, y, model: CrossSectionModel):
    cpw = model.cpw
    s2 = cpw.trace_width_um / 2.0
    g = cpw.gap_um
    tm = cpw.metal_thickness_um
    half = model.domain_um / 2.0
    tol = 1e-9 * max(1.0, half)

    X = np.broadcast_to(x, (y.size, x.size))
    Y = np.broadcast_to(y[:, None], (y.size, x.size))

    mask = np.zeros(X.shape, dtype=bool)
    value = np.zeros(X.shape)

    boundary = (
        (np.abs(X - (-half)) < tol)
        | (np.abs(X - half) < tol)
        | (np.abs(Y - (-half)) < tol)
        | (np.abs(Y - half) < tol)
    )
    mask |= boundary

    if tm > 0:
        in_film = (Y > -tol) & (Y < tm + tol)
    else:
        in_film = np.abs(Y) < tol
    trace = in_film & (np.abs(X) < s2 + tol)
    ground = in_film & (np.abs(X) > s2 + g - tol)
    mask |= trace | ground
    value[trace] = 1.0  # trace wins over the boundary 0 V where they met (never)
    return mask, value
