"""Surface-participation ratios, field-map export, and report formatting.

Thin-layer participations come from the unperturbed surface fields through
the dielectric continuity rules (tangential E continuous, normal D
continuous, so E_n in the layer is eps_host/eps_layer times the host value):

* MS (metal-substrate): normal-only field on the substrate side of every
  metal contact; weight eps_sub^2 / eps_MS.
* SA (substrate-air): exposed substrate (flat gap or trench floor and
  undercut walls); weight eps_SA on the tangential part plus
  eps_sub^2 / eps_SA on the normal part, host = substrate.
* MA (metal-air): metal top, sidewalls, and any underside exposed by the
  undercut; weight 1 / eps_MA (vacuum host).

Each layer is assumed to replace a shell of its host material, so the shell's
unperturbed energy is deducted from the bulk participation it came out of;
that keeps the sum of all five participations at one to within the
discretization error.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.constants import epsilon_0 as EPS0

from cpwkit.errors import SolverError
from cpwkit.participation.mesh import Mesh
from cpwkit.participation.model import CrossSectionModel
from cpwkit.participation.solver import FieldSolution, nodal_field

#: Samples per undercut quarter-arc for the wall integrals.
ARC_SAMPLES = 96


@dataclass(frozen=True)
class ParticipationReport:
    """Participations of the five device regions plus line capacitance."""

    p_ms: float
    p_sa: float
    p_ma: float
    p_substrate: float
    p_vacuum: float
    capacitance_fF_per_um: float
    mesh_cells: int
    refinement: int
    estimated_discretization_error: float | None = None
    layer_thickness_nm: dict | None = None
    layer_eps: dict | None = None

    def __post_init__(self):
        for name in ("p_ms", "p_sa", "p_ma", "p_substrate", "p_vacuum"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")

    @property
    def closure_error(self) -> float:
        """|sum of all five participations - 1|."""
        total = self.p_ms + self.p_sa + self.p_ma + self.p_substrate + self.p_vacuum
        return abs(total - 1.0)

    def as_dict(self) -> dict:
        return {
            "p_MS": self.p_ms,
            "p_SA": self.p_sa,
            "p_MA": self.p_ma,
            "p_substrate": self.p_substrate,
            "p_vacuum": self.p_vacuum,
            "capacitance_fF_per_um": self.capacitance_fF_per_um,
            "mesh_cells": self.mesh_cells,
            "refinement": self.refinement,
            "estimated_discretization_error": self.estimated_discretization_error,
            "layer_thickness_nm": dict(self.layer_thickness_nm or {}),
            "layer_eps": dict(self.layer_eps or {}),
        }


def _interp_phi(mesh: Mesh, phi: np.ndarray, px: np.ndarray, py: np.ndarray):
    """Bilinear interpolation of the nodal potential at arbitrary points."""
    x, y = mesh.x_um, mesh.y_um
    ix = np.clip(np.searchsorted(x, px) - 1, 0, x.size - 2)
    iy = np.clip(np.searchsorted(y, py) - 1, 0, y.size - 2)
    tx = (px - x[ix]) / (x[ix + 1] - x[ix])
    ty = (py - y[iy]) / (y[iy + 1] - y[iy])
    p00 = phi[iy, ix]
    p10 = phi[iy, ix + 1]
    p01 = phi[iy + 1, ix]
    p11 = phi[iy + 1, ix + 1]
    return (
        p00 * (1 - tx) * (1 - ty)
        + p10 * tx * (1 - ty)
        + p01 * (1 - tx) * ty
        + p11 * tx * ty
    )


def _segment_integral(x_nodes: np.ndarray, values_sq: np.ndarray) -> float:
    """Trapezoidal integral of a squared field sampled on grid nodes."""
    if x_nodes.size < 2:
        return 0.0
    return float(np.trapezoid(values_sq, x_nodes))


def _columns_in(mesh: Mesh, lo: float, hi: float) -> np.ndarray:
    """Node column indices with lo <= x <= hi (inclusive, snapped ends)."""
    x = mesh.x_um
    tol = 1e-9 * max(1.0, abs(hi - lo))
    return np.nonzero((x >= lo - tol) & (x <= hi + tol))[0]


def _rows_in(mesh: Mesh, lo: float, hi: float) -> np.ndarray:
    y = mesh.y_um
    tol = 1e-9 * max(1.0, abs(hi - lo))
    return np.nonzero((y >= lo - tol) & (y <= hi + tol))[0]


def _normal_field_below(mesh: Mesh, phi: np.ndarray, j_surface: int, cols: np.ndarray):
    """E_n just below a horizontal surface row (one-sided, V/um)."""
    dy = mesh.y_um[j_surface] - mesh.y_um[j_surface - 1]
    return (phi[j_surface, cols] - phi[j_surface - 1, cols]) / dy


def _normal_field_above(mesh: Mesh, phi: np.ndarray, j_surface: int, cols: np.ndarray):
    dy = mesh.y_um[j_surface + 1] - mesh.y_um[j_surface]
    return (phi[j_surface + 1, cols] - phi[j_surface, cols]) / dy


def _tangential_field_x(mesh: Mesh, phi: np.ndarray, j_row: int, cols: np.ndarray):
    """E_t along x on a surface row, central differences on the nonuniform grid."""
    row = phi[j_row, :]
    et_full = -np.gradient(row, mesh.x_um)
    return et_full[cols]


def _undercut_um(model: CrossSectionModel) -> float:
    """Lateral contact loss per metal edge: the undercut radius, else zero."""
    return model.trench_um if model.trench_profile == "isotropic-undercut" else 0.0


def _ms_integral(mesh: Mesh, phi: np.ndarray, model: CrossSectionModel) -> float:
    """integral of E_n^2 over the metal-substrate contact (both traces and grounds)."""
    cpw = model.cpw
    s2 = cpw.trace_width_um / 2.0
    g = cpw.gap_um
    u = _undercut_um(model)
    half = model.domain_um / 2.0
    j0 = mesh.y_index(0.0)
    total = 0.0
    spans = [(-(s2 - u), s2 - u)] if s2 - u > 0 else []
    spans += [(s2 + g + u, half), (-half, -(s2 + g + u))]
    for lo, hi in spans:
        cols = _columns_in(mesh, lo, hi)
        en = _normal_field_below(mesh, phi, j0, cols)
        total += _segment_integral(mesh.x_um[cols], en**2)
    return total


def _ma_integrals(mesh: Mesh, phi: np.ndarray, model: CrossSectionModel) -> float:
    """integral of E_n^2 over every metal-air face (vacuum side)."""
    cpw = model.cpw
    s2 = cpw.trace_width_um / 2.0
    g = cpw.gap_um
    tm = cpw.metal_thickness_um
    half = model.domain_um / 2.0
    total = 0.0

    j_top = mesh.y_index(tm)
    for lo, hi in [(-s2, s2), (s2 + g, half), (-half, -(s2 + g))]:
        cols = _columns_in(mesh, lo, hi)
        en = _normal_field_above(mesh, phi, j_top, cols)
        total += _segment_integral(mesh.x_um[cols], en**2)

    if tm > 0:
        rows = _rows_in(mesh, 0.0, tm)
        yv = mesh.y_um[rows]
        # Trace sidewalls (outward into the gap) and ground inner sidewalls.
        for x_wall, direction in ((s2, +1), (-s2, -1), (s2 + g, -1), (-(s2 + g), +1)):
            i = mesh.x_index(x_wall)
            i_n = i + direction
            dx = abs(mesh.x_um[i_n] - mesh.x_um[i])
            en = (phi[rows, i_n] - phi[rows, i]) / dx
            total += _segment_integral(yv, en**2)

        u = _undercut_um(model)
        if u > 0:
            # Metal underside exposed by the undercut.
            j0 = mesh.y_index(0.0)
            for lo, hi in [
                (s2 - u, s2),
                (-s2, -(s2 - u)),
                (s2 + g, s2 + g + u),
                (-(s2 + g + u), -(s2 + g)),
            ]:
                cols = _columns_in(mesh, lo, hi)
                en = _normal_field_below(mesh, phi, j0, cols)
                total += _segment_integral(mesh.x_um[cols], en**2)
    return total


def _sa_integrals(mesh: Mesh, phi: np.ndarray, model: CrossSectionModel):
    """(integral E_t^2, integral E_n^2) over exposed substrate, host = substrate."""
    cpw = model.cpw
    s2 = cpw.trace_width_um / 2.0
    g = cpw.gap_um
    d = model.trench_um
    it2 = 0.0
    in2 = 0.0

    if d == 0:
        j0 = mesh.y_index(0.0)
        for lo, hi in [(s2, s2 + g), (-(s2 + g), -s2)]:
            cols = _columns_in(mesh, lo, hi)
            xv = mesh.x_um[cols]
            et = _tangential_field_x(mesh, phi, j0, cols)
            en = _normal_field_below(mesh, phi, j0, cols)
            it2 += _segment_integral(xv, et**2)
            in2 += _segment_integral(xv, en**2)
        return it2, in2

    # Trench floor.
    jf = mesh.y_index(-d)
    for lo, hi in [(s2, s2 + g), (-(s2 + g), -s2)]:
        cols = _columns_in(mesh, lo, hi)
        xv = mesh.x_um[cols]
        et = _tangential_field_x(mesh, phi, jf, cols)
        en = _normal_field_below(mesh, phi, jf, cols)
        it2 += _segment_integral(xv, et**2)
        in2 += _segment_integral(xv, en**2)

    if model.trench_profile == "vertical":
        # Straight walls flush with the metal edges: E_t runs along y, E_n is
        # a one-sided horizontal difference into the substrate.
        rows = _rows_in(mesh, -d, 0.0)
        yv = mesh.y_um[rows]
        for x_wall, into_sub in ((s2, -1), (-s2, +1), (s2 + g, +1), (-(s2 + g), -1)):
            i = mesh.x_index(x_wall)
            i_n = i + into_sub
            dxw = abs(mesh.x_um[i_n] - mesh.x_um[i])
            en = (phi[rows, i] - phi[rows, i_n]) / dxw
            et = -np.gradient(phi[:, i], mesh.y_um)[rows]
            it2 += _segment_integral(yv, et**2)
            in2 += _segment_integral(yv, en**2)
        return it2, in2

    # Undercut walls: quarter-circle arcs under the four metal edges, sampled
    # slightly inside the substrate.
    delta = max(d / 40.0, 2e-4)
    thetas = (np.arange(ARC_SAMPLES) + 0.5) * (np.pi / 2.0) / ARC_SAMPLES
    dl = d * (np.pi / 2.0) / ARC_SAMPLES
    for cx, side in ((s2, -1), (-s2, +1), (s2 + g, +1), (-(s2 + g), -1)):
        # theta = 0 at the floor tangent point, pi/2 at the surface under metal.
        px = cx + side * d * np.sin(thetas)
        py = -d * np.cos(thetas)
        nx = side * np.sin(thetas)  # outward from the removal circle, into substrate
        ny = -np.cos(thetas)
        tx, ty = -ny, nx
        p_in1x, p_in1y = px + 0.5 * delta * nx, py + 0.5 * delta * ny
        p_in2x, p_in2y = px + 1.5 * delta * nx, py + 1.5 * delta * ny
        en = (
            _interp_phi(mesh, phi, p_in1x, p_in1y)
            - _interp_phi(mesh, phi, p_in2x, p_in2y)
        ) / delta
        pax, pay = px + delta * nx + 0.5 * delta * tx, py + delta * ny + 0.5 * delta * ty
        pbx, pby = px + delta * nx - 0.5 * delta * tx, py + delta * ny - 0.5 * delta * ty
        et = (_interp_phi(mesh, phi, pax, pay) - _interp_phi(mesh, phi, pbx, pby)) / delta
        in2 += float((en**2).sum()) * dl
        it2 += float((et**2).sum()) * dl
    return it2, in2


def participation_ratios(
    solution: FieldSolution,
    model: CrossSectionModel,
    reference: "ParticipationReport | None" = None,
) -> ParticipationReport:
    """Participation report from a converged solve.

    ``reference`` (a coarser-mesh report of the same model) sets the
    estimated discretization error from the observed p_MS shift.
    """
    if not solution.converged:
        raise SolverError("participation requested on a non-converged solution")
    mesh = solution.mesh
    phi = solution.phi
    er = model.cpw.substrate_eps_r
    u_tot = solution.total_energy_J_per_m

    t_ms = model.layer_thickness_nm["MS"] * 1e-3
    t_sa = model.layer_thickness_nm["SA"] * 1e-3
    t_ma = model.layer_thickness_nm["MA"] * 1e-3
    e_ms = model.layer_eps["MS"]
    e_sa = model.layer_eps["SA"]
    e_ma = model.layer_eps["MA"]

    ms_n2 = _ms_integral(mesh, phi, model) if t_ms > 0 else 0.0
    ma_n2 = _ma_integrals(mesh, phi, model) if t_ma > 0 else 0.0
    if t_sa > 0:
        sa_t2, sa_n2 = _sa_integrals(mesh, phi, model)
    else:
        sa_t2 = sa_n2 = 0.0

    u_ms = 0.5 * EPS0 * t_ms * (er**2 / e_ms) * ms_n2
    u_sa = 0.5 * EPS0 * t_sa * (e_sa * sa_t2 + (er**2 / e_sa) * sa_n2)
    u_ma = 0.5 * EPS0 * t_ma * (1.0 / e_ma) * ma_n2

    # Unperturbed energy of the shells the layers replace (host material).
    shell_ms = 0.5 * EPS0 * t_ms * er * ms_n2
    shell_sa = 0.5 * EPS0 * t_sa * er * (sa_t2 + sa_n2)
    shell_ma = 0.5 * EPS0 * t_ma * 1.0 * ma_n2

    p_sub = (solution.substrate_energy_J_per_m - shell_ms - shell_sa) / u_tot
    p_vac = (solution.vacuum_energy_J_per_m - shell_ma) / u_tot

    report = ParticipationReport(
        p_ms=u_ms / u_tot,
        p_sa=u_sa / u_tot,
        p_ma=u_ma / u_tot,
        p_substrate=p_sub,
        p_vacuum=p_vac,
        capacitance_fF_per_um=solution.capacitance_fF_per_um,
        mesh_cells=mesh.cell_count,
        refinement=mesh.refinement,
        estimated_discretization_error=(
            None
            if reference is None
            else abs(reference.p_ms - u_ms / u_tot) / max(u_ms / u_tot, 1e-30)
        ),
        layer_thickness_nm=dict(model.layer_thickness_nm),
        layer_eps=dict(model.layer_eps),
    )
    return report


def export_field_map(solution: FieldSolution, path, fmt: str = "csv") -> None:
    """Write potential and |E| on the mesh nodes as CSV or structured-grid VTK."""
    if not solution.converged:
        raise SolverError("field-map export requested on a non-converged solution")
    mesh = solution.mesh
    _, _, emag = nodal_field(mesh, solution.phi)
    emag_si = emag * 1e6  # V/um -> V/m
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x_um", "y_um", "phi_V", "Emag_V_per_m"])
            for j in range(mesh.ny):
                for i in range(mesh.nx):
                    writer.writerow(
                        [
                            f"{mesh.x_um[i]:.9g}",
                            f"{mesh.y_um[j]:.9g}",
                            f"{solution.phi[j, i]:.9g}",
                            f"{emag_si[j, i]:.9g}",
                        ]
                    )
    elif fmt == "vtk":
        with open(path, "w") as fh:
            fh.write("# vtk DataFile Version 3.0\n")
            fh.write("cpw cross-section field map\n")
            fh.write("ASCII\nDATASET RECTILINEAR_GRID\n")
            fh.write(f"DIMENSIONS {mesh.nx} {mesh.ny} 1\n")
            fh.write(f"X_COORDINATES {mesh.nx} double\n")
            fh.write(" ".join(f"{v:.9g}" for v in mesh.x_um) + "\n")
            fh.write(f"Y_COORDINATES {mesh.ny} double\n")
            fh.write(" ".join(f"{v:.9g}" for v in mesh.y_um) + "\n")
            fh.write("Z_COORDINATES 1 double\n0\n")
            fh.write(f"POINT_DATA {mesh.node_count}\n")
            fh.write("SCALARS phi_V double 1\nLOOKUP_TABLE default\n")
            fh.write(" ".join(f"{v:.9g}" for v in solution.phi.ravel()) + "\n")
            fh.write("SCALARS Emag_V_per_m double 1\nLOOKUP_TABLE default\n")
            fh.write(" ".join(f"{v:.9g}" for v in emag_si.ravel()) + "\n")
    else:
        raise ValueError(f"unknown field-map format {fmt!r}")


def format_participation_table(report: ParticipationReport) -> str:
    """Aligned text table, columns ordered p_MS, p_SA, p_MA, p_substrate, C."""
    headers = ["p_MS [%]", "p_SA [%]", "p_MA [%]", "p_substrate [%]", "C [fF/um]"]
    values = [
        f"{report.p_ms * 100:.4g}",
        f"{report.p_sa * 100:.4g}",
        f"{report.p_ma * 100:.4g}",
        f"{report.p_substrate * 100:.4g}",
        f"{report.capacitance_fF_per_um:.4g}",
    ]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    head = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
    row = "  ".join(v.rjust(w) for v, w in zip(values, widths))
    return head + "\n" + row + "\n"
