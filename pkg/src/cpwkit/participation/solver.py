"""Electrostatic solve on the nonuniform rectilinear mesh.

Vertex-centered finite volumes: each cell contributes half-edge conductances
eps*dy/(2 dx) (and the transpose) to its four corner nodes, which yields the
standard 5-point scheme for div(eps grad phi) = 0 and, crucially, an energy
form that sums cell by cell to exactly 1/2 phi^T K phi.  That makes the
region energy bookkeeping exact: substrate + vacuum participations add to
one by construction.

The reduced system is symmetric positive definite and is solved with
conjugate gradients preconditioned by classical (Ruge-Stuben) algebraic
multigrid; small systems go through a direct sparse factorization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pyamg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.constants import epsilon_0 as EPS0

from cpwkit.errors import SolverError
from cpwkit.participation.mesh import Mesh
from cpwkit.participation.model import CrossSectionModel

#: Below this many unknowns a direct factorization beats the AMG setup.
DIRECT_SOLVE_LIMIT = 40_000


@dataclass
class FieldSolution:
    """Potential on the mesh plus the derived energy bookkeeping."""

    mesh: Mesh
    phi: np.ndarray  # (ny, nx) volts
    converged: bool
    iterations: int
    residual: float
    cell_energy: np.ndarray = field(repr=False, default=None)  # (ny-1, nx-1), V^2 units
    total_energy_J_per_m: float = 0.0
    substrate_energy_J_per_m: float = 0.0
    vacuum_energy_J_per_m: float = 0.0

    @property
    def capacitance_fF_per_um(self) -> float:
        """C = 2 U / V^2 with V = 1 V, converted from F/m."""
        return 2.0 * self.total_energy_J_per_m * 1e9

    @property
    def energy_density_J_per_m3_like(self) -> np.ndarray:
        """Cell energy per unit cross-section area (J/m per um^2)."""
        dx = self.mesh.dx_um
        dy = self.mesh.dy_um
        area = dy[:, None] * dx[None, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            return 0.5 * EPS0 * self.cell_energy / area


def _edge_conductances(mesh: Mesh):
    """Per-edge conductances of the 5-point stencil (numpy arrays)."""
    dx = mesh.dx_um
    dy = mesh.dy_um
    eps = mesh.cell_eps  # (ncy, ncx), zero inside metal
    ncy, ncx = eps.shape

    # Horizontal edges: between (i,j) and (i+1,j) for j in 0..ny-1.
    gx = np.zeros((ncy + 1, ncx))
    gx[1:, :] += eps * (dy[:, None] / 2.0)  # cell above contributes to its bottom row
    gx[:-1, :] += eps * (dy[:, None] / 2.0)  # and to its top row
    gx /= dx[None, :]

    # Vertical edges: between (i,j) and (i,j+1) for i in 0..nx-1.
    gy = np.zeros((ncy, ncx + 1))
    gy[:, 1:] += eps * (dx[None, :] / 2.0)
    gy[:, :-1] += eps * (dx[None, :] / 2.0)
    gy /= dy[:, None]
    return gx, gy


def _stiffness(mesh: Mesh) -> sp.csr_matrix:
    nx, ny = mesh.nx, mesh.ny
    gx, gy = _edge_conductances(mesh)

    def node(j, i):
        return j * nx + i

    rows, cols, vals = [], [], []
    jj, ii = np.meshgrid(np.arange(ny), np.arange(nx - 1), indexing="ij")
    a = node(jj, ii).ravel()
    b = node(jj, ii + 1).ravel()
    w = gx.ravel()
    rows += [a, b, a, b]
    cols += [b, a, a, b]
    vals += [-w, -w, w, w]

    jj, ii = np.meshgrid(np.arange(ny - 1), np.arange(nx), indexing="ij")
    a = node(jj, ii).ravel()
    b = node(jj + 1, ii).ravel()
    w = gy.ravel()
    rows += [a, b, a, b]
    cols += [b, a, a, b]
    vals += [-w, -w, w, w]

    n = nx * ny
    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return K.tocsr()


def _cell_energy(mesh: Mesh, phi: np.ndarray) -> np.ndarray:
    """Per-cell quadratic energy (without the 1/2 eps0 prefactor).

    Summing this array reproduces phi^T K phi exactly.
    """
    dx = mesh.dx_um[None, :]
    dy = mesh.dy_um[:, None]
    eps = mesh.cell_eps
    d_bot = phi[:-1, 1:] - phi[:-1, :-1]
    d_top = phi[1:, 1:] - phi[1:, :-1]
    d_lef = phi[1:, :-1] - phi[:-1, :-1]
    d_rig = phi[1:, 1:] - phi[:-1, 1:]
    return eps * (
        (dy / (2.0 * dx)) * (d_bot**2 + d_top**2)
        + (dx / (2.0 * dy)) * (d_lef**2 + d_rig**2)
    )


def solve_potential(
    mesh: Mesh,
    model: CrossSectionModel | None = None,
    tol: float = 1e-10,
    max_iter: int = 600,
) -> FieldSolution:
    """Solve div(eps grad phi) = 0 with the mesh's Dirichlet data.

    Residual target is ||K x - b|| < tol * ||b||.  Raises SolverError with the
    residual history if the iteration cap is hit.
    """
    K = _stiffness(mesh)
    fixed = mesh.dirichlet.ravel()
    free = ~fixed
    phi_fixed = mesh.dirichlet_value.ravel()[fixed]

    A = K[free][:, free].tocsr()
    b = -K[free][:, fixed] @ phi_fixed

    n_free = int(free.sum())
    history: list[float] = []
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        x = np.zeros(n_free)
        iterations = 0
    elif n_free <= DIRECT_SOLVE_LIMIT:
        x = spla.spsolve(A.tocsc(), b)
        iterations = 1
    else:
        ml = pyamg.ruge_stuben_solver(A, max_coarse=200)
        M = ml.aspreconditioner(cycle="V")

        def track(xk):
            history.append(float(np.linalg.norm(b - A @ xk)) / b_norm)

        x, info = spla.cg(A, b, rtol=tol, atol=0.0, maxiter=max_iter, M=M, callback=track)
        if info != 0:
            raise SolverError(
                f"CG failed to reach {tol:g} within {max_iter} iterations "
                f"(last residual {history[-1] if history else float('nan'):.3e})",
                residual_history=history,
            )
        iterations = len(history)

    residual = float(np.linalg.norm(b - A @ x) / b_norm) if b_norm else 0.0
    if residual > max(tol * 10, 1e-9):
        raise SolverError(
            f"solution residual {residual:.3e} exceeds target {tol:g}",
            residual_history=history,
        )

    phi = np.empty(mesh.node_count)
    phi[fixed] = phi_fixed
    phi[free] = x
    phi = phi.reshape(mesh.ny, mesh.nx)

    cell_e = _cell_energy(mesh, phi)
    u_total = 0.5 * EPS0 * float(cell_e.sum())
    bracket = np.where(mesh.cell_eps > 0, cell_e / np.where(mesh.cell_eps > 0, mesh.cell_eps, 1.0), 0.0)
    er = mesh.frac_substrate * (model.cpw.substrate_eps_r if model else _infer_er(mesh))
    u_sub = 0.5 * EPS0 * float((bracket * er).sum())
    u_vac = 0.5 * EPS0 * float(
        (bracket * np.where(mesh.metal_cell, 0.0, 1.0 - mesh.frac_substrate)).sum()
    )

    return FieldSolution(
        mesh=mesh,
        phi=phi,
        converged=True,
        iterations=iterations,
        residual=residual,
        cell_energy=cell_e,
        total_energy_J_per_m=u_total,
        substrate_energy_J_per_m=u_sub,
        vacuum_energy_J_per_m=u_vac,
    )


def _infer_er(mesh: Mesh) -> float:
    """Substrate permittivity back from the material grid (pure-substrate cells)."""
    pure = mesh.frac_substrate >= 1.0 - 1e-12
    if not pure.any():
        return 1.0
    return float(mesh.cell_eps[pure].max())


def nodal_field(mesh: Mesh, phi: np.ndarray):
    """Ex, Ey, |E| at the nodes (V/um), central differences inside, one-sided at edges."""
    x, y = mesh.x_um, mesh.y_um
    ex = -np.gradient(phi, x, axis=1)
    ey = -np.gradient(phi, y, axis=0)
    return ex, ey, np.hypot(ex, ey)
