"""Tests for the cross-section mesh, field solver, and participation reports."""

import math

import numpy as np
import pytest
from scipy.constants import epsilon_0 as EPS0

from cpwkit.cpw import CpwGeometry, line_properties
from cpwkit.errors import MeshBudgetError, SolverError
from cpwkit.participation import (
    CrossSectionModel,
    Mesh,
    build_mesh,
    export_field_map,
    participation_ratios,
    solve_potential,
)
from cpwkit.participation.solver import nodal_field


def no_layer_model(**kw) -> CrossSectionModel:
    zeros = {"MS": 0.0, "SA": 0.0, "MA": 0.0}
    eps = {"MS": 5.0, "SA": 10.0, "MA": 10.0}
    return CrossSectionModel(layer_thickness_nm=zeros, layer_eps=eps, **kw)


@pytest.fixture(scope="module")
def default_solution():
    model = CrossSectionModel()
    mesh = build_mesh(model, 2)
    return model, mesh, solve_potential(mesh, model)


class TestMesh:
    def test_lines_on_conductor_edges(self):
        mesh = build_mesh(CrossSectionModel(), 0)
        for target in (-6.0, -3.0, 3.0, 6.0):
            assert np.min(np.abs(mesh.x_um - target)) < 1e-12

    def test_lines_on_material_levels(self):
        mesh = build_mesh(CrossSectionModel(), 0)
        for target in (0.0, 0.1, -0.1):
            assert np.min(np.abs(mesh.y_um - target)) < 1e-12

    def test_refinement_cell_count_ratio(self):
        counts = [build_mesh(CrossSectionModel(), k).cell_count for k in range(4)]
        for lo, hi in zip(counts, counts[1:]):
            assert 1.5 * lo <= hi <= 4 * lo

    def test_refinement_two_within_budget(self):
        mesh = build_mesh(CrossSectionModel(), 2)
        assert mesh.cell_count <= 4_000_000

    def test_budget_error_suggests_level(self):
        with pytest.raises(MeshBudgetError) as err:
            build_mesh(CrossSectionModel(), 3, cell_budget=10_000)
        assert err.value.suggested_refinement is not None
        assert err.value.suggested_refinement < 3

    def test_mirror_symmetric_x(self):
        mesh = build_mesh(CrossSectionModel(), 1)
        assert np.allclose(mesh.x_um, -mesh.x_um[::-1], atol=1e-12)

    def test_seed_cells_at_interface(self):
        # Smallest layer is 3 nm; the first cell at the surface must be <= t/2.
        mesh = build_mesh(CrossSectionModel(), 0)
        j0 = mesh.y_index(0.0)
        below = mesh.y_um[j0] - mesh.y_um[j0 - 1]
        above = mesh.y_um[j0 + 1] - mesh.y_um[j0]
        assert below <= 1.5e-3 + 1e-12
        assert above <= 1.5e-3 + 1e-12


def uniform_mesh(x, y, eps=1.0):
    ncy, ncx = y.size - 1, x.size - 1
    return Mesh(
        x_um=x,
        y_um=y,
        cell_eps=np.full((ncy, ncx), eps),
        frac_substrate=np.zeros((ncy, ncx)),
        metal_cell=np.zeros((ncy, ncx), dtype=bool),
        dirichlet=np.zeros((y.size, x.size), dtype=bool),
        dirichlet_value=np.zeros((y.size, x.size)),
        refinement=0,
    )


class TestSolverAnalytic:
    def test_parallel_plate_linear_potential(self):
        # Plates spanning the full domain: top at 1 V, bottom at 0 V, sides free.
        x = np.linspace(0.0, 1.0, 17)
        y = np.concatenate([[0.0], np.sort(np.random.default_rng(0).uniform(0.05, 0.95, 21)), [1.0]])
        mesh = uniform_mesh(x, y, eps=2.5)
        mesh.dirichlet[0, :] = True
        mesh.dirichlet[-1, :] = True
        mesh.dirichlet_value[-1, :] = 1.0
        sol = solve_potential(mesh)
        expected = np.broadcast_to(mesh.y_um[:, None], sol.phi.shape)
        assert np.allclose(sol.phi, expected, atol=1e-10)
        _, _, emag = nodal_field(mesh, sol.phi)
        assert np.allclose(emag, 1.0, rtol=1e-8)

    def test_parallel_plate_capacitance(self):
        x = np.linspace(0.0, 1.0, 9)
        y = np.linspace(0.0, 1.0, 9)
        mesh = uniform_mesh(x, y, eps=3.0)
        mesh.dirichlet[0, :] = True
        mesh.dirichlet[-1, :] = True
        mesh.dirichlet_value[-1, :] = 1.0
        sol = solve_potential(mesh)
        # C per length = eps0 * eps * width / height (in F/m), here eps*eps0.
        assert sol.capacitance_fF_per_um == pytest.approx(3.0 * EPS0 * 1e9, rel=1e-10)


def square_coax_bem(inner_half, outer_half, n_per_edge=160):
    """Independent boundary-element oracle for the square-in-square capacitance.

    Constant-strength panels with collocation at midpoints; panel lengths are
    graded toward the corners where the charge density is singular.
    """

    def graded_edge(p0, p1, n):
        # Symmetric grading clustered at both endpoints (beta distribution).
        t = 0.5 * (1 - np.cos(np.pi * np.linspace(0.0, 1.0, n + 1)))
        return p0[None, :] + t[:, None] * (p1 - p0)[None, :]

    def square_panels(half, n):
        corners = np.array(
            [[-half, -half], [half, -half], [half, half], [-half, half]]
        )
        pts = []
        for k in range(4):
            seg = graded_edge(corners[k], corners[(k + 1) % 4], n)
            pts.append(seg[:-1])
        pts = np.vstack(pts)
        nxt = np.roll(pts, -1, axis=0)
        return pts, nxt

    a0, a1 = square_panels(inner_half, n_per_edge)
    b0, b1 = square_panels(outer_half, n_per_edge)
    starts = np.vstack([a0, b0])
    ends = np.vstack([a1, b1])
    n_inner = a0.shape[0]

    mids = 0.5 * (starts + ends)
    tangents = ends - starts
    lengths = np.hypot(tangents[:, 0], tangents[:, 1])
    tangents /= lengths[:, None]

    # Influence integral of ln r over each panel, evaluated at each midpoint.
    rel = mids[:, None, :] - starts[None, :, :]
    xloc = rel[..., 0] * tangents[None, :, 0] + rel[..., 1] * tangents[None, :, 1]
    yloc = -rel[..., 0] * tangents[None, :, 1] + rel[..., 1] * tangents[None, :, 0]
    u1 = xloc
    u2 = xloc - lengths[None, :]
    r1 = np.hypot(u1, yloc)
    r2 = np.hypot(u2, yloc)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = (
            u1 * np.where(r1 > 0, np.log(np.where(r1 > 0, r1, 1.0)), 0.0)
            - u2 * np.where(r2 > 0, np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
            - lengths[None, :]
            + np.abs(yloc) * (np.arctan2(u1, np.abs(yloc)) - np.arctan2(u2, np.abs(yloc)))
        )
    influence = -term / (2.0 * math.pi)

    rhs = np.zeros(starts.shape[0])
    rhs[:n_inner] = 1.0
    sigma = np.linalg.solve(influence, rhs)
    q_inner = float((sigma[:n_inner] * lengths[:n_inner]).sum())
    return q_inner * EPS0  # F/m


class TestSolverBenchmark:
    def test_square_coax_capacitance(self):
        inner_half, outer_half = 0.5, 1.0
        c_bem = square_coax_bem(inner_half, outer_half)

        # Finite-difference solve of the same geometry.
        def lines():
            seed, ratio = 1e-3, 1.25
            pieces = [np.array([0.0])]
            # grade from the inner conductor edge outward both ways
            for a, b in [(-outer_half, -inner_half), (-inner_half, 0.0)]:
                left = []
                h, pos = seed, b
                while pos - h > a + seed:
                    pos -= h
                    left.append(pos)
                    h *= ratio
                pieces.append(np.array(sorted(left + [a, b])))
            v = np.unique(np.concatenate(pieces))
            return np.unique(np.concatenate([v, -v[::-1]]))

        g = lines()
        mesh = uniform_mesh(g, g.copy())
        X, Y = np.meshgrid(mesh.x_um, mesh.y_um)
        inner = (np.abs(X) <= inner_half + 1e-12) & (np.abs(Y) <= inner_half + 1e-12)
        outer = (
            (np.abs(X) >= outer_half - 1e-12) | (np.abs(Y) >= outer_half - 1e-12)
        )
        mesh.dirichlet[inner | outer] = True
        mesh.dirichlet_value[inner] = 1.0
        # mask interior metal cells so they hold no energy
        XC, YC = np.meshgrid(
            0.5 * (mesh.x_um[:-1] + mesh.x_um[1:]), 0.5 * (mesh.y_um[:-1] + mesh.y_um[1:])
        )
        mesh.metal_cell[(np.abs(XC) < inner_half) & (np.abs(YC) < inner_half)] = True
        mesh.cell_eps[mesh.metal_cell] = 0.0

        sol = solve_potential(mesh)
        c_fd = 2.0 * sol.total_energy_J_per_m
        assert abs(c_fd - c_bem) / c_bem < 0.005

    def test_determinism(self):
        model = CrossSectionModel()
        mesh = build_mesh(model, 1)
        a = solve_potential(mesh, model)
        b = solve_potential(mesh, model)
        assert np.array_equal(a.phi, b.phi)


class TestCpwSolution:
    def test_conductor_potentials(self, default_solution):
        model, mesh, sol = default_solution
        j0 = mesh.y_index(0.0)
        i_trace = mesh.x_index(0.0)
        assert sol.phi[j0, i_trace] == 1.0
        assert sol.phi[j0, mesh.x_index(mesh.x_um[-1])] == 0.0
        assert sol.total_energy_J_per_m > 0

    def test_capacitance_near_reference(self, default_solution):
        _, _, sol = default_solution
        assert abs(sol.capacitance_fF_per_um - 0.147) / 0.147 < 0.20

    def test_untrenched_capacitance_matches_analytic(self):
        geom = CpwGeometry(metal_thickness_um=0.0, trench_depth_nm=0.0)
        model = no_layer_model(cpw=geom)
        sol = solve_potential(build_mesh(model, 2), model)
        analytic = line_properties(geom).capacitance_fF_per_um
        assert abs(sol.capacitance_fF_per_um - analytic) / analytic < 0.03

    def test_energy_monotone_with_refinement(self):
        model = CrossSectionModel()
        energies = []
        for ref in range(3):
            sol = solve_potential(build_mesh(model, ref), model)
            energies.append(sol.total_energy_J_per_m)
        assert energies[0] > energies[1] > energies[2]

    def test_gap_energy_symmetry(self, default_solution):
        _, mesh, sol = default_solution
        xc = 0.5 * (mesh.x_um[:-1] + mesh.x_um[1:])
        left = sol.cell_energy[:, xc < 0].sum()
        right = sol.cell_energy[:, xc > 0].sum()
        assert abs(left - right) / right < 1e-6


class TestParticipation:
    def test_untrenched_conformal_split(self):
        geom = CpwGeometry(metal_thickness_um=0.0, trench_depth_nm=0.0)
        model = no_layer_model(cpw=geom)
        sol = solve_potential(build_mesh(model, 2), model)
        rep = participation_ratios(sol, model)
        oracle = 11.45 / (11.45 + 1.0)
        assert abs(rep.p_substrate - oracle) < 0.01
        assert rep.p_ms == rep.p_sa == rep.p_ma == 0.0

    def test_default_interface_hierarchy(self, default_solution):
        model, _, sol = default_solution
        rep = participation_ratios(sol, model)
        assert rep.p_ma < rep.p_sa < rep.p_ms
        assert 1.5 <= rep.p_ms / rep.p_sa <= 2.5
        assert 1.3e-3 <= rep.p_ms <= 5.2e-3
        assert abs(rep.p_substrate - 0.89) < 0.05

    def test_zero_thickness_layers_vanish(self):
        model = no_layer_model()
        sol = solve_potential(build_mesh(model, 1), model)
        rep = participation_ratios(sol, model)
        assert rep.p_ms == 0.0 and rep.p_sa == 0.0 and rep.p_ma == 0.0
        assert rep.p_substrate + rep.p_vacuum == pytest.approx(1.0, abs=1e-12)

    def test_layer_linearity(self):
        base = CrossSectionModel()
        thick = CrossSectionModel(
            layer_thickness_nm={"MS": 6.0, "SA": 6.0, "MA": 6.0}
        )
        mesh_b = build_mesh(base, 1)
        mesh_t = build_mesh(thick, 1)
        rep_b = participation_ratios(solve_potential(mesh_b, base), base)
        rep_t = participation_ratios(solve_potential(mesh_t, thick), thick)
        for attr in ("p_ms", "p_sa", "p_ma"):
            ratio = getattr(rep_t, attr) / getattr(rep_b, attr)
            assert abs(ratio - 2.0) < 0.02

    def test_scale_invariance(self):
        model = CrossSectionModel()
        scaled = model.scaled(2.0)
        rep = participation_ratios(solve_potential(build_mesh(model, 1), model), model)
        rep_s = participation_ratios(
            solve_potential(build_mesh(scaled, 1), scaled), scaled
        )
        for attr in ("p_ms", "p_sa", "p_ma", "p_substrate", "capacitance_fF_per_um"):
            a, b = getattr(rep, attr), getattr(rep_s, attr)
            assert abs(a - b) / abs(b) < 1e-6

    def test_trench_strictly_decreases_ms_and_substrate(self):
        values = []
        for depth in (0.0, 50.0, 100.0):
            model = CrossSectionModel(cpw=CpwGeometry(trench_depth_nm=depth))
            sol = solve_potential(build_mesh(model, 1), model)
            values.append(participation_ratios(sol, model))
        assert values[0].p_ms > values[1].p_ms > values[2].p_ms
        assert values[0].p_substrate > values[1].p_substrate > values[2].p_substrate

    def test_mesh_convergence_and_closure(self):
        model = CrossSectionModel()
        rep_prev = None
        reports = []
        for ref in (2, 3):
            sol = solve_potential(build_mesh(model, ref), model)
            rep_prev = participation_ratios(sol, model, reference=rep_prev)
            reports.append(rep_prev)
        delta = abs(reports[1].p_ms - reports[0].p_ms) / reports[1].p_ms
        assert delta < 0.05
        assert reports[1].estimated_discretization_error is not None
        bound = reports[1].estimated_discretization_error + 1e-3
        assert reports[1].closure_error < max(bound, 1e-2)

    def test_undercut_profile_reduces_ms(self, default_solution):
        model, _, sol = default_solution
        rep_vertical = participation_ratios(sol, model)
        undercut = CrossSectionModel(trench_profile="isotropic-undercut")
        sol_u = solve_potential(build_mesh(undercut, 2), undercut)
        rep_u = participation_ratios(sol_u, undercut)
        assert rep_u.p_ms < rep_vertical.p_ms


class TestExport:
    def test_csv_row_count(self, tmp_path, default_solution):
        _, mesh, sol = default_solution
        path = tmp_path / "field.csv"
        export_field_map(sol, path, fmt="csv")
        lines = path.read_text().strip().splitlines()
        assert len(lines) == mesh.node_count + 1
        assert lines[0] == "x_um,y_um,phi_V,Emag_V_per_m"

    def test_vtk_structure(self, tmp_path, default_solution):
        _, mesh, sol = default_solution
        path = tmp_path / "field.vtk"
        export_field_map(sol, path, fmt="vtk")
        text = path.read_text()
        assert "DATASET RECTILINEAR_GRID" in text
        assert f"DIMENSIONS {mesh.nx} {mesh.ny} 1" in text

    def test_parallel_plate_uniform_field_export(self, tmp_path):
        x = np.linspace(0.0, 1.0, 11)
        y = np.linspace(0.0, 1.0, 13)
        mesh = uniform_mesh(x, y)
        mesh.dirichlet[0, :] = True
        mesh.dirichlet[-1, :] = True
        mesh.dirichlet_value[-1, :] = 1.0
        sol = solve_potential(mesh)
        path = tmp_path / "pp.csv"
        export_field_map(sol, path)
        rows = path.read_text().strip().splitlines()[1:]
        emags = np.array([float(r.split(",")[3]) for r in rows])
        assert np.allclose(emags, emags[0], rtol=1e-8)

    def test_max_field_at_gap_edges(self, default_solution):
        model, mesh, sol = default_solution
        _, _, emag = nodal_field(mesh, sol.phi)
        free = ~mesh.dirichlet
        idx = np.unravel_index(np.argmax(np.where(free, emag, 0.0)), emag.shape)
        x_at = abs(mesh.x_um[idx[1]])
        y_at = mesh.y_um[idx[0]]
        near_edge = min(abs(x_at - 3.0), abs(x_at - 6.0)) < 0.5
        assert near_edge and -0.2 < y_at < 0.3

    def test_refuses_unknown_format(self, default_solution):
        _, _, sol = default_solution
        with pytest.raises(ValueError):
            export_field_map(sol, "/tmp/x.bin", fmt="bin")
