"""Tests for notch synthesis, fitting, dip detection, and trace input."""

import math

import numpy as np
import pytest

from cpwkit.errors import FitError, NoResonanceError, TraceParseError
from cpwkit.fitting import (
    PARAM_NAMES,
    FitResult,
    NotchModelParams,
    S21Trace,
    find_dips,
    fit_all_dips,
    fit_notch,
    initial_guess,
    multiplexed_synthesize,
    notch_model,
    notch_model_jacobian,
    read_trace,
    synthesize_s21,
    write_trace_csv,
)

TABLE = [
    ("r0", 4.6, 495_000),
    ("r1", 5.0, 496_000),
    ("r2", 5.4, 497_000),
    ("r3", 5.8, 499_000),
    ("r4", 6.2, 497_000),
    ("r5", 6.6, 498_000),
    ("r6", 7.0, 499_000),
    ("r7", 7.4, 512_000),
]


def critical_params(f0=4.6, qc=495_000.0, **kw) -> NotchModelParams:
    return NotchModelParams(f0_ghz=f0, q_internal=qc, q_coupling=qc, **kw)


def dense_grid(p: NotchModelParams, halfwidths=10.0, points=2001) -> np.ndarray:
    hw = halfwidths * p.f0_ghz / p.q_loaded
    return np.linspace(p.f0_ghz - hw, p.f0_ghz + hw, points)


class TestModel:
    def test_critical_coupling_dip_is_half(self):
        p = critical_params()
        s = notch_model(p.as_vector(), np.array([p.f0_ghz]))
        assert s[0] == pytest.approx(0.5, rel=1e-12)

    def test_far_detuned_baseline(self):
        p = critical_params()
        f = p.f0_ghz * (1 + 1e-2)  # thousands of linewidths away
        s = notch_model(p.as_vector(), np.array([f]))
        assert abs(s[0]) == pytest.approx(1.0, abs=1e-4)

    def test_half_depth_power_width(self):
        p = critical_params()  # r0: Ql = 247500
        f = dense_grid(p, halfwidths=4.0, points=400001)
        mag2 = np.abs(notch_model(p.as_vector(), f)) ** 2
        level = 0.5 * (1.0 + mag2.min())
        below = f[mag2 < level]
        width_mhz = (below[-1] - below[0]) * 1e3
        expected = 4600.0 / 247500.0  # ~0.0186 MHz
        assert width_mhz == pytest.approx(expected, rel=1e-2)

    def test_loaded_q_identity(self):
        p = NotchModelParams(f0_ghz=5.0, q_internal=3e5, q_coupling=7e5)
        assert 1.0 / p.q_loaded == pytest.approx(1.0 / 3e5 + 1.0 / 7e5, rel=1e-15)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            NotchModelParams(f0_ghz=-1, q_internal=1e5, q_coupling=1e5)
        with pytest.raises(ValueError):
            NotchModelParams(f0_ghz=5, q_internal=1e5, q_coupling=1e5, mismatch_phi_rad=2.0)


class TestJacobian:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(42)
        p = NotchModelParams(
            f0_ghz=5.2,
            q_internal=4.1e5,
            q_coupling=6.3e5,
            mismatch_phi_rad=0.21,
            background_amplitude=0.93,
            background_phase_rad=0.37,
            cable_delay_ns=31.0,
        )
        v = p.as_vector()
        f = dense_grid(p, halfwidths=5.0, points=41) + rng.uniform(
            -1e-7, 1e-7
        )  # random interior offsets
        f = np.sort(f)
        analytic = notch_model_jacobian(v, f)
        # Steps sized to each parameter's feature scale (f0 moves in units of
        # the linewidth, everything else relative) so truncation stays tiny.
        steps = np.abs(v) * 1e-6
        steps[0] = (p.f0_ghz / p.q_loaded) * 1e-4
        steps[3] = 1e-6
        for k in range(7):
            dv = np.zeros(7)
            dv[k] = steps[k]
            fd = (notch_model(v + dv, f) - notch_model(v - dv, f)) / (2 * steps[k])
            scale = np.max(np.abs(analytic[:, k])) + 1e-30
            assert np.max(np.abs(fd - analytic[:, k])) / scale < 1e-6


class TestSynthesize:
    def test_noise_is_seeded(self):
        p = critical_params()
        f = dense_grid(p)
        a = synthesize_s21(p, f, noise_std=1e-3, seed=7)
        b = synthesize_s21(p, f, noise_std=1e-3, seed=7)
        c = synthesize_s21(p, f, noise_std=1e-3, seed=8)
        assert np.array_equal(a.s21, b.s21)
        assert not np.array_equal(a.s21, c.s21)

    def test_single_resonator_multiplexed_identity(self):
        p = critical_params(f0=5.0)
        multi = multiplexed_synthesize([p], (4.9, 5.1), 4001)
        single = synthesize_s21(p, multi.frequencies_ghz)
        assert np.allclose(multi.s21, single.s21, rtol=0, atol=1e-14)

    def test_trace_validation(self):
        with pytest.raises(ValueError):
            S21Trace(np.array([1.0, 1.0, 2.0]), np.zeros(3, dtype=complex))
        with pytest.raises(ValueError):
            S21Trace(np.array([1.0, 2.0]), np.zeros(3, dtype=complex))


class TestFit:
    @pytest.mark.parametrize("label,f0,qc", TABLE)
    def test_noiseless_round_trip(self, label, f0, qc):
        truth = NotchModelParams(
            f0_ghz=f0,
            q_internal=qc,
            q_coupling=qc,
            mismatch_phi_rad=0.1,
            background_amplitude=0.97,
            background_phase_rad=-0.4,
            cable_delay_ns=42.0,
        )
        trace = synthesize_s21(truth, dense_grid(truth))
        fit = fit_notch(trace)
        assert fit.params.q_internal == pytest.approx(truth.q_internal, rel=1e-4)
        assert fit.params.q_coupling == pytest.approx(truth.q_coupling, rel=1e-4)
        assert fit.params.f0_ghz == pytest.approx(truth.f0_ghz, rel=1e-6)

    def test_monte_carlo_median_error_below_one_percent(self):
        truth = critical_params(f0=4.6, qc=5e5)
        f = dense_grid(truth, halfwidths=10.0, points=1001)
        errors = []
        for seed in range(100):
            trace = synthesize_s21(truth, f, noise_std=1e-3, seed=seed)
            fit = fit_notch(trace)
            errors.append(abs(fit.params.q_internal - 5e5) / 5e5)
        assert float(np.median(errors)) < 0.01

    def test_flat_trace_raises(self):
        f = np.linspace(4.0, 5.0, 64)
        trace = S21Trace(f, np.full(64, 0.9 + 0.1j))
        with pytest.raises(NoResonanceError):
            fit_notch(trace)

    def test_too_few_points(self):
        p = critical_params()
        trace = synthesize_s21(p, dense_grid(p, points=8))
        with pytest.raises(FitError):
            fit_notch(trace)

    def test_frequency_shift_invariance(self):
        # Same Qi/Qc at shifted center frequencies: the recovered Qi must not
        # depend on where the resonance sits on the axis.
        results = []
        for shift in (0.0, 0.35, 1.85):
            truth = critical_params(f0=5.0 + shift, qc=4e5)
            fit = fit_notch(synthesize_s21(truth, dense_grid(truth)))
            results.append(fit.params.q_internal)
            assert fit.params.f0_ghz == pytest.approx(truth.f0_ghz, rel=1e-6)
        for qi in results[1:]:
            assert qi == pytest.approx(results[0], rel=1e-4)

    def test_complex_scale_invariance(self):
        truth = critical_params(f0=5.0, qc=4e5)
        f = dense_grid(truth)
        clean = synthesize_s21(truth, f)
        scaled = S21Trace(f, clean.s21 * (0.51 * np.exp(1j * 1.1)))
        a = fit_notch(clean)
        b = fit_notch(scaled)
        assert b.params.q_internal == pytest.approx(a.params.q_internal, rel=1e-4)
        assert b.params.background_amplitude == pytest.approx(
            a.params.background_amplitude * 0.51, rel=1e-4
        )

    def test_uncertainty_minimal_at_critical_coupling(self):
        # Relative Qi uncertainty from the Jacobian at fixed noise, for
        # Qc/Qi in {0.1, 1, 10}: smallest at the critical point.
        qi = 5e5
        rel_sigma = {}
        for ratio in (0.1, 1.0, 10.0):
            p = NotchModelParams(f0_ghz=5.0, q_internal=qi, q_coupling=qi * ratio)
            f = dense_grid(p, halfwidths=10.0, points=801)
            j = notch_model_jacobian(p.as_vector(), f)
            js = np.vstack([j.real, j.imag])
            cov = np.linalg.inv(js.T @ js) * (1e-3) ** 2
            rel_sigma[ratio] = math.sqrt(cov[1, 1]) / qi
        assert rel_sigma[1.0] < rel_sigma[0.1]
        assert rel_sigma[1.0] < rel_sigma[10.0]

    def test_reported_loaded_q_identity(self):
        truth = critical_params(f0=5.4, qc=497_000)
        fit = fit_notch(synthesize_s21(truth, dense_grid(truth)))
        lhs = 1.0 / fit.q_loaded
        rhs = 1.0 / fit.params.q_internal + 1.0 / fit.params.q_coupling
        assert lhs == pytest.approx(rhs, rel=1e-15)


class TestMultiplexed:
    def make_chip(self):
        return [
            NotchModelParams(f0_ghz=f0, q_internal=qc, q_coupling=qc)
            for _, f0, qc in TABLE
        ]

    def test_eight_dips_detected_at_schedule(self):
        chip = self.make_chip()
        trace = multiplexed_synthesize(chip, (4.4, 7.6), 1_600_001)
        dips = find_dips(trace)
        assert len(dips) == 8
        found = trace.frequencies_ghz[dips]
        for p, f_found in zip(chip, sorted(found)):
            assert abs(f_found - p.f0_ghz) <= p.f0_ghz / p.q_loaded

    def test_fit_all_dips_recovers_schedule(self):
        chip = self.make_chip()
        trace = multiplexed_synthesize(chip, (4.4, 7.6), 1_600_001)
        fits = fit_all_dips(trace)
        assert len(fits) == 8
        for p, fit in zip(chip, sorted(fits, key=lambda r: r.params.f0_ghz)):
            assert fit.params.f0_ghz == pytest.approx(p.f0_ghz, abs=p.linewidth_mhz * 1e-3)

    def test_merged_pair_warns(self):
        p1 = critical_params(f0=5.0, qc=4e5)
        lw = p1.f0_ghz / p1.q_loaded
        p2 = critical_params(f0=5.0 + lw, qc=4e5)
        trace = multiplexed_synthesize([p1, p2], (5.0 - 300 * lw, 5.0 + 300 * lw), 40001)
        fits = fit_all_dips(trace)
        assert any(fit.warnings for fit in fits)

    def test_resonance_outside_band_rejected(self):
        with pytest.raises(ValueError):
            multiplexed_synthesize([critical_params(f0=8.0)], (4.0, 7.6), 1001)


class TestReadTrace:
    def test_minimal_ri_s2p(self, tmp_path):
        content = (
            "! minimal trace\n"
            "# GHz S RI R 50\n"
            "4.0 0.1 0.0 0.9 -0.1 0.0 0.0 0.1 0.0\n"
            "4.5 0.1 0.0 0.8 -0.2 0.0 0.0 0.1 0.0\n"
            "5.0 0.1 0.0 0.7 -0.3 0.0 0.0 0.1 0.0\n"
        )
        path = tmp_path / "three.s2p"
        path.write_text(content)
        trace = read_trace(path)
        assert len(trace) == 3
        assert trace.s21[1] == pytest.approx(0.8 - 0.2j)

    def test_db_format_conversion(self, tmp_path):
        content = "# MHz S DB R 50\n4000 0 0 -6.0206 90 0 0 0 0\n5000 0 0 -6.0206 90 0 0 0 0\n"
        path = tmp_path / "db.s2p"
        path.write_text(content)
        trace = read_trace(path)
        assert trace.frequencies_ghz[0] == pytest.approx(4.0)
        assert trace.s21[0] == pytest.approx(0.5j, rel=1e-4)

    def test_ma_format_default(self, tmp_path):
        # No option line: Touchstone defaults are GHz and magnitude-angle.
        path = tmp_path / "ma.s2p"
        path.write_text("4.0 1 0 0.5 180 0 0 1 0\n4.1 1 0 0.5 180 0 0 1 0\n")
        trace = read_trace(path)
        assert trace.s21[0] == pytest.approx(-0.5, rel=1e-9)

    def test_descending_csv_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("freq_GHz,re,im\n5.0,1,0\n4.0,1,0\n")
        with pytest.raises(TraceParseError):
            read_trace(path)

    def test_csv_round_trip(self, tmp_path):
        p = critical_params()
        trace = synthesize_s21(p, dense_grid(p, points=64))
        path = tmp_path / "trace.csv"
        write_trace_csv(trace, path)
        back = read_trace(path)
        assert np.allclose(back.frequencies_ghz, trace.frequencies_ghz, rtol=1e-12)
        assert np.allclose(back.s21, trace.s21, rtol=1e-9)

    def test_csv_header_required(self, tmp_path):
        path = tmp_path / "noheader.csv"
        path.write_text("4.0,1,0\n4.1,1,0\n")
        with pytest.raises(TraceParseError):
            read_trace(path)

    def test_malformed_s2p_reports_line(self, tmp_path):
        path = tmp_path / "bad.s2p"
        path.write_text("# GHz S RI R 50\n4.0 0.1 0.0 0.9\n")
        with pytest.raises(TraceParseError) as err:
            read_trace(path)
        assert err.value.line_number == 2


class TestInitialGuess:
    def test_guess_close_to_truth(self):
        truth = NotchModelParams(
            f0_ghz=5.8,
            q_internal=4.99e5,
            q_coupling=4.99e5,
            background_amplitude=0.9,
            background_phase_rad=0.2,
            cable_delay_ns=25.0,
        )
        trace = synthesize_s21(truth, dense_grid(truth, halfwidths=12.0, points=3001))
        guess = initial_guess(trace)
        assert guess.f0_ghz == pytest.approx(truth.f0_ghz, rel=1e-5)
        assert guess.background_amplitude == pytest.approx(0.9, rel=0.05)
        # The narrow window makes the edge-slope delay estimate coarse; it
        # only needs to land in the fit's convergence basin.
        assert guess.cable_delay_ns == pytest.approx(25.0, rel=0.6)
        assert 0.2 * truth.q_loaded < guess.q_loaded < 5 * truth.q_loaded
