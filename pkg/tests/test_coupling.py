"""Tests for the inductive-coupling model, loss budget, and crosstalk proxy."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpwkit.coupling import (
    CouplerModel,
    LossBudget,
    coupler_length_for_qc,
    coupler_sweep,
    crosstalk_estimate,
    decay_rate,
    qc_of_coupler_length,
    tls_loss,
)
from cpwkit.cpw import CpwGeometry, line_properties
from cpwkit.errors import DesignRuleError

# Stock per-resonator schedule: (label, f0 MHz, printed decay rate MHz, Qc).
SCHEDULE = [
    ("r0", 4600, 0.0094, 495_000),
    ("r1", 5000, 0.0102, 496_000),
    ("r2", 5400, 0.0110, 497_000),
    ("r3", 5800, 0.0118, 499_000),
    ("r4", 6200, 0.0126, 497_000),
    ("r5", 6600, 0.0134, 498_000),
    ("r6", 7000, 0.0142, 499_000),
    ("r7", 7400, 0.0146, 512_000),
]


@pytest.fixture(scope="module")
def model():
    z0 = line_properties(CpwGeometry()).impedance_ohm
    return CouplerModel.calibrated(z0, z0)


class TestQcModel:
    def test_reproduces_calibration_point(self, model):
        lc_ref, qc_ref, f_ref = model.reference
        assert qc_of_coupler_length(model, lc_ref, f_ref) == pytest.approx(
            qc_ref, rel=1e-6
        )

    def test_inverse_square_law(self, model):
        qc1 = qc_of_coupler_length(model, 150.0, 5.0)
        qc2 = qc_of_coupler_length(model, 300.0, 5.0)
        assert qc2 == pytest.approx(qc1 / 4.0, rel=1e-12)

    def test_three_decades_over_32x_range(self, model):
        qc_lo = qc_of_coupler_length(model, 25.0, 4.6)
        qc_hi = qc_of_coupler_length(model, 800.0, 4.6)
        assert qc_lo / qc_hi >= 1000.0

    def test_monotone_decreasing(self, model):
        lengths = np.linspace(10, 1000, 50)
        qcs = [qc_of_coupler_length(model, lc, 4.6) for lc in lengths]
        assert all(a > b for a, b in zip(qcs, qcs[1:]))

    def test_loglog_slope_is_minus_two(self, model):
        lengths = np.geomspace(20, 640, 25)
        qcs = [qc_of_coupler_length(model, lc, 6.0) for lc in lengths]
        slope = np.polyfit(np.log(lengths), np.log(qcs), 1)[0]
        assert abs(slope + 2.0) < 1e-9

    @pytest.mark.parametrize("lc,f0", [(0.0, 5.0), (-1.0, 5.0), (100.0, 0.0)])
    def test_domain_errors(self, model, lc, f0):
        with pytest.raises(ValueError):
            qc_of_coupler_length(model, lc, f0)


class TestInverse:
    def test_round_trip(self, model):
        for lc in (30.0, 200.0, 555.0):
            qc = qc_of_coupler_length(model, lc, 5.8)
            assert coupler_length_for_qc(model, qc, 5.8) == pytest.approx(lc, rel=1e-9)

    def test_calibration_anchor(self, model):
        lc_ref, qc_ref, f_ref = model.reference
        assert coupler_length_for_qc(model, qc_ref, f_ref) == pytest.approx(
            lc_ref, rel=1e-9
        )

    def test_hundredfold_smaller_qc_needs_10x_length(self, model):
        lc_ref, qc_ref, f_ref = model.reference
        assert coupler_length_for_qc(model, qc_ref / 100.0, f_ref) == pytest.approx(
            10.0 * lc_ref, rel=1e-9
        )

    def test_minimum_feature_violation(self, model):
        # Absurdly weak coupling requires a sub-minimum coupler.
        with pytest.raises(DesignRuleError):
            coupler_length_for_qc(model, 1e15, 4.6)

    @given(st.floats(min_value=10.0, max_value=2000.0))
    @settings(max_examples=100, deadline=None)
    def test_mutual_inverse_property(self, lc):
        z0 = 50.0
        m = CouplerModel.calibrated(z0, z0)
        qc = qc_of_coupler_length(m, lc, 6.2)
        assert coupler_length_for_qc(m, qc, 6.2) == pytest.approx(lc, rel=1e-9)


class TestDecayRate:
    def test_table_rows_within_two_percent(self):
        for _, f0_mhz, kappa_printed, qc in SCHEDULE:
            kappa = decay_rate(f0_mhz, qc)
            assert abs(kappa - kappa_printed) / kappa_printed < 0.02

    def test_r0_value(self):
        assert decay_rate(4600, 495_000) == pytest.approx(0.0092929, rel=1e-4)

    def test_r7_value(self):
        assert decay_rate(7400, 512_000) == pytest.approx(0.0144531, rel=1e-4)

    def test_vanishes_for_large_qc(self):
        kappas = [decay_rate(4600, qc) for qc in (1e5, 1e7, 1e9, 1e11)]
        assert all(a > b for a, b in zip(kappas, kappas[1:]))
        assert kappas[-1] < 1e-6


class TestTlsLoss:
    def budget(self, **overrides):
        p = {"MS": 0.0026, "SA": 0.0013, "MA": 0.00008, "substrate": 0.89}
        d = {"MS": 2e-3, "SA": 2e-3, "MA": 2e-3, "substrate": 2e-6}
        p.update(overrides.get("p", {}))
        d.update(overrides.get("d", {}))
        return LossBudget(participations=p, loss_tangents=d)

    def test_hand_evaluated_full_budget(self):
        # Direct hand evaluation with every region lossy.
        delta, q = tls_loss(self.budget())
        expected = 2e-3 * (0.0026 + 0.0013 + 0.00008) + 2e-6 * 0.89
        assert delta == pytest.approx(expected, rel=1e-12)
        assert q == pytest.approx(1.0 / expected, rel=1e-12)

    def test_zero_losses(self):
        delta, q = tls_loss(
            self.budget(d={"MS": 0, "SA": 0, "MA": 0, "substrate": 0})
        )
        assert delta == 0.0
        assert q == math.inf

    def test_single_region_identity(self):
        budget = LossBudget(
            participations={"MS": 1.0, "SA": 0.0, "MA": 0.0, "substrate": 0.0},
            loss_tangents={"MS": 3.7e-4, "SA": 0.0, "MA": 0.0, "substrate": 0.0},
        )
        delta, _ = tls_loss(budget)
        assert delta == pytest.approx(3.7e-4, rel=1e-15)

    @given(
        st.floats(min_value=0, max_value=1),
        st.floats(min_value=0, max_value=1e-2),
        st.floats(min_value=0.1, max_value=10.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_linear_in_each_argument(self, p_ms, d_ms, scale):
        base = LossBudget(
            participations={"MS": p_ms, "SA": 0.01, "MA": 0.002, "substrate": 0.9},
            loss_tangents={"MS": d_ms, "SA": 1e-3, "MA": 1e-3, "substrate": 1e-6},
        )
        scaled = LossBudget(
            participations={"MS": p_ms * scale, "SA": 0.01, "MA": 0.002, "substrate": 0.9},
            loss_tangents=base.loss_tangents,
        )
        d0, _ = tls_loss(base)
        d1, _ = tls_loss(scaled)
        contribution = p_ms * d_ms
        assert d1 - d0 == pytest.approx(
            contribution * (scale - 1.0), abs=1e-14 * max(d0, d1, 1e-30)
        )

    def test_region_order_irrelevant(self):
        budget = self.budget()
        shuffled = LossBudget(
            participations=dict(reversed(list(budget.participations.items()))),
            loss_tangents=dict(reversed(list(budget.loss_tangents.items()))),
        )
        assert tls_loss(budget) == tls_loss(shuffled)

    def test_rejects_wrong_regions(self):
        with pytest.raises(ValueError):
            LossBudget(participations={"MS": 1.0}, loss_tangents={"MS": 1.0})


class TestCrosstalk:
    def test_stock_schedule_unflagged(self):
        freqs = [row[1] / 1e3 for row in SCHEDULE]
        kappas = [decay_rate(row[1], row[3]) for row in SCHEDULE]
        pairs = crosstalk_estimate(freqs, kappas)
        assert len(pairs) == 7
        assert not any(p.flagged for p in pairs)
        # 400 MHz spacing against ~0.01 MHz linewidths: ratios around 4e4.
        for p in pairs:
            assert 2e4 < p.ratio < 5e4

    def test_degenerate_pair_flagged(self):
        pairs = crosstalk_estimate([5.0, 5.0], [0.01, 0.01])
        assert pairs[0].ratio == 0.0
        assert pairs[0].flagged

    def test_close_pair_flagged(self):
        pairs = crosstalk_estimate([5.0, 5.001], [0.1, 0.1])
        assert pairs[0].ratio == pytest.approx(10.0, rel=1e-9)
        assert pairs[0].flagged

    def test_requires_sorted_input(self):
        with pytest.raises(ValueError):
            crosstalk_estimate([5.0, 4.0], [0.01, 0.01])

    def test_requires_two_resonators(self):
        with pytest.raises(ValueError):
            crosstalk_estimate([5.0], [0.01])


class TestSweep:
    def test_rows_and_kappa(self, model):
        rows = coupler_sweep(model, [100.0, 200.0], [("r0", 4.6), ("r1", 5.0)])
        assert len(rows) == 4
        for row in rows:
            assert row.kappa_mhz == pytest.approx(row.f0_ghz * 1e3 / row.qc, rel=1e-12)

    def test_doubling_lengths_quarters_qc(self, model):
        base = coupler_sweep(model, [120.0], [("r0", 4.6)])[0]
        doubled = coupler_sweep(model, [240.0], [("r0", 4.6)])[0]
        assert doubled.qc == pytest.approx(base.qc / 4.0, rel=1e-12)
