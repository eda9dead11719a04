"""Tests for the closed-form CPW line models."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpwkit.cpw import (
    CpwGeometry,
    elliptic_k,
    line_properties,
    quarter_wave_length,
    resonant_frequency,
)
from cpwkit.errors import DesignRuleError

C_M_PER_S = 299_792_458.0


def elliptic_k_series(k: float, terms: int = 50) -> float:
    """Independent oracle: Maclaurin series of K(k), accurate for small k.

    K(k) = (pi/2) * sum_n [ ((2n-1)!! / (2n)!!)^2 k^(2n) ].
    """
    total = 1.0
    coeff = 1.0
    for n in range(1, terms):
        coeff *= (2 * n - 1) / (2 * n)
        total += (coeff**2) * k ** (2 * n)
    return math.pi / 2 * total


class TestEllipticK:
    def test_zero_modulus(self):
        assert elliptic_k(0.0) == pytest.approx(math.pi / 2, rel=1e-15)

    def test_half_modulus(self):
        # Oracle value from the Maclaurin series (k=0.5 converges fine at 50 terms).
        assert elliptic_k(0.5) == pytest.approx(1.6857503548125961, rel=1e-12)
        assert elliptic_k(0.5) == pytest.approx(elliptic_k_series(0.5, 200), rel=1e-12)

    def test_inverse_sqrt2(self):
        # Also expressible as Gamma(1/4)^2 / (4 sqrt(pi)).
        lemniscatic = math.gamma(0.25) ** 2 / (4.0 * math.sqrt(math.pi))
        assert elliptic_k(1.0 / math.sqrt(2.0)) == pytest.approx(1.8540746773, rel=1e-9)
        assert elliptic_k(1.0 / math.sqrt(2.0)) == pytest.approx(lemniscatic, rel=1e-12)

    @pytest.mark.parametrize("k", [0.0, 0.05, 0.1, 0.2, 0.25, 0.3])
    def test_matches_series_small_modulus(self, k):
        assert elliptic_k(k) == pytest.approx(elliptic_k_series(k), rel=1e-10)

    @pytest.mark.parametrize("bad", [1.0, 1.5, -0.1])
    def test_domain_error(self, bad):
        with pytest.raises(ValueError):
            elliptic_k(bad)

    @given(st.floats(min_value=0.0, max_value=0.999))
    @settings(max_examples=200, deadline=None)
    def test_monotone_increasing(self, k):
        assert elliptic_k(min(k + 1e-4, 0.9995)) >= elliptic_k(k)


class TestGeometry:
    def test_default_modulus(self):
        assert CpwGeometry().modulus == pytest.approx(0.5)

    def test_rejects_sub_minimum_features(self):
        with pytest.raises(DesignRuleError):
            CpwGeometry(trace_width_um=2.0)
        with pytest.raises(DesignRuleError):
            CpwGeometry(gap_um=1.0)

    def test_rejects_nonphysical(self):
        with pytest.raises(DesignRuleError):
            CpwGeometry(substrate_eps_r=0.5)
        with pytest.raises(DesignRuleError):
            CpwGeometry(trench_depth_nm=-1.0)


class TestLineProperties:
    def test_eps_eff_is_average(self):
        props = line_properties(CpwGeometry())
        assert props.eps_eff == pytest.approx((11.45 + 1) / 2, rel=1e-15)

    def test_impedance_near_fifty_ohm(self):
        props = line_properties(CpwGeometry())
        # Exact value derived through the elliptic-integral oracle.
        assert props.impedance_ohm == pytest.approx(48.3237694, rel=1e-6)
        assert abs(props.impedance_ohm - 50.0) / 50.0 < 0.05

    def test_untrenched_capacitance(self):
        props = line_properties(CpwGeometry())
        assert props.capacitance_fF_per_um == pytest.approx(0.172222, rel=1e-4)

    def test_lc_self_consistency(self):
        props = line_properties(CpwGeometry())
        c_si = props.capacitance_fF_per_um * 1e-9  # F/m
        l_si = props.inductance_nH_per_mm * 1e-6  # H/m
        assert math.sqrt(l_si / c_si) == pytest.approx(props.impedance_ohm, rel=1e-9)
        assert l_si * c_si * C_M_PER_S**2 / props.eps_eff == pytest.approx(1.0, rel=1e-9)
        assert props.phase_velocity_m_per_s == pytest.approx(
            1.0 / math.sqrt(l_si * c_si), rel=1e-9
        )

    def test_impedance_decreasing_in_modulus(self):
        # Wider trace at fixed pitch -> larger k -> lower Z0.
        z_prev = None
        for s in (4.0, 6.0, 8.0, 12.0):
            z = line_properties(CpwGeometry(trace_width_um=s)).impedance_ohm
            if z_prev is not None:
                assert z < z_prev
            z_prev = z

    def test_impedance_decreasing_in_eps_r(self):
        z_prev = None
        for er in (4.0, 9.0, 11.45, 13.0):
            z = line_properties(CpwGeometry(substrate_eps_r=er)).impedance_ohm
            if z_prev is not None:
                assert z < z_prev
            z_prev = z


class TestQuarterWave:
    def test_known_lengths(self):
        props = line_properties(CpwGeometry())
        # Closed-form oracle: c / (4 f sqrt(eps_eff)).
        assert quarter_wave_length(4.6, props) == pytest.approx(6.5303010, rel=1e-6)
        assert quarter_wave_length(7.4, props) == pytest.approx(4.0593763, rel=1e-6)

    def test_vacuum_limit(self):
        vacuum = line_properties(CpwGeometry(substrate_eps_r=1.0))
        assert vacuum.eps_eff == 1.0
        f0 = 5.0
        assert quarter_wave_length(f0, vacuum) == pytest.approx(
            C_M_PER_S / (4 * f0 * 1e9) * 1e3, rel=1e-12
        )

    def test_inverse_of_length(self):
        props = line_properties(CpwGeometry())
        assert resonant_frequency(6.5303010, props) == pytest.approx(4.6, rel=1e-6)
        assert resonant_frequency(4.0593763, props) == pytest.approx(7.4, rel=1e-6)

    @given(st.floats(min_value=1.0, max_value=20.0))
    @settings(max_examples=100, deadline=None)
    def test_round_trip_identity(self, f0):
        props = line_properties(CpwGeometry())
        assert resonant_frequency(quarter_wave_length(f0, props), props) == pytest.approx(
            f0, rel=1e-12
        )

    @pytest.mark.parametrize("bad", [0.0, -4.6])
    def test_domain_errors(self, bad):
        props = line_properties(CpwGeometry())
        with pytest.raises(ValueError):
            quarter_wave_length(bad, props)
        with pytest.raises(ValueError):
            resonant_frequency(bad, props)
