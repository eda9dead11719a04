"""Closed-form coplanar-waveguide transmission-line models.

Zero-thickness metal on an infinitely thick substrate, solved by conformal
mapping.  In that model the effective permittivity is the plain average
(eps_r + 1)/2 and the impedance follows from the ratio of complete elliptic
integrals of the modulus k = s/(s + 2g).  Metal thickness and trenching are
deliberately ignored here; the numerical cross-section solver in
``cpwkit.participation`` handles those effects.

Units: geometry in um, frequencies in GHz, resonator lengths in mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.constants import c as _C_M_PER_S

from cpwkit.errors import DesignRuleError

#: Minimum lithographic feature size in um (trace and gap must not go below).
MIN_FEATURE_UM = 3.0

#: Substrate relative permittivities selectable by name.
SUBSTRATE_EPS_R = {"silicon": 11.45, "sapphire": 10.06}

#: Resonance-frequency model uncertainty, reported alongside results but not
#: used in any pass/fail logic (propagation-speed variation of the real chip).
FREQUENCY_MODEL_UNCERTAINTY_MHZ = 50.0


@dataclass(frozen=True)
class CpwGeometry:
    """Cross-section of a CPW: center trace of width s between gaps of width g.

    trace_width_um and gap_um must respect the minimum feature size.
    metal_thickness_um and trench_depth_nm are carried along for the
    numerical solver; the closed-form models below do not use them.
    """

    trace_width_um: float = 6.0
    gap_um: float = 3.0
    substrate_eps_r: float = 11.45
    metal_thickness_um: float = 0.1
    trench_depth_nm: float = 100.0
    min_feature_um: float = MIN_FEATURE_UM

    def __post_init__(self):
        if self.trace_width_um <= 0 or self.gap_um <= 0:
            raise DesignRuleError(
                f"trace width and gap must be positive, got "
                f"s={self.trace_width_um} um, g={self.gap_um} um"
            )
        if self.substrate_eps_r < 1:
            raise DesignRuleError(
                f"substrate eps_r must be >= 1, got {self.substrate_eps_r}"
            )
        if min(self.trace_width_um, self.gap_um) < self.min_feature_um:
            raise DesignRuleError(
                f"CPW features below the {self.min_feature_um} um minimum: "
                f"s={self.trace_width_um} um, g={self.gap_um} um"
            )
        if self.trench_depth_nm < 0:
            raise DesignRuleError("trench depth cannot be negative")

    @property
    def modulus(self) -> float:
        """Conformal-mapping modulus k = s/(s + 2g), in (0, 1)."""
        s, g = self.trace_width_um, self.gap_um
        return s / (s + 2.0 * g)

    @property
    def span_um(self) -> float:
        """Full lateral extent s + 2g of the etched cross-section."""
        return self.trace_width_um + 2.0 * self.gap_um


@dataclass(frozen=True)
class LineProperties:
    """Derived transmission-line parameters of one CPW cross-section."""

    eps_eff: float
    impedance_ohm: float
    capacitance_fF_per_um: float
    inductance_nH_per_mm: float
    phase_velocity_m_per_s: float


def elliptic_k(modulus: float) -> float:
    """Complete elliptic integral of the first kind K(k).

    Arithmetic-geometric-mean iteration: quadratically convergent, relative
    error below 1e-12 over the full domain 0 <= k < 1.
    """
    if not 0.0 <= modulus < 1.0:
        raise ValueError(f"elliptic modulus must satisfy 0 <= k < 1, got {modulus}")
    a = 1.0
    # (1-k)(1+k) avoids cancellation in 1 - k**2 for k near 1.
    b = math.sqrt((1.0 - modulus) * (1.0 + modulus))
    for _ in range(60):
        if abs(a - b) <= 4e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2.0 * a)


def line_properties(geom: CpwGeometry) -> LineProperties:
    """Effective permittivity, Z0, C, L, and phase velocity for a CPW.

    eps_eff = (eps_r + 1)/2 and Z0 = (30*pi/sqrt(eps_eff)) * K(k')/K(k),
    with k = s/(s+2g) and k' its complement.  C and L follow from Z0 and the
    phase velocity, so Z0 == sqrt(L/C) holds to rounding.
    """
    eps_eff = 0.5 * (geom.substrate_eps_r + 1.0)
    k = geom.modulus
    kp = math.sqrt((1.0 - k) * (1.0 + k))
    z0 = 30.0 * math.pi / math.sqrt(eps_eff) * elliptic_k(kp) / elliptic_k(k)
    c_f_per_m = math.sqrt(eps_eff) / (_C_M_PER_S * z0)
    l_h_per_m = z0 * math.sqrt(eps_eff) / _C_M_PER_S
    v_ph = _C_M_PER_S / math.sqrt(eps_eff)
    return LineProperties(
        eps_eff=eps_eff,
        impedance_ohm=z0,
        capacitance_fF_per_um=c_f_per_m * 1e9,
        inductance_nH_per_mm=l_h_per_m * 1e6,
        phase_velocity_m_per_s=v_ph,
    )


def quarter_wave_length(f0_ghz: float, props: LineProperties) -> float:
    """Length in mm of a quarter-wave resonator at f0 (GHz): c/(4 f0 sqrt(eps_eff))."""
    if f0_ghz <= 0:
        raise ValueError(f"resonance frequency must be positive, got {f0_ghz} GHz")
    return _C_M_PER_S / (4.0 * f0_ghz * 1e9 * math.sqrt(props.eps_eff)) * 1e3


def resonant_frequency(length_mm: float, props: LineProperties) -> float:
    """Fundamental frequency in GHz of a quarter-wave resonator of given length (mm)."""
    if length_mm <= 0:
        raise ValueError(f"resonator length must be positive, got {length_mm} mm")
    return _C_M_PER_S / (4.0 * length_mm * 1e-3 * math.sqrt(props.eps_eff)) * 1e-9
