"""Inductive coupling between quarter-wave resonators and the common feedline.

The coupler is the stretch of resonator arm running parallel to the feedline;
its length sets the mutual inductance M and hence the coupling quality factor

    Qc = pi * Z0_feed * Z0_res / (2 * omega^2 * M^2),      M = m * l_c,

the energy-leakage result for a lambda/4 standing wave coupled into a matched
line through a lumped mutual M.  The mutual inductance per length m is a
single quasi-static scalar, calibrated against a reference point rather than
extracted from 3-D geometry.  Consequences used throughout: Qc is proportional
to 1/l_c^2 and decreases monotonically with coupler length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from cpwkit.cpw import MIN_FEATURE_UM
from cpwkit.errors import DesignRuleError

#: Default calibration anchor: Qc = 495,000 at a 200 um coupler, 4.6 GHz.
#: The anchor length is a toolkit calibration choice, not a measured value;
#: it is configurable and recorded in every manifest.
DEFAULT_CALIBRATION = (200.0, 495_000.0, 4.6)

#: Adjacent resonators are flagged when their spacing falls below this many
#: linewidths (advisory crosstalk threshold; two linewidths of separation per
#: percent of leakage heuristic).
CROSSTALK_RATIO_FLOOR = 100.0


@dataclass(frozen=True)
class CouplerModel:
    """Lumped mutual-inductance coupling model.

    mutual_pH_per_um is per unit coupler length; the reference tuple
    (length um, Qc, f GHz) records the calibration that produced it.
    """

    mutual_pH_per_um: float
    feedline_impedance_ohm: float = 50.0
    resonator_impedance_ohm: float = 50.0
    reference: tuple[float, float, float] = DEFAULT_CALIBRATION

    def __post_init__(self):
        if self.mutual_pH_per_um <= 0:
            raise ValueError("mutual inductance per length must be positive")

    @classmethod
    def calibrated(
        cls,
        z0_feed_ohm: float,
        z0_res_ohm: float,
        reference: tuple[float, float, float] = DEFAULT_CALIBRATION,
    ) -> "CouplerModel":
        """Build a model whose mutual inductance reproduces the reference point."""
        lc_ref_um, qc_ref, f_ref_ghz = reference
        omega = 2.0 * math.pi * f_ref_ghz * 1e9
        m_total = math.sqrt(
            math.pi * z0_feed_ohm * z0_res_ohm / (2.0 * omega**2 * qc_ref)
        )  # henry
        return cls(
            mutual_pH_per_um=m_total * 1e12 / lc_ref_um,
            feedline_impedance_ohm=z0_feed_ohm,
            resonator_impedance_ohm=z0_res_ohm,
            reference=reference,
        )


def qc_of_coupler_length(model: CouplerModel, length_um: float, f0_ghz: float) -> float:
    """Coupling quality factor for a coupler of the given length at f0."""
    if length_um <= 0:
        raise ValueError(f"coupler length must be positive, got {length_um} um")
    if f0_ghz <= 0:
        raise ValueError(f"frequency must be positive, got {f0_ghz} GHz")
    omega = 2.0 * math.pi * f0_ghz * 1e9
    m_h = model.mutual_pH_per_um * length_um * 1e-12
    return (
        math.pi
        * model.feedline_impedance_ohm
        * model.resonator_impedance_ohm
        / (2.0 * omega**2 * m_h**2)
    )


def coupler_length_for_qc(
    model: CouplerModel,
    target_qc: float,
    f0_ghz: float,
    min_length_um: float = MIN_FEATURE_UM,
) -> float:
    """Coupler length in um achieving the target Qc; inverse of qc_of_coupler_length."""
    if target_qc <= 0:
        raise ValueError(f"target Qc must be positive, got {target_qc}")
    if f0_ghz <= 0:
        raise ValueError(f"frequency must be positive, got {f0_ghz} GHz")
    omega = 2.0 * math.pi * f0_ghz * 1e9
    m_h = math.sqrt(
        math.pi
        * model.feedline_impedance_ohm
        * model.resonator_impedance_ohm
        / (2.0 * omega**2 * target_qc)
    )
    length_um = m_h * 1e12 / model.mutual_pH_per_um
    if length_um < min_length_um:
        raise DesignRuleError(
            f"coupler length {length_um:.3f} um for Qc={target_qc:.3g} at "
            f"{f0_ghz} GHz is below the {min_length_um} um minimum feature"
        )
    return length_um


def decay_rate(f0_mhz: float, qc: float) -> float:
    """Coupling-limited decay rate kappa = f0/Qc, both in MHz."""
    if f0_mhz <= 0 or qc <= 0:
        raise ValueError("frequency and Qc must be positive")
    return f0_mhz / qc


#: Thin lossy regions of the loss budget, in report order.
LOSS_REGIONS = ("MS", "SA", "MA", "substrate")


@dataclass(frozen=True)
class LossBudget:
    """Participations and loss tangents for the MS, SA, MA, and substrate regions."""

    participations: dict[str, float] = field(default_factory=dict)
    loss_tangents: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name, table in (
            ("participations", self.participations),
            ("loss_tangents", self.loss_tangents),
        ):
            if set(table) != set(LOSS_REGIONS):
                raise ValueError(
                    f"{name} must cover exactly the regions {LOSS_REGIONS}, "
                    f"got {sorted(table)}"
                )
            for region, value in table.items():
                if value < 0:
                    raise ValueError(f"{name}[{region}] must be >= 0, got {value}")


def tls_loss(budget: LossBudget) -> tuple[float, float]:
    """Two-level-system loss: delta_TLS = sum_j p_j * delta_j, and Q_TLS = 1/delta.

    Linear in every participation and every loss tangent; region order cannot
    matter.  Returns (delta_TLS, Q_TLS); Q_TLS is inf when the loss is zero.
    """
    delta = sum(
        budget.participations[r] * budget.loss_tangents[r] for r in LOSS_REGIONS
    )
    q_tls = math.inf if delta == 0.0 else 1.0 / delta
    return delta, q_tls


@dataclass(frozen=True)
class CrosstalkPair:
    """Spacing-versus-linewidth figure for one pair of adjacent resonators."""

    lower_index: int
    upper_index: int
    spacing_mhz: float
    worst_kappa_mhz: float
    ratio: float
    flagged: bool


def crosstalk_estimate(
    frequencies_ghz: list[float],
    decay_rates_mhz: list[float],
    ratio_floor: float = CROSSTALK_RATIO_FLOOR,
) -> list[CrosstalkPair]:
    """Lumped crosstalk proxy: adjacent spacing over the larger linewidth.

    For each adjacent pair, ratio = (f_{i+1} - f_i) / max(kappa_i, kappa_{i+1});
    a pair is flagged when the ratio falls below ratio_floor.  Degenerate
    (equal-frequency) pairs get ratio 0 and are always flagged.
    """
    if len(frequencies_ghz) < 2:
        raise ValueError("crosstalk estimate needs at least two resonators")
    if len(decay_rates_mhz) != len(frequencies_ghz):
        raise ValueError("one decay rate per resonator is required")
    if any(b < a for a, b in zip(frequencies_ghz, frequencies_ghz[1:])):
        raise ValueError("frequencies must be sorted ascending")
    pairs = []
    for i in range(len(frequencies_ghz) - 1):
        spacing_mhz = (frequencies_ghz[i + 1] - frequencies_ghz[i]) * 1e3
        worst = max(decay_rates_mhz[i], decay_rates_mhz[i + 1])
        if worst <= 0:
            raise ValueError("decay rates must be positive")
        ratio = 0.0 if spacing_mhz == 0.0 else spacing_mhz / worst
        pairs.append(
            CrosstalkPair(
                lower_index=i,
                upper_index=i + 1,
                spacing_mhz=spacing_mhz,
                worst_kappa_mhz=worst,
                ratio=ratio,
                flagged=ratio < ratio_floor,
            )
        )
    return pairs


@dataclass(frozen=True)
class SweepPoint:
    """One row of the coupler-length sweep dataset."""

    resonator_label: str
    coupler_length_um: float
    qc: float
    f0_ghz: float
    kappa_mhz: float


SWEEP_CSV_COLUMNS = ("resonator_label", "coupler_length_um", "qc", "f0_GHz", "kappa_MHz")


def coupler_sweep(
    model: CouplerModel,
    lengths_um: list[float],
    resonators: list[tuple[str, float]],
) -> list[SweepPoint]:
    """Qc over a grid of coupler lengths for each (label, f0_GHz) resonator."""
    rows = []
    for label, f0_ghz in resonators:
        for lc in lengths_um:
            qc = qc_of_coupler_length(model, lc, f0_ghz)
            rows.append(
                SweepPoint(
                    resonator_label=label,
                    coupler_length_um=lc,
                    qc=qc,
                    f0_ghz=f0_ghz,
                    kappa_mhz=decay_rate(f0_ghz * 1e3, qc),
                )
            )
    return rows
