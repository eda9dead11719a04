"""Config-to-design glue: build the chip and its per-resonator analysis rows.

Resonators are placed on alternating sides of the feedline in equal slots
along the straight span.  Each coupler length is solved from the resonator's
coupling-Q target through the calibrated mutual-inductance model, so the
rendered chip reproduces the requested Qc schedule by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

from cpwkit.config import RunConfig
from cpwkit.coupling import (
    CouplerModel,
    coupler_length_for_qc,
    crosstalk_estimate,
    decay_rate,
    qc_of_coupler_length,
)
from cpwkit.cpw import CpwGeometry, LineProperties, line_properties, quarter_wave_length
from cpwkit.errors import LayoutInfeasibleError
from cpwkit.layout import (
    ChipDesign,
    MeanderConstraints,
    PlacedResonator,
    plan_resonator,
)
from cpwkit.layout.polygons import BondPadSpec, LabelSpec
from cpwkit.layout.textfont import text_width_um
from cpwkit.layout.wirebonds import BondRules


def cpw_geometry(config: RunConfig) -> CpwGeometry:
    c = config.cpw
    return CpwGeometry(
        trace_width_um=c.trace_width_um,
        gap_um=c.gap_um,
        substrate_eps_r=c.resolved_eps_r(),
        metal_thickness_um=c.metal_thickness_um,
        trench_depth_nm=c.trench_depth_nm,
        min_feature_um=c.min_feature_um,
    )


def coupler_model(config: RunConfig, props: LineProperties) -> CouplerModel:
    cal = config.coupling
    if cal.mutual_ph_per_um is not None:
        return CouplerModel(
            mutual_pH_per_um=cal.mutual_ph_per_um,
            feedline_impedance_ohm=props.impedance_ohm,
            resonator_impedance_ohm=props.impedance_ohm,
            reference=(cal.coupler_length_ref_um, cal.qc_ref, cal.f_ref_ghz),
        )
    return CouplerModel.calibrated(
        props.impedance_ohm,
        props.impedance_ohm,
        reference=(cal.coupler_length_ref_um, cal.qc_ref, cal.f_ref_ghz),
    )


def bond_rules(config: RunConfig) -> BondRules:
    w = config.wirebonds
    return BondRules(
        feedline_interval_um=w.feedline_interval_um,
        feedline_span_um=w.feedline_span_um,
        min_span_um=w.min_span_um,
        max_span_um=w.max_span_um,
        min_landing_um=w.min_landing_um,
        stitch_margin_um=w.stitch_margin_um,
    )


@dataclass
class ResonatorReport:
    """One analysis row: design values plus model-derived quantities."""

    label: str
    f0_mhz: float
    length_mm: float
    coupler_length_um: float
    z0_ohm: float
    qc: float
    kappa_mhz: float
    crosstalk_ratio: float | None
    n_legs: int
    side: str


def build_chip(config: RunConfig) -> tuple[ChipDesign, list[ResonatorReport]]:
    """Chip design plus analysis rows for every resonator."""
    geom = cpw_geometry(config)
    props = line_properties(geom)
    model = coupler_model(config, props)
    m = config.meander
    constraints = MeanderConstraints(
        envelope_width_um=m.envelope_width_um,
        pitch_um=m.pitch_um,
        bend_radius_um=m.bend_radius_um,
        entry_drop_um=m.entry_drop_um,
        max_height_um=m.max_height_um,
    )
    pad = BondPadSpec(
        trace_width_um=config.bond_pad.trace_width_um,
        gap_um=config.bond_pad.gap_um,
        taper_length_um=config.bond_pad.taper_length_um,
        pad_length_um=config.bond_pad.pad_length_um,
        edge_setback_um=config.bond_pad.edge_setback_um,
    )
    design = ChipDesign(
        width_um=config.chip.width_mm * 1e3,
        height_um=config.chip.height_mm * 1e3,
        cpw=geom,
        bond_pad=pad,
        design_name=config.chip.design_name,
        ground_plane_polarity=config.chip.ground_plane_polarity,
    )

    x_lo, x_hi = design.feedline_span_x_um
    n = len(config.resonators)
    reports: list[ResonatorReport] = []
    if n:
        slot = (x_hi - x_lo) / n
        for i, entry in enumerate(config.resonators):
            f0_ghz = entry.f0_mhz / 1e3
            lc = coupler_length_for_qc(model, entry.qc, f0_ghz)
            r = plan_resonator(
                entry.label,
                f0_ghz,
                lc,
                geom,
                props,
                constraints=constraints,
                fillet_radius_um=m.fillet_radius_um,
                feedline_offset_gap_um=m.feedline_offset_gap_um,
            )
            # Anchor so the meander body sits centered in its slot; the body
            # may extend left of the shorted end when legs exceed the coupler.
            box = r.path.bounding_box(margin=geom.span_um)
            body_w = box[2] - box[0]
            if body_w > slot:
                raise LayoutInfeasibleError(
                    f"{entry.label}: footprint {body_w:.0f} um exceeds its "
                    f"{slot:.0f} um feedline slot"
                )
            anchor = x_lo + i * slot + (slot - body_w) / 2.0 - box[0]
            side = "below" if i % 2 == 0 else "above"
            design.resonators.append(PlacedResonator(r, anchor, side))

            qc = qc_of_coupler_length(model, lc, f0_ghz)
            reports.append(
                ResonatorReport(
                    label=entry.label,
                    f0_mhz=entry.f0_mhz,
                    length_mm=quarter_wave_length(f0_ghz, props),
                    coupler_length_um=lc,
                    z0_ohm=props.impedance_ohm,
                    qc=qc,
                    kappa_mhz=decay_rate(entry.f0_mhz, qc),
                    crosstalk_ratio=None,
                    n_legs=r.n_legs,
                    side=side,
                )
            )

        # Adjacent-spacing crosstalk figures (per resonator: worst of its pairs).
        ordered = sorted(range(n), key=lambda k: reports[k].f0_mhz)
        freqs = [reports[k].f0_mhz / 1e3 for k in ordered]
        kappas = [reports[k].kappa_mhz for k in ordered]
        if n >= 2:
            pairs = crosstalk_estimate(freqs, kappas)
            worst: dict[int, float] = {}
            for p in pairs:
                for idx in (ordered[p.lower_index], ordered[p.upper_index]):
                    worst[idx] = min(worst.get(idx, float("inf")), p.ratio)
            for idx, ratio in worst.items():
                reports[idx].crosstalk_ratio = ratio

    _add_labels(design, config)
    return design, reports


def _add_labels(design: ChipDesign, config: RunConfig) -> None:
    """Design name, feedline tag, and one tag next to each resonator."""
    h = 150.0
    name = config.chip.design_name
    design.labels.append(
        LabelSpec(
            name,
            design.width_um / 2.0 - text_width_um(name, h) / 2.0,
            0.04 * design.height_um,
            h,
        )
    )
    design.labels.append(
        LabelSpec(
            "FEED",
            design.feedline_span_x_um[0],
            design.feedline_y_um + 2.2 * h,
            h,
        )
    )
    for placed in design.resonators:
        d = placed.design
        box = design.placed_path(placed).bounding_box(margin=d.cpw.span_um)
        if placed.side == "below":
            y = box[1] - 1.6 * h
        else:
            y = box[3] + 0.6 * h
        x = max(
            10.0,
            min(
                box[0] + (box[2] - box[0]) / 2.0 - text_width_um(d.label, h) / 2.0,
                design.width_um - text_width_um(d.label, h) - 10.0,
            ),
        )
        design.labels.append(LabelSpec(d.label, x, y, h))
