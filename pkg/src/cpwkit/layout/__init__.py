"""Parametric chip geometry: paths, polygons, GDSII/SVG output, wirebonds."""

from cpwkit.layout.path import (
    ArcSegment,
    CenterlinePath,
    LineSegment,
    MeanderConstraints,
    PathBuilder,
    ResonatorDesign,
    plan_resonator,
)
from cpwkit.layout.polygons import (
    BondPadSpec,
    ChipDesign,
    PlacedResonator,
    Polygon,
    path_to_etch_polygons,
    render_chip,
)
from cpwkit.layout.gds import read_gdsii, write_gdsii
from cpwkit.layout.svg import write_svg
from cpwkit.layout.drc import DrcReport, run_drc
from cpwkit.layout.wirebonds import (
    Bond,
    BondRules,
    WirebondMap,
    ground_connectivity,
    plan_wirebonds,
)

__all__ = [
    "ArcSegment",
    "LineSegment",
    "CenterlinePath",
    "PathBuilder",
    "MeanderConstraints",
    "ResonatorDesign",
    "plan_resonator",
    "Polygon",
    "BondPadSpec",
    "PlacedResonator",
    "ChipDesign",
    "path_to_etch_polygons",
    "render_chip",
    "write_gdsii",
    "read_gdsii",
    "write_svg",
    "DrcReport",
    "run_drc",
    "Bond",
    "BondRules",
    "WirebondMap",
    "plan_wirebonds",
    "ground_connectivity",
]
