"""2-D electrostatic cross-section solver and surface-participation reports."""

from cpwkit.participation.model import INTERFACE_REGIONS, CrossSectionModel
from cpwkit.participation.mesh import Mesh, build_mesh
from cpwkit.participation.solver import FieldSolution, solve_potential
from cpwkit.participation.report import (
    ParticipationReport,
    export_field_map,
    format_participation_table,
    participation_ratios,
)

__all__ = [
    "CrossSectionModel",
    "INTERFACE_REGIONS",
    "Mesh",
    "build_mesh",
    "FieldSolution",
    "solve_potential",
    "ParticipationReport",
    "participation_ratios",
    "export_field_map",
    "format_participation_table",
]
