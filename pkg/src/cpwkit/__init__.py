"""Toolkit for designing and analyzing multiplexed quarter-wave CPW resonator chips.

Subpackages and modules:

* ``cpw``            closed-form coplanar-waveguide line models
* ``coupling``       inductive coupling, decay rates, loss budgets, crosstalk
* ``layout``         parametric chip geometry, GDSII/SVG writers, wirebonds
* ``participation``  2-D electrostatic cross-section solver and surface
                     participation ratios
* ``fitting``        notch-type S21 synthesis and fitting
* ``config``         run configuration (defaults reproduce the stock
                     eight-resonator chip)
* ``cli``            command-line entry point
"""

from cpwkit.cpw import CpwGeometry, LineProperties, elliptic_k, line_properties
from cpwkit.coupling import CouplerModel, LossBudget
from cpwkit.errors import (
    ConfigError,
    CpwKitError,
    DesignRuleError,
    FitError,
    GeometryConflictError,
    LayoutInfeasibleError,
    NoResonanceError,
    SolverError,
    TraceParseError,
)

__version__ = "0.1.0"

__all__ = [
    "CpwGeometry",
    "LineProperties",
    "CouplerModel",
    "LossBudget",
    "elliptic_k",
    "line_properties",
    "CpwKitError",
    "ConfigError",
    "DesignRuleError",
    "LayoutInfeasibleError",
    "GeometryConflictError",
    "SolverError",
    "FitError",
    "NoResonanceError",
    "TraceParseError",
    "__version__",
]
