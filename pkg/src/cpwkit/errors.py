"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: config problems -> 2, geometry /
design-rule problems -> 3, solver and fitting problems -> 4.
"""


class CpwKitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(CpwKitError):
    """Invalid, unknown, or inconsistent configuration input."""


class DesignRuleError(CpwKitError):
    """A geometric quantity violates the minimum-feature design rules."""


class LayoutInfeasibleError(CpwKitError):
    """A resonator (named in the message) cannot be realized in its envelope."""


class GeometryConflictError(CpwKitError):
    """Polygons belonging to distinct design groups overlap."""


class MeshBudgetError(CpwKitError):
    """A mesh request exceeds the configured cell budget."""

    def __init__(self, message: str, suggested_refinement: int | None = None):
        super().__init__(message)
        self.suggested_refinement = suggested_refinement


class SolverError(CpwKitError):
    """The field solve failed to converge; carries the residual history."""

    def __init__(self, message: str, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class FitError(CpwKitError):
    """Least-squares fit did not converge; carries the last iterate."""

    def __init__(self, message: str, last_params=None):
        super().__init__(message)
        self.last_params = last_params


class NoResonanceError(FitError):
    """No dip found above the noise floor in a trace."""


class TraceParseError(CpwKitError):
    """Malformed trace file; carries the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number
