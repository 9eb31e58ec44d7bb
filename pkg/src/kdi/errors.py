"""Exception hierarchy.

Validation problems derive from ``ConfigError`` (CLI exit code 2); numerical
failures derive from ``SolverError`` (CLI exit code 3).
"""


class KDIError(Exception):
    """Base class for all package errors."""


class ConfigError(KDIError, ValueError):
    """Invalid user input or configuration."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class SolverError(KDIError, RuntimeError):
    """A numerical check failed during evolution or analysis."""


class WidthNonPositive(ConfigError):
    pass


class GridTooNarrow(ConfigError):
    pass


class WindowEmpty(ConfigError):
    pass


class FrameMismatch(KDIError, ValueError):
    pass


class PopulationOutsideModel(KDIError, ValueError):
    pass


class NoPeaksFound(SolverError):
    pass


class TruncationOverflow(SolverError):
    pass


class NormDrift(SolverError):
    pass


class NoConvergence(SolverError):
    pass


class BeamUnresolved(SolverError):
    def __init__(self, message, param=None):
        super().__init__(message)
        self.param = param
