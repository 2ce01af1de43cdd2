"""Exception types shared across the package."""

from __future__ import annotations


class DegencdError(Exception):
    """Base class for all package-specific errors."""


class InputDataError(DegencdError):
    """Bad user-supplied data (non-integrable initial data, NaN samples, ...)."""


class DomainError(DegencdError):
    """A geometric request falls outside the computational domain."""


class ConstructionError(DegencdError):
    """A derived object (flux splitting, entropy pair, ...) could not be built."""


class BlowupError(DegencdError):
    """The discrete solution produced a non-finite value.

    Attributes:
        multi_index: grid multi-index of the first offending cell.
        time: simulation time at which the blow-up was detected.
    """

    def __init__(self, message: str, multi_index=None, time: float | None = None):
        super().__init__(message)
        self.multi_index = multi_index
        self.time = time


class IntegratorError(DegencdError):
    """A time step could not be completed (e.g. Newton non-convergence).

    Attributes:
        residual_history: sequence of residual norms seen before giving up.
    """

    def __init__(self, message: str, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


class MonitorError(DegencdError):
    """An a priori bound was violated far beyond the integrator tolerance.

    Carries the offending field snapshot for post-mortem inspection.
    """

    def __init__(self, message: str, record=None, field=None):
        super().__init__(message)
        self.record = record
        self.field = field


class QuadratureError(DegencdError):
    """Adaptive quadrature could not reach the requested tolerance."""


class FitError(DegencdError):
    """Not enough usable data points for a least-squares rate fit."""


class ConfigError(DegencdError):
    """Invalid run configuration (parse error or failed validation)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
