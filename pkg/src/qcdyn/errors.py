"""Exception hierarchy shared by all modules."""


class QcdynError(Exception):
    """Base class for every error raised by this package."""


class DomainError(QcdynError, ValueError):
    """Input outside the mathematical/physical domain of an operation."""


class UsageError(QcdynError, ValueError):
    """API misuse: mismatched grids, empty inputs, non-normalized states."""


class ConfigError(QcdynError, ValueError):
    """Invalid scenario configuration; message names the offending field."""


class NumericsError(QcdynError, RuntimeError):
    """Numerical failure at runtime: aliasing, energy drift, step size."""


class FitError(QcdynError, RuntimeError):
    """Nonlinear fit did not converge. Carries the iteration trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class InsufficientDataError(QcdynError, ValueError):
    """Not enough data points for the requested analysis."""
