"""qcdyn: quantum-classical correspondence in integrable systems.

Split-operator Schrodinger propagation, symplectic classical trajectories
and Wigner-sampled ensembles, Planck-cell phase-space comparisons, and the
Ehrenfest / quantum-revival time-scale analysis built on top of them.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DomainError,
    FitError,
    InsufficientDataError,
    NumericsError,
    QcdynError,
    UsageError,
)

__all__ = [
    "__version__",
    "QcdynError",
    "DomainError",
    "UsageError",
    "ConfigError",
    "NumericsError",
    "FitError",
    "InsufficientDataError",
]
