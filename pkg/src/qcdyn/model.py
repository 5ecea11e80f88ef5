"""Model definitions: scaled Planck constant, Hamiltonians, scenario data,
and the closed-form box/Kepler time-scale calculators in SI units."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError, UsageError
from .grids import GridSpec

# Frozen SI constants (reproducibility of the worked examples).
HBAR_SI = 1.054571817e-34  # J s
YEAR_SI = 3.15576e7  # s


@dataclass(frozen=True)
class ScaledPlanck:
    """Dimensionless effective Planck constant of the scaled dynamics."""

    hbar_eps: float

    def __post_init__(self):
        if not (math.isfinite(self.hbar_eps) and self.hbar_eps > 0):
            raise DomainError(f"hbar_eps must be positive, got {self.hbar_eps}")

    @property
    def sigma_x(self) -> float:
        """Position width of the minimal Gaussian packet, sqrt(hbar_eps/2)."""
        return math.sqrt(self.hbar_eps / 2)

    @property
    def sigma_p(self) -> float:
        """Momentum width of the minimal Gaussian packet, sqrt(hbar_eps/2)."""
        return math.sqrt(self.hbar_eps / 2)


class Hamiltonian:
    """Separable Hamiltonian H = T(p) + V(x) in scaled units.

    Coordinates and momenta are passed as separate per-axis arguments so
    the same interface serves meshes, trajectories, and scalars.
    """

    kind: str = "abstract"
    dim: int = 1
    mass: float = 1.0

    def potential(self, *x):
        raise NotImplementedError

    def potential_gradient(self, *x) -> tuple:
        raise NotImplementedError

    def kinetic(self, *p):
        # default point-particle form, overridden by coupled kinetics
        return sum(np.asarray(pi) ** 2 for pi in p) / (2 * self.mass)

    def velocity(self, *p) -> tuple:
        """dT/dp, the coordinate velocities."""
        return tuple(np.asarray(pi) / self.mass for pi in p)

    def energy(self, x, p) -> float:
        xs = _as_components(x, self.dim)
        ps = _as_components(p, self.dim)
        return float(self.kinetic(*ps) + self.potential(*xs))


def _as_components(v, dim) -> tuple:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.shape[-1] != dim and not (dim == 1 and arr.ndim == 1):
        raise UsageError(f"expected {dim} components, got shape {arr.shape}")
    if dim == 1:
        return (arr if arr.ndim > 1 else float(arr[0]),)
    return tuple(arr[..., i] if arr.ndim > 1 else float(arr[i]) for i in range(dim))


class Quartic1D(Hamiltonian):
    """H = p^2/2 + x^2 + x^4 with m = 1 in scaled units."""

    kind = "quartic"
    dim = 1
    mass = 1.0

    def potential(self, x):
        x = np.asarray(x)
        return x * x + x * x * x * x

    def potential_gradient(self, x):
        x = np.asarray(x)
        return (2 * x + 4 * x * x * x,)


class Harmonic1D(Hamiltonian):
    """H = p^2/2m + m omega^2 x^2 / 2."""

    kind = "harmonic"
    dim = 1

    def __init__(self, omega: float, mass: float = 1.0):
        if omega <= 0 or mass <= 0:
            raise DomainError("omega and mass must be positive")
        self.omega = float(omega)
        self.mass = float(mass)

    def potential(self, x):
        x = np.asarray(x)
        return 0.5 * self.mass * self.omega**2 * x * x

    def potential_gradient(self, x):
        x = np.asarray(x)
        return (self.mass * self.omega**2 * x,)


class Toda2D(Hamiltonian):
    """Three-site periodic lattice reduced to two degrees of freedom.

    H = p1^2 + p2^2 + p1 p2 + e^{-x1} + e^{-(x2-x1)} + e^{x2}.
    The kinetic form carries no 1/2; velocities are (2p1+p2, 2p2+p1).
    """

    kind = "toda"
    dim = 2
    mass = 1.0

    def potential(self, x1, x2):
        x1 = np.asarray(x1)
        x2 = np.asarray(x2)
        return np.exp(-x1) + np.exp(-(x2 - x1)) + np.exp(x2)

    def potential_gradient(self, x1, x2):
        x1 = np.asarray(x1)
        x2 = np.asarray(x2)
        mid = np.exp(-(x2 - x1))
        return (-np.exp(-x1) + mid, -mid + np.exp(x2))

    def kinetic(self, p1, p2):
        p1 = np.asarray(p1)
        p2 = np.asarray(p2)
        return p1 * p1 + p2 * p2 + p1 * p2

    def velocity(self, p1, p2):
        p1 = np.asarray(p1)
        p2 = np.asarray(p2)
        return (2 * p1 + p2, 2 * p2 + p1)


class Custom1D(Hamiltonian):
    """User-supplied confining 1D potential.

    The gradient may be given explicitly; otherwise a centered difference
    with relative step ~cbrt(eps) is used.
    """

    kind = "custom"
    dim = 1

    def __init__(self, potential: Callable, gradient: Optional[Callable] = None,
                 mass: float = 1.0, label: str = "custom"):
        if mass <= 0:
            raise DomainError("mass must be positive")
        self._potential = potential
        self._gradient = gradient
        self.mass = float(mass)
        self.label = label

    def potential(self, x):
        return np.asarray(self._potential(np.asarray(x, dtype=float)))

    def potential_gradient(self, x):
        x = np.asarray(x, dtype=float)
        if self._gradient is not None:
            return (np.asarray(self._gradient(x)),)
        h = 6e-6 * (1.0 + np.abs(x))
        return ((self.potential(x + h) - self.potential(x - h)) / (2 * h),)


def quartic_potential(x):
    """V(x) = x^2 + x^4."""
    x = np.asarray(x)
    return x * x + x * x * x * x


def toda_conserved_F(state):
    """Second conserved quantity of the two-degree lattice.

    F = -(p1^2 p2 + p2^2 p1) - p2 e^{-x1} + (p1+p2) e^{-(x2-x1)} - p1 e^{x2}
    for state = (x1, x2, p1, p2).
    """
    arr = np.asarray(state, dtype=float)
    x1, x2, p1, p2 = (arr[..., i] for i in range(4)) if arr.ndim > 1 else arr
    return (-(p1**2 * p2 + p2**2 * p1) - p2 * np.exp(-x1)
            + (p1 + p2) * np.exp(-(x2 - x1)) - p1 * np.exp(x2))


@dataclass(frozen=True)
class SIInputs:
    """SI parameters of the worked examples. All entries optional but
    strictly positive when given."""

    mass: Optional[float] = None  # kg
    length: Optional[float] = None  # m (box size a or orbit radius)
    speed: Optional[float] = None  # m/s
    angular_momentum: Optional[float] = None  # J s
    k: Optional[float] = None  # J m (gravitational/Coulomb coupling)

    def __post_init__(self):
        for name in ("mass", "length", "speed", "angular_momentum", "k"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be strictly positive, got {v}")

    def require(self, *names):
        for name in names:
            if getattr(self, name) is None:
                raise DomainError(f"missing required SI input {name!r}")


def box_ehrenfest_time(si: SIInputs) -> tuple[float, float]:
    """Dephasing time for a particle bouncing in a hard box.

    Returns (tau/T_c, tau in seconds) with I = m v a / pi, T_c = 2a/v,
    tau/T_c = sqrt(2 I / hbar).
    """
    si.require("mass", "length", "speed")
    action = si.mass * si.speed * si.length / math.pi
    t_c = 2 * si.length / si.speed
    ratio = math.sqrt(2 * action / HBAR_SI)
    return ratio, ratio * t_c


def box_revival_time(si: SIInputs) -> float:
    """Full rephasing time of the box in units of T_c: 2 I / hbar."""
    si.require("mass", "length", "speed")
    action = si.mass * si.speed * si.length / math.pi
    return 2 * action / HBAR_SI


def kepler_ehrenfest_time(L: float, I: float, m: float, k: float) -> tuple[float, float]:
    """Dephasing time for a Kepler orbit with angular momentum L and
    radial action I.

    H = -m k^2 / (2 (I+L)^2), omega = m k^2 / (I+L)^3, T_c = 2 pi / omega.
    Returns (tau/T_c, tau in seconds).
    """
    if L <= 0:
        raise DomainError(f"angular momentum must be positive, got {L}")
    if I < 0:
        raise DomainError(f"radial action must be nonnegative, got {I}")
    if m <= 0 or k <= 0:
        raise DomainError("mass and coupling must be positive")
    total = I + L
    t_c = 2 * math.pi * total**3 / (m * k * k)
    denom = (math.sqrt(HBAR_SI * (total**2 - L**2) / (L**2 * total))
             + (L / total) * math.sqrt(HBAR_SI / L))
    ratio = (math.sqrt(2) / 3) / denom
    return ratio, ratio * t_c


def kepler_revival_time(L: float, I: float = 0.0) -> float:
    """Full rephasing time of the Kepler orbit in units of T_c:
    (2/3) (I+L) / hbar."""
    if L <= 0:
        raise DomainError(f"angular momentum must be positive, got {L}")
    if I < 0:
        raise DomainError(f"radial action must be nonnegative, got {I}")
    return (2.0 / 3.0) * (I + L) / HBAR_SI


def kepler_coupling_for_period(L: float, I: float, m: float, period: float) -> float:
    """Inverse of the T_c relation: the k that gives the requested orbital
    period for the supplied (L, I, m)."""
    if period <= 0 or m <= 0:
        raise DomainError("period and mass must be positive")
    total = I + L
    return math.sqrt(2 * math.pi * total**3 / (m * period))


@dataclass
class ScenarioSpec:
    """Fully resolved simulation scenario."""

    hamiltonian: Hamiltonian
    hbar: ScaledPlanck
    x0: Sequence[float]
    p0: Sequence[float]
    grid: Optional[GridSpec]
    dt: float
    t_final: float
    ensemble_size: int = 100_000
    rng_seed: int = 20240811
    sample_every: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x0 = tuple(float(v) for v in np.atleast_1d(self.x0))
        self.p0 = tuple(float(v) for v in np.atleast_1d(self.p0))
        d = self.hamiltonian.dim
        if len(self.x0) != d or len(self.p0) != d:
            raise ConfigError(
                f"initial condition dimension {len(self.x0)}/{len(self.p0)} "
                f"does not match hamiltonian dimension {d}")
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.t_final <= 0:
            raise ConfigError(f"t_final must be positive, got {self.t_final}")
        if self.ensemble_size < 1:
            raise ConfigError(f"ensemble_size must be >= 1, got {self.ensemble_size}")
        if self.sample_every < 1:
            raise ConfigError(f"sample_every must be >= 1, got {self.sample_every}")

    @property
    def energy(self) -> float:
        return self.hamiltonian.energy(self.x0, self.p0)
