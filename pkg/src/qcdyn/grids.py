"""Uniform spatial grids for the spectral propagator and eigensolver."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UsageError


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Per-axis uniform grid. Endpoints are period-open: points are
    x_min + i*dx, i = 0..n-1, so the spectral transform sees an exact
    period of length (x_max - x_min)."""

    x_min: tuple
    x_max: tuple
    n_points: tuple

    def __post_init__(self):
        mins = tuple(float(v) for v in np.atleast_1d(self.x_min))
        maxs = tuple(float(v) for v in np.atleast_1d(self.x_max))
        ns = tuple(int(v) for v in np.atleast_1d(self.n_points))
        object.__setattr__(self, "x_min", mins)
        object.__setattr__(self, "x_max", maxs)
        object.__setattr__(self, "n_points", ns)
        if not (len(mins) == len(maxs) == len(ns)):
            raise ConfigError("grid axis lists must have equal length")
        if len(mins) not in (1, 2):
            raise ConfigError(f"only 1D and 2D grids supported, got {len(mins)} axes")
        for i, (lo, hi, n) in enumerate(zip(mins, maxs, ns)):
            if hi <= lo:
                raise ConfigError(f"grid axis {i}: x_max must exceed x_min")
            if n < 64:
                raise ConfigError(f"grid axis {i}: need at least 64 points, got {n}")
            if not _is_power_of_two(n):
                raise ConfigError(f"grid axis {i}: n_points must be a power of two, got {n}")

    @classmethod
    def make(cls, x_min, x_max, n_points) -> "GridSpec":
        return cls(tuple(np.atleast_1d(x_min)), tuple(np.atleast_1d(x_max)),
                   tuple(np.atleast_1d(n_points)))

    @property
    def ndim(self) -> int:
        return len(self.n_points)

    def length(self, axis: int = 0) -> float:
        return self.x_max[axis] - self.x_min[axis]

    def dx(self, axis: int = 0) -> float:
        return self.length(axis) / self.n_points[axis]

    @property
    def cell_volume(self) -> float:
        v = 1.0
        for i in range(self.ndim):
            v *= self.dx(i)
        return v

    def axis(self, axis: int = 0) -> np.ndarray:
        n = self.n_points[axis]
        return self.x_min[axis] + self.dx(axis) * np.arange(n)

    def meshes(self) -> tuple:
        axes = [self.axis(i) for i in range(self.ndim)]
        if self.ndim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def wavenumbers(self, axis: int = 0) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n_points[axis], self.dx(axis))

    def momenta(self, hbar_eps: float, axis: int = 0) -> np.ndarray:
        return hbar_eps * self.wavenumbers(axis)

    def momentum_extent(self, hbar_eps: float, axis: int = 0) -> float:
        """Half-width of the dual momentum grid, pi*hbar_eps*n/L."""
        return np.pi * hbar_eps * self.n_points[axis] / self.length(axis)

    def require_momentum_coverage(self, hbar_eps: float, p0, n_sigma: float = 6.0):
        """The dual grid must contain p0 +- n_sigma * sigma_p per axis."""
        sigma_p = np.sqrt(hbar_eps / 2)
        p0 = np.atleast_1d(p0)
        if len(p0) != self.ndim:
            raise UsageError("p0 dimension does not match grid")
        for i in range(self.ndim):
            need = abs(float(p0[i])) + n_sigma * sigma_p
            have = self.momentum_extent(hbar_eps, i)
            if need > have:
                raise ConfigError(
                    f"momentum grid too small on axis {i}: spans +-{have:.4g} "
                    f"but p0 +- {n_sigma} sigma_p needs {need:.4g}; "
                    "increase n_points or shrink the spatial extent")

    def contains(self, x) -> bool:
        x = np.atleast_1d(x)
        return all(self.x_min[i] <= float(x[i]) <= self.x_max[i]
                   for i in range(self.ndim))


def _next_power_of_two(n: int) -> int:
    p = 64
    while p < n:
        p *= 2
    return p


def populated_potential_ceiling(hamiltonian, orbit_min, orbit_max,
                                hbar_eps: float) -> float:
    """Largest potential value the packet populates at meaningful amplitude.

    The packet center visits the orbit boundary; Gaussian tails reach
    ~1e-8 relative amplitude 8.3 sigma_x further out. Energies above the
    potential there carry no weight, so phases and momenta beyond that
    level need no resolution. Probed per axis with the other coordinates
    held at the orbit-box center.
    """
    orbit_min = np.atleast_1d(np.asarray(orbit_min, dtype=float))
    orbit_max = np.atleast_1d(np.asarray(orbit_max, dtype=float))
    reach = 8.3 * np.sqrt(hbar_eps / 2)
    center = 0.5 * (orbit_min + orbit_max)
    v_pop = 0.0
    for axis in range(len(orbit_min)):
        for probe_x in (orbit_min[axis] - reach, orbit_max[axis] + reach):
            pt = center.copy()
            pt[axis] = probe_x
            v_pop = max(v_pop, float(np.asarray(
                hamiltonian.potential(*(np.asarray([c]) for c in pt))).ravel()[0]))
    return v_pop


def _axis_momentum_for_energy(hamiltonian, axis: int, dim: int, energy: float) -> float:
    """|p| along one axis with kinetic energy `energy` (kinetic is an even
    quadratic in each axis momentum for the supported Hamiltonians)."""
    unit = [np.asarray(0.0)] * dim
    unit[axis] = np.asarray(1.0)
    coeff = float(np.asarray(hamiltonian.kinetic(*unit)).ravel()[0])
    return math.sqrt(max(energy, 0.0) / coeff)


def auto_grid(orbit_min, orbit_max, p_extent, hbar_eps: float,
              n_max: int = 4096, headroom: float = 1.25,
              hamiltonian=None) -> GridSpec:
    """Size a grid from a classical orbit bounding box.

    The spatial extent pads the orbit by max(11 sigma_x, 2 sigma_x + 0.25):
    the packet center visits the orbit boundary, and from there the Gaussian
    must fall below 1e-12 relative amplitude before the edge. The point
    count is the smallest power of two whose dual grid covers the orbit
    momenta plus 6 sigma_p with the given headroom factor; when a
    Hamiltonian is supplied the dual grid additionally covers the classical
    momentum of every energy the packet tail populates (see
    populated_potential_ceiling), which otherwise folds back as aliasing.
    """
    orbit_min = np.atleast_1d(np.asarray(orbit_min, dtype=float))
    orbit_max = np.atleast_1d(np.asarray(orbit_max, dtype=float))
    p_extent = np.atleast_1d(np.asarray(p_extent, dtype=float))
    sigma = np.sqrt(hbar_eps / 2)
    margin = max(11 * sigma, 2 * sigma + 0.25)
    v_pop = None
    if hamiltonian is not None:
        v_pop = populated_potential_ceiling(hamiltonian, orbit_min, orbit_max,
                                            hbar_eps)
    mins, maxs, ns = [], [], []
    for axis, (lo, hi, pmax) in enumerate(zip(orbit_min, orbit_max, p_extent)):
        lo_pad = lo - margin
        hi_pad = hi + margin
        length = hi_pad - lo_pad
        p_need = headroom * (abs(pmax) + 6 * sigma)
        if v_pop is not None:
            p_need = max(p_need, _axis_momentum_for_energy(
                hamiltonian, axis, len(orbit_min), v_pop))
        n = _next_power_of_two(int(np.ceil(p_need * length / (np.pi * hbar_eps))))
        if n > n_max:
            raise ConfigError(
                f"auto grid needs {n} points (> {n_max}) to cover momenta; "
                "set the grid explicitly")
        mins.append(lo_pad)
        maxs.append(hi_pad)
        ns.append(n)
    return GridSpec(tuple(mins), tuple(maxs), tuple(ns))
