"""Coarse-grained phase-space comparison: Planck-cell partitions with
dx*dp = 2*pi*hbar_eps, Husimi mass of a wave function per cell, ensemble
occupation per cell, and the L1 distance between the two."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ensemble import PhaseEnsemble
from .errors import ConfigError, NumericsError, UsageError
from .quantum import WaveFunction

__all__ = ["PlanckGrid", "PhaseDensity", "husimi_density",
           "ensemble_density", "density_distance"]


@dataclass(frozen=True)
class PlanckGrid:
    """Uniform rectangular partition of the (x, p) plane into cells of
    area exactly 2*pi*hbar_eps."""

    x_edges: np.ndarray
    p_edges: np.ndarray
    hbar_eps: float

    def __post_init__(self):
        xe = np.asarray(self.x_edges, dtype=float)
        pe = np.asarray(self.p_edges, dtype=float)
        object.__setattr__(self, "x_edges", xe)
        object.__setattr__(self, "p_edges", pe)
        if xe.ndim != 1 or pe.ndim != 1 or len(xe) < 2 or len(pe) < 2:
            raise UsageError("edges must be 1D arrays with >= 2 entries")
        for name, e in (("x_edges", xe), ("p_edges", pe)):
            d = np.diff(e)
            if np.any(d <= 0):
                raise UsageError(f"{name} must be strictly increasing")
            if not np.allclose(d, d[0], rtol=1e-9, atol=0):
                raise UsageError(f"{name} must be uniformly spaced")
        if not (self.hbar_eps > 0 and math.isfinite(self.hbar_eps)):
            raise UsageError("hbar_eps must be positive and finite")
        area = float(xe[1] - xe[0]) * float(pe[1] - pe[0])
        target = 2 * math.pi * self.hbar_eps
        if abs(area - target) > 1e-9 * target:
            raise ConfigError(
                f"cell area {area:.6g} != 2*pi*hbar_eps = {target:.6g}")

    @property
    def dx(self) -> float:
        return float(self.x_edges[1] - self.x_edges[0])

    @property
    def dp(self) -> float:
        return float(self.p_edges[1] - self.p_edges[0])

    @property
    def shape(self) -> tuple:
        return (len(self.x_edges) - 1, len(self.p_edges) - 1)

    @classmethod
    def centered(cls, x_center: float, p_center: float, hbar_eps: float,
                 n_x: int, n_p: int, aspect: float = 1.0) -> "PlanckGrid":
        """Grid with a cell CORNER at (x_center, p_center); n_x and n_p
        must be even so the corner is shared by four central cells.

        aspect > 1 widens cells in x at the expense of p, keeping the
        area at 2*pi*hbar_eps.
        """
        if n_x < 2 or n_p < 2 or n_x % 2 or n_p % 2:
            raise UsageError("n_x and n_p must be even and >= 2")
        if not (aspect > 0 and math.isfinite(aspect)):
            raise UsageError("aspect must be positive and finite")
        dx = math.sqrt(2 * math.pi * hbar_eps * aspect)
        dp = math.sqrt(2 * math.pi * hbar_eps / aspect)
        xe = x_center + (np.arange(n_x + 1) - n_x // 2) * dx
        pe = p_center + (np.arange(n_p + 1) - n_p // 2) * dp
        return cls(x_edges=xe, p_edges=pe, hbar_eps=hbar_eps)

    @classmethod
    def cover(cls, x_range, p_range, hbar_eps: float,
              aspect: float = 1.0) -> "PlanckGrid":
        """Smallest grid of Planck cells anchored at (x_range[0],
        p_range[0]) that covers both intervals."""
        x_lo, x_hi = map(float, x_range)
        p_lo, p_hi = map(float, p_range)
        if not (x_hi > x_lo and p_hi > p_lo):
            raise UsageError("ranges must have positive extent")
        dx = math.sqrt(2 * math.pi * hbar_eps * aspect)
        dp = math.sqrt(2 * math.pi * hbar_eps / aspect)
        n_x = max(1, int(math.ceil((x_hi - x_lo) / dx - 1e-12)))
        n_p = max(1, int(math.ceil((p_hi - p_lo) / dp - 1e-12)))
        xe = x_lo + np.arange(n_x + 1) * dx
        pe = p_lo + np.arange(n_p + 1) * dp
        return cls(x_edges=xe, p_edges=pe, hbar_eps=hbar_eps)

    @classmethod
    def anchored(cls, x_anchor: float, p_anchor: float, x_range, p_range,
                 hbar_eps: float, aspect: float = 1.0) -> "PlanckGrid":
        """Cells on the lattice through the anchor corner, covering the
        (possibly asymmetric) ranges; the anchor need not be inside."""
        x_lo, x_hi = map(float, x_range)
        p_lo, p_hi = map(float, p_range)
        if not (x_hi > x_lo and p_hi > p_lo):
            raise UsageError("ranges must have positive extent")
        dx = math.sqrt(2 * math.pi * hbar_eps * aspect)
        dp = math.sqrt(2 * math.pi * hbar_eps / aspect)

        def edges(anchor, lo, hi, step):
            i_lo = int(math.floor((lo - anchor) / step + 1e-12))
            i_hi = max(i_lo + 1, int(math.ceil((hi - anchor) / step - 1e-12)))
            return anchor + np.arange(i_lo, i_hi + 1) * step

        return cls(x_edges=edges(x_anchor, x_lo, x_hi, dx),
                   p_edges=edges(p_anchor, p_lo, p_hi, dp),
                   hbar_eps=hbar_eps)


@dataclass
class PhaseDensity:
    """Probability mass per Planck cell plus the mass that fell outside."""

    grid: PlanckGrid
    masses: np.ndarray  # (n_x, n_p)
    leakage: float
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.masses = np.asarray(self.masses, dtype=float)
        if self.masses.shape != self.grid.shape:
            raise UsageError("masses shape does not match the grid")
        if np.any(self.masses < -1e-12):
            raise UsageError("cell masses must be nonnegative")

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))

    def marginal_x(self) -> np.ndarray:
        return np.sum(self.masses, axis=1)

    def marginal_p(self) -> np.ndarray:
        return np.sum(self.masses, axis=0)


def husimi_density(wf: WaveFunction, grid: PlanckGrid,
                   quad_order: int = 8) -> PhaseDensity:
    """Integrate the Husimi distribution Q(x, p) = |<coh_{x,p}|psi>|^2 /
    (2 pi hbar_eps) over every Planck cell.

    Each p line is a single FFT correlation of psi against the coherent
    envelope; p integration uses Gauss-Legendre nodes inside each cell,
    x integration rides the wave-function grid.
    """
    if wf.grid.ndim != 1:
        raise UsageError("husimi_density supports 1D wave functions")
    hbar_eps = wf.hbar.hbar_eps
    if abs(grid.hbar_eps - hbar_eps) > 1e-12 * hbar_eps:
        raise UsageError("grid and wave function disagree on hbar_eps")

    x = wf.grid.axis(0)
    n = len(x)
    dx_wf = wf.grid.dx(0)
    sigma = math.sqrt(hbar_eps / 2.0)

    # overlap against the coherent envelope evaluated in momentum space:
    # corr(x_m) = ifft(fft(psi) * ghat(k - p/hbar))_m up to a pure phase.
    # The envelope transform is analytic, so p lines outside the grid's
    # momentum band decay instead of wrapping around.
    psi_hat = np.fft.fft(wf.amplitudes)
    k = wf.grid.wavenumbers(0)
    g_amp = (8 * math.pi * sigma**2) ** 0.25

    # map wave-function x points to x cells; -1 marks out-of-range
    cell_of = np.searchsorted(grid.x_edges, x, side="right") - 1
    cell_of[(x < grid.x_edges[0]) | (x >= grid.x_edges[-1])] = -1
    in_range = cell_of >= 0
    n_x, n_p = grid.shape

    nodes, weights = np.polynomial.legendre.leggauss(quad_order)
    masses = np.zeros((n_x, n_p))
    half_dp = grid.dp / 2.0
    norm = dx_wf / (2 * math.pi * hbar_eps)

    for j in range(n_p):
        p_mid = 0.5 * (grid.p_edges[j] + grid.p_edges[j + 1])
        for node, weight in zip(nodes, weights):
            p_val = p_mid + half_dp * node
            g_env = g_amp * np.exp(-(sigma**2) * (k - p_val / hbar_eps) ** 2)
            corr = np.fft.ifft(psi_hat * g_env)
            q_line = np.abs(corr) ** 2 * norm  # Q * dx at every grid x
            row = np.bincount(cell_of[in_range],
                              weights=q_line[in_range], minlength=n_x)
            masses[:, j] += (weight * half_dp) * row

    total = float(np.sum(masses))
    if total > 1.0 + 1e-6:
        raise NumericsError(
            f"Husimi cell masses sum to {total:.8f} > 1; quadrature or "
            "grid resolution is inconsistent")
    return PhaseDensity(grid=grid, masses=masses, leakage=1.0 - total,
                        kind="husimi", meta={"hbar_eps": hbar_eps,
                                             "quad_order": quad_order})


def ensemble_density(ensemble: PhaseEnsemble, grid: PlanckGrid) -> PhaseDensity:
    """Fraction of swarm points per Planck cell."""
    if ensemble.dim != 1:
        raise UsageError("ensemble_density supports 1D ensembles")
    counts, _, _ = np.histogram2d(ensemble.x, ensemble.p,
                                  bins=[grid.x_edges, grid.p_edges])
    masses = counts / ensemble.n_points
    return PhaseDensity(grid=grid, masses=masses,
                        leakage=1.0 - float(np.sum(masses)),
                        kind="ensemble",
                        meta={"n_points": ensemble.n_points})


def density_distance(a: PhaseDensity, b: PhaseDensity) -> float:
    """L1 distance over cells plus the out-of-grid bucket; 0 for equal
    distributions, at most 2."""
    if a.grid.shape != b.grid.shape:
        raise UsageError("densities live on different grids")
    if (not np.allclose(a.grid.x_edges, b.grid.x_edges, rtol=0, atol=1e-12)
            or not np.allclose(a.grid.p_edges, b.grid.p_edges, rtol=0, atol=1e-12)):
        raise UsageError("densities live on different grids")
    return float(np.sum(np.abs(a.masses - b.masses)) + abs(a.leakage - b.leakage))
