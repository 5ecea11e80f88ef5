"""Two-site Bose-Hubbard dimer: exact Fock-basis dynamics, the mean-field
limit, coherent-state (s, theta) ensembles, and the tau ~ sqrt(N) scaling
study where 1/N plays the role of hbar.

Time is measured in hbar/nu throughout, so quantum phases are
exp(-i (E/nu) t) and the mean-field equations carry c/nu only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from . import kernels
from .analysis import (TimeSeries, deviation_series, fit_envelope,
                       peak_envelope, scaling_fit)
from .errors import (DomainError, FitError, InsufficientDataError,
                     NumericsError, UsageError)

__all__ = [
    "FockStateVector", "MeanFieldState", "SThetaEnsemble", "MeanFieldResult",
    "build_bh_hamiltonian", "coherent_state", "quantum_evolve_bh",
    "bh_energy", "meanfield_energy", "meanfield_evolve", "stheta_ensemble",
    "ensemble_meanfield_evolve", "bose_tau_scaling", "bose_revival_analog",
    "stheta_widths", "theta_width_fourier",
]

MEANFIELD_DT = 1e-2
CONSERVATION_TOL = 1e-8

# Yoshida triple-jump coefficients promoting the Strang kernel step to
# fourth order (shared with the compiled kernel).
_T_CHUNK = 1024


@dataclass
class FockStateVector:
    """Amplitudes over |N-n, n>, n = 0..N counting particles in mode b."""

    amplitudes: np.ndarray
    n_particles: int
    c: float = 0.0
    nu: float = 1.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.n_particles < 1:
            raise UsageError("n_particles must be >= 1")
        if self.amplitudes.shape != (self.n_particles + 1,):
            raise UsageError(
                f"amplitudes must have length N+1 = {self.n_particles + 1}")
        if self.nu <= 0 or not math.isfinite(self.nu):
            raise UsageError("nu must be positive and finite")
        nrm = self.norm()
        if abs(nrm - 1.0) > 1e-10:
            raise UsageError(f"Fock state norm {nrm!r} deviates from 1")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def mean_s(self) -> float:
        """<b'b>/N, the average occupation fraction of mode b."""
        n = np.arange(self.n_particles + 1)
        return float(np.sum(n * np.abs(self.amplitudes) ** 2)) / self.n_particles

    def with_coupling(self, c: float, nu: float = 1.0) -> "FockStateVector":
        return replace(self, c=float(c), nu=float(nu))


@dataclass
class MeanFieldState:
    """Two complex mode amplitudes with |a|^2 + |b|^2 = 1."""

    a: complex
    b: complex
    c: float = 0.0
    nu: float = 1.0

    def __post_init__(self):
        self.a = complex(self.a)
        self.b = complex(self.b)
        if self.nu <= 0 or not math.isfinite(self.nu):
            raise UsageError("nu must be positive and finite")
        total = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(total - 1.0) > 1e-10:
            raise UsageError(f"|a|^2 + |b|^2 = {total!r} deviates from 1")

    @property
    def s(self) -> float:
        return abs(self.b) ** 2

    @property
    def theta(self) -> float:
        return math.atan2(self.b.imag, self.b.real) - math.atan2(self.a.imag, self.a.real)

    @classmethod
    def from_s_theta(cls, s: float, theta: float, c: float = 0.0,
                     nu: float = 1.0) -> "MeanFieldState":
        if not (0.0 <= s <= 1.0):
            raise UsageError(f"s must lie in [0, 1], got {s}")
        return cls(a=math.sqrt(1.0 - s), b=math.sqrt(s) * np.exp(1j * theta),
                   c=c, nu=nu)


@dataclass
class SThetaEnsemble:
    """Gaussian (s, theta) samples encoding the coherent-state widths."""

    s: np.ndarray
    theta: np.ndarray
    n_particles: int
    seed: int
    c: float = 0.0
    nu: float = 1.0

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.s.shape != self.theta.shape or self.s.ndim != 1 or self.s.size == 0:
            raise UsageError("s and theta must be equal-length 1D arrays")
        if np.any(self.s < 0) or np.any(self.s > 1):
            raise UsageError("s samples must lie in [0, 1]")

    @property
    def n_samples(self) -> int:
        return len(self.s)


def _bh_bands(n: int, c: float, nu: float):
    """Diagonal and first off-diagonal of the Fock-basis Hamiltonian."""
    ns = np.arange(n + 1, dtype=float)
    diag = (c / (2.0 * n)) * (ns * (ns - 1.0) + (n - ns) * (n - ns - 1.0))
    k = np.arange(n, dtype=float)  # couples n=k to n=k+1
    off = -(nu / 2.0) * np.sqrt((k + 1.0) * (n - k))
    return diag, off


def build_bh_hamiltonian(n_particles: int, c: float, nu: float = 1.0) -> np.ndarray:
    """Dense (N+1)x(N+1) tridiagonal matrix: hopping -(nu/2) sqrt((n+1)(N-n))
    on the off-diagonals, interaction (c/2N)[n(n-1) + (N-n)(N-n-1)] on the
    diagonal."""
    if n_particles < 1:
        raise UsageError("n_particles must be >= 1")
    diag, off = _bh_bands(n_particles, c, nu)
    h = np.diag(diag)
    idx = np.arange(n_particles)
    h[idx, idx + 1] = off
    h[idx + 1, idx] = off
    return h


def coherent_state(alpha: complex, beta: complex, n_particles: int,
                   c: float = 0.0, nu: float = 1.0) -> FockStateVector:
    """SU(2) coherent state (alpha a' + beta b')^N |0> / sqrt(N!), with
    amplitudes sqrt(N choose n) alpha^(N-n) beta^n built in log space so
    large N cannot overflow."""
    alpha = complex(alpha)
    beta = complex(beta)
    total = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(total - 1.0) > 1e-9:
        raise UsageError(f"|alpha|^2 + |beta|^2 = {total!r}, expected 1")
    n_tot = n_particles
    if n_tot < 1:
        raise UsageError("n_particles must be >= 1")
    ns = np.arange(n_tot + 1, dtype=float)
    log_binom = 0.5 * (gammaln(n_tot + 1) - gammaln(ns + 1) - gammaln(n_tot - ns + 1))

    def _pow_parts(z: complex, exps: np.ndarray):
        mag = abs(z)
        if mag == 0.0:
            logmag = np.where(exps == 0, 0.0, -np.inf)
            return logmag, np.zeros_like(exps)
        return exps * math.log(mag), exps * math.atan2(z.imag, z.real)

    la, pa = _pow_parts(alpha, n_tot - ns)
    lb, pb = _pow_parts(beta, ns)
    amps = np.exp(log_binom + la + lb) * np.exp(1j * (pa + pb))
    amps /= np.sqrt(np.sum(np.abs(amps) ** 2))
    return FockStateVector(amplitudes=amps, n_particles=n_tot, c=c, nu=nu)


def bh_energy(state: FockStateVector) -> float:
    """<H> in absolute units (nu carries the energy scale)."""
    diag, off = _bh_bands(state.n_particles, state.c, state.nu)
    a = state.amplitudes
    e = float(np.sum(diag * np.abs(a) ** 2))
    e += 2.0 * float(np.sum(off * np.real(np.conj(a[:-1]) * a[1:])))
    return e


def meanfield_energy(mf: MeanFieldState) -> float:
    """H_mf = -(nu/2)(a* b + a b*) + (c/2)(|a|^4 + |b|^4)."""
    hop = -mf.nu * (np.conj(mf.a) * mf.b).real
    inter = 0.5 * mf.c * (abs(mf.a) ** 4 + abs(mf.b) ** 4)
    return float(hop + inter)


def _uniform_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise UsageError("t_grid must be a 1D array with >= 2 points")
    steps = np.diff(t)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise UsageError("t_grid must be uniform and increasing")
    return t


def quantum_evolve_bh(state: FockStateVector, t_grid) -> TimeSeries:
    """Exact evolution by eigen-decomposition; returns <s>(t) = <b'b>/N.

    Time is in units of hbar/nu, so each eigenphase is exp(-i (E/nu) t).
    """
    t = _uniform_grid(t_grid)
    diag, off = _bh_bands(state.n_particles, state.c, state.nu)
    w, v = eigh_tridiagonal(diag, off)
    coeff = v.T @ state.amplitudes
    n_frac = np.arange(state.n_particles + 1) / state.n_particles
    omega = w / state.nu

    s_out = np.empty(len(t))
    worst_norm = 0.0
    for lo in range(0, len(t), _T_CHUNK):
        block = t[lo:lo + _T_CHUNK]
        phases = np.exp(-1j * np.outer(omega, block))
        amps = v @ (coeff[:, None] * phases)
        prob = np.abs(amps) ** 2
        norms = prob.sum(axis=0)
        worst_norm = max(worst_norm, float(np.max(np.abs(norms - 1.0))))
        s_out[lo:lo + len(block)] = n_frac @ prob
    if worst_norm > 1e-10:
        raise NumericsError(f"norm drift {worst_norm:.2e} in eigenbasis evolution")
    meta = {"n_particles": state.n_particles, "c": state.c, "nu": state.nu,
            "observable": "mean_s"}
    return TimeSeries(t, s_out, meta)


@dataclass
class MeanFieldResult:
    series: dict  # "s" and "theta" TimeSeries
    final: MeanFieldState
    energy_drift: float


def _evolve_modes(a: np.ndarray, b: np.ndarray, gamma: float, t: np.ndarray,
                  dt: float, record):
    """March mode arrays across t samples with the split-step kernel."""
    record(0, a, b)
    for i in range(1, len(t)):
        span = float(t[i] - t[i - 1])
        n_sub = max(1, int(round(span / dt)))
        kernels.dimer_splitstep(a, b, gamma, span / n_sub, n_sub)
        record(i, a, b)


def meanfield_evolve(mf: MeanFieldState, t_grid,
                     dt: float = MEANFIELD_DT) -> MeanFieldResult:
    """Integrate i da/dt = -(nu/2) b + c |a|^2 a (and a<->b) in hbar/nu
    time units with a fourth-order split-step scheme.

    Norm is conserved by construction; H_mf drift beyond 1e-8 raises
    NumericsError suggesting a smaller dt.
    """
    if dt <= 0 or not math.isfinite(dt):
        raise UsageError(f"dt must be positive and finite, got {dt}")
    t = _uniform_grid(t_grid)
    gamma = mf.c / mf.nu
    a = np.array([mf.a], dtype=np.complex128)
    b = np.array([mf.b], dtype=np.complex128)

    s_vals = np.empty(len(t))
    th_vals = np.empty(len(t))

    def record(i, aa, bb):
        s_vals[i] = abs(bb[0]) ** 2
        th_vals[i] = math.atan2(bb[0].imag, bb[0].real) - math.atan2(aa[0].imag, aa[0].real)

    _evolve_modes(a, b, gamma, t, dt, record)

    final = MeanFieldState(a=a[0], b=b[0], c=mf.c, nu=mf.nu)
    e0 = meanfield_energy(mf)
    e1 = meanfield_energy(final)
    scale = max(abs(e0), mf.nu)
    drift = abs(e1 - e0) / scale
    if drift > CONSERVATION_TOL:
        raise NumericsError(
            f"mean-field energy drift {drift:.2e} exceeds 1e-8; reduce dt")
    meta = {"c": mf.c, "nu": mf.nu}
    return MeanFieldResult(
        series={"s": TimeSeries(t, s_vals, dict(meta, observable="s")),
                "theta": TimeSeries(t, th_vals, dict(meta, observable="theta"))},
        final=final, energy_drift=drift)


def stheta_widths(beta_sq: float, n_particles: int) -> tuple:
    """Closed-form (delta_s, delta_theta); their product is 1/(2N)."""
    if not (0.0 < beta_sq < 1.0):
        raise DomainError(
            f"|beta|^2 = {beta_sq} sits at a pole of the theta width "
            "1/(2 sqrt(N) |beta| sqrt(1-|beta|^2))")
    root = math.sqrt(beta_sq * (1.0 - beta_sq))
    ds = root / math.sqrt(n_particles)
    dtheta = 1.0 / (2.0 * math.sqrt(n_particles) * root)
    return ds, dtheta


def stheta_ensemble(alpha: complex, beta: complex, n_particles: int,
                    n_samples: int, seed: int, c: float = 0.0,
                    nu: float = 1.0) -> SThetaEnsemble:
    """Independent Gaussians around (|beta|^2, arg beta - arg alpha) with
    the coherent-state widths; s samples outside [0, 1] are redrawn."""
    alpha = complex(alpha)
    beta = complex(beta)
    total = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(total - 1.0) > 1e-9:
        raise UsageError(f"|alpha|^2 + |beta|^2 = {total!r}, expected 1")
    if n_samples < 1:
        raise UsageError("n_samples must be positive")
    beta_sq = abs(beta) ** 2
    ds, dtheta = stheta_widths(beta_sq, n_particles)  # DomainError at poles
    theta0 = math.atan2(beta.imag, beta.real) - math.atan2(alpha.imag, alpha.real)

    rng = np.random.default_rng(seed)
    s = rng.normal(beta_sq, ds, size=n_samples)
    for _ in range(1000):
        bad = (s < 0.0) | (s > 1.0)
        if not np.any(bad):
            break
        s[bad] = rng.normal(beta_sq, ds, size=int(np.sum(bad)))
    else:
        raise NumericsError("s rejection sampling failed to converge")
    theta = rng.normal(theta0, dtheta, size=n_samples)
    return SThetaEnsemble(s=s, theta=theta, n_particles=n_particles,
                          seed=seed, c=c, nu=nu)


def ensemble_meanfield_evolve(ens: SThetaEnsemble, t_grid,
                              dt: float = MEANFIELD_DT) -> TimeSeries:
    """Evolve every (s, theta) sample through the mean-field equations and
    average s with a fixed reduction order."""
    if dt <= 0 or not math.isfinite(dt):
        raise UsageError(f"dt must be positive and finite, got {dt}")
    t = _uniform_grid(t_grid)
    gamma = ens.c / ens.nu
    a = np.ascontiguousarray(np.sqrt(1.0 - ens.s), dtype=np.complex128)
    b = np.ascontiguousarray(np.sqrt(ens.s) * np.exp(1j * ens.theta))

    sbar = np.empty(len(t))

    def record(i, aa, bb):
        sbar[i] = float(np.mean(np.abs(bb) ** 2))

    _evolve_modes(a, b, gamma, t, dt, record)

    norm_err = float(np.max(np.abs(np.abs(a) ** 2 + np.abs(b) ** 2 - 1.0)))
    if norm_err > CONSERVATION_TOL:
        raise NumericsError(f"mode-norm drift {norm_err:.2e} in ensemble evolution")
    meta = {"n_particles": ens.n_particles, "c": ens.c, "nu": ens.nu,
            "n_samples": ens.n_samples, "observable": "mean_s"}
    return TimeSeries(t, sbar, meta)


def _bose_tau(n_particles: int, c_over_nu: float, initial, t_max: float,
              dt_grid: float) -> float:
    alpha, beta = initial
    t = np.arange(int(round(t_max / dt_grid)) + 1) * dt_grid
    state = coherent_state(alpha, beta, n_particles, c=c_over_nu, nu=1.0)
    quantum = quantum_evolve_bh(state, t)
    mf = MeanFieldState(a=complex(alpha), b=complex(beta), c=c_over_nu, nu=1.0)
    classical = meanfield_evolve(mf, t).series["s"]
    dev = deviation_series(quantum, classical, mode="absolute")
    peaks = peak_envelope(dev)
    return fit_envelope(peaks).tau


def bose_tau_scaling(n_list: Sequence[int], c_over_nu: float, initial,
                     t_max: Optional[float] = None,
                     dt_grid: float = 0.05) -> tuple:
    """Quantum-vs-mean-field breakdown time for each N, then the log-log
    regression of tau against N (via hbar = 1/N, so tau ~ sqrt(N) reads
    as slope 0.5).

    Returns (slope, intercept). Fit failures are collected and reported
    per N in a single FitError.
    """
    ns = [int(n) for n in n_list]
    if len(ns) < 4:
        raise UsageError("need at least 4 values of N for a scaling fit")
    taus = {}
    failures = []
    for n in ns:
        span = t_max if t_max is not None else 8.0 * math.sqrt(n)
        try:
            taus[n] = _bose_tau(n, c_over_nu, initial, span, dt_grid)
        except (FitError, InsufficientDataError) as exc:
            failures.append(f"N={n}: {exc}")
    if failures:
        raise FitError("tau extraction failed for " + "; ".join(failures),
                       trace=failures)
    fit = scaling_fit([(1.0 / n, taus[n]) for n in ns])
    return fit.slope, fit.intercept


def bose_revival_analog(n_particles: int, c_over_nu: float, initial,
                        t_max: Optional[float] = None,
                        dt_grid: float = 0.05) -> float:
    """Time of the strongest return of <s(t)> toward its initial
    oscillation amplitude, searched beyond the collapse plateau; grows
    linearly with N for fixed c/nu."""
    alpha, beta = initial
    span = t_max if t_max is not None else 6.0 * n_particles
    t = np.arange(int(round(span / dt_grid)) + 1) * dt_grid
    state = coherent_state(alpha, beta, n_particles, c=c_over_nu, nu=1.0)
    series = quantum_evolve_bh(state, t)
    signal = np.abs(series.v - 0.5)
    mask = t > 0.5 * n_particles
    if not np.any(mask):
        raise UsageError("t_max too small to skip the collapse plateau")
    idx = int(np.argmax(np.where(mask, signal, -np.inf)))
    return float(t[idx])


def theta_width_fourier(beta_sq: float, n_particles: int) -> float:
    """Width of the theta distribution built by the discrete Fourier
    transform of the coherent amplitudes over the theta lattice
    2 pi k / (N+1); cross-checks the closed-form width."""
    if not (0.0 < beta_sq < 1.0):
        raise DomainError("beta_sq must lie strictly inside (0, 1)")
    n_tot = n_particles
    amps = coherent_state(math.sqrt(1.0 - beta_sq), math.sqrt(beta_sq),
                          n_tot).amplitudes
    ks = np.arange(n_tot + 1)
    thetas = 2.0 * np.pi * ks / (n_tot + 1) - np.pi
    ns = np.arange(n_tot + 1)
    # phi(theta) = (N+1)^{-1/2} sum_s phi_N(s) exp(-i N s theta), s = n/N
    phase = np.exp(-1j * np.outer(thetas, ns))
    phi = phase @ amps / math.sqrt(n_tot + 1)
    prob = np.abs(phi) ** 2
    prob /= prob.sum()
    mean = float(np.sum(thetas * prob))
    var = float(np.sum((thetas - mean) ** 2 * prob))
    return math.sqrt(var)
