"""Spectral discretization and split-operator propagation of the scaled
Schrodinger equation i hbar_eps d/dt psi = [hbar_eps^2 T(-i d/dx) + V] psi
in 1D and 2D, plus Gaussian packets and an eigen-spectrum oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analysis import TimeSeries
from .errors import ConfigError, NumericsError, UsageError
from .grids import GridSpec, auto_grid  # re-exported grid types
from .model import Hamiltonian, ScaledPlanck

__all__ = [
    "GridSpec", "auto_grid", "WaveFunction", "Spectrum", "gaussian_packet",
    "propagate", "PropagationResult", "autocorrelation", "eigen_spectrum",
]

DEFAULT_OBSERVERS = ("x", "p", "var_x", "autocorr", "energy", "norm")


@dataclass
class WaveFunction:
    """Complex amplitudes over a GridSpec, normalized in the L2 sense."""

    amplitudes: np.ndarray
    grid: GridSpec
    hbar: ScaledPlanck

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != tuple(self.grid.n_points):
            raise UsageError(
                f"amplitude shape {self.amplitudes.shape} does not match "
                f"grid {tuple(self.grid.n_points)}")

    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.amplitudes) ** 2))
                         * self.grid.cell_volume)

    def normalize(self) -> "WaveFunction":
        self.amplitudes /= self.norm()
        return self

    def inner(self, other: "WaveFunction") -> complex:
        """L2 inner product <self|other>."""
        if self.grid != other.grid:
            raise UsageError("wave functions live on different grids")
        return complex(np.vdot(self.amplitudes, other.amplitudes)
                       * self.grid.cell_volume)

    def probability(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2 * self.grid.cell_volume

    def momentum_amplitudes(self) -> np.ndarray:
        """Momentum representation, unit-normalized against the dual grid."""
        d = self.grid.ndim
        scale = self.grid.cell_volume / (2 * np.pi * self.hbar.hbar_eps) ** (d / 2)
        return np.fft.fftn(self.amplitudes) * scale

    def momentum_cell(self) -> float:
        dp = 1.0
        for i in range(self.grid.ndim):
            dp *= 2 * np.pi * self.hbar.hbar_eps / self.grid.length(i)
        return dp

    def mean_x(self) -> tuple:
        prob = self.probability()
        return tuple(float(np.sum(mesh * prob)) for mesh in self.grid.meshes())

    def var_x(self) -> tuple:
        prob = self.probability()
        out = []
        for mesh in self.grid.meshes():
            mean = float(np.sum(mesh * prob))
            out.append(float(np.sum((mesh - mean) ** 2 * prob)))
        return tuple(out)

    def mean_p(self) -> tuple:
        phi = self.momentum_amplitudes()
        prob = np.abs(phi) ** 2 * self.momentum_cell()
        ps = _momentum_meshes(self.grid, self.hbar.hbar_eps)
        return tuple(float(np.sum(p * prob)) for p in ps)

    def copy(self) -> "WaveFunction":
        return WaveFunction(self.amplitudes.copy(), self.grid, self.hbar)


def _momentum_meshes(grid: GridSpec, hbar_eps: float) -> tuple:
    axes = [grid.momenta(hbar_eps, i) for i in range(grid.ndim)]
    if grid.ndim == 1:
        return (axes[0],)
    return tuple(np.meshgrid(*axes, indexing="ij"))


def gaussian_packet(grid: GridSpec, x0, p0, hbar: ScaledPlanck,
                    sigma_x=None) -> WaveFunction:
    """Minimal-uncertainty packet exp(-(x-x0)^2/4 sigma^2 + i p0 (x-x0)/hbar)
    per axis, sigma = sqrt(hbar_eps/2) by default.

    Raises ConfigError when the packet tail at a grid edge exceeds 1e-12
    or the dual grid does not cover p0 +- 6 sigma_p.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    d = grid.ndim
    if len(x0) != d or len(p0) != d:
        raise UsageError("x0/p0 dimension does not match grid")
    if not grid.contains(x0):
        raise ConfigError(f"packet center {tuple(x0)} lies outside the grid")
    grid.require_momentum_coverage(hbar.hbar_eps, p0)

    if sigma_x is None:
        sigmas = [hbar.sigma_x] * d
    elif np.isscalar(sigma_x):
        sigmas = [float(sigma_x)] * d
    else:
        sigmas = [float(s) for s in sigma_x]
        if len(sigmas) != d:
            raise UsageError("sigma_x length does not match grid dimension")

    meshes = grid.meshes()
    amp = np.ones(tuple(grid.n_points), dtype=np.complex128)
    for i in range(d):
        dx_c = meshes[i] - x0[i]
        amp = amp * ((2 * np.pi * sigmas[i] ** 2) ** -0.25
                     * np.exp(-dx_c**2 / (4 * sigmas[i] ** 2)
                              + 1j * p0[i] * dx_c / hbar.hbar_eps))
    wf = WaveFunction(amp, grid, hbar)

    edge = _edge_amplitude(wf.amplitudes)
    if edge > 1e-12:
        raise ConfigError(
            f"packet tail {edge:.2e} at grid edge exceeds 1e-12; "
            "enlarge the grid extent")
    return wf.normalize()


def _edge_amplitude(amps: np.ndarray) -> float:
    if amps.ndim == 1:
        return float(max(abs(amps[0]), abs(amps[-1])))
    worst = 0.0
    for axis in range(amps.ndim):
        sl = [slice(None)] * amps.ndim
        for idx in (0, -1):
            sl[axis] = idx
            worst = max(worst, float(np.max(np.abs(amps[tuple(sl)]))))
    return worst


@dataclass
class PropagationResult:
    series: dict  # observer name -> TimeSeries
    final: WaveFunction
    snapshots: list = field(default_factory=list)  # (time, WaveFunction)
    peak_snapshot: Optional[tuple] = None  # (time, WaveFunction, |autocorr|)


def propagate(wf: WaveFunction, hamiltonian: Hamiltonian, dt: float,
              n_steps: int, observers: Sequence[str] = DEFAULT_OBSERVERS,
              sample_every: int = 1, snapshot_times: Sequence[float] = (),
              alias_threshold: float = 1e-8,
              peak_snapshot_window=None) -> PropagationResult:
    """Symmetric split-operator propagation (half-kinetic, full-potential,
    half-kinetic per step), with observers sampled every sample_every steps.

    Consecutive steps between samples are merged (K/2 V (K V)^{k-1} K/2),
    which is algebraically identical to k individual steps. A growing
    momentum-space tail at the dual-grid edge raises NumericsError naming
    the offending step.

    peak_snapshot_window = (t_lo, t_hi) stores one extra snapshot at the
    sample with the largest |<psi(0)|psi(t)>| inside the window: recurrence
    peaks are far narrower than any practical snapshot comb.

    Where the potential winds faster than half a cycle per step
    (V dt / hbar_eps > pi) the phase is unresolvable in time, so V is
    saturated smoothly at that level (tanh turnover starting at 80% of the
    bound, keeping the profile C^2 so the turnover itself does not
    diffract). Saturated runs also damp the outer 2 sigma_x strip of the
    box each step, so residual wall scatter decays instead of
    recirculating through the periodic edges. The saturated region and the
    strip are deep inside classically forbidden walls: the packet must
    carry < 1e-10 probability beyond the saturation bound at t = 0, and
    the recorded norm stays flat to the level of the junk removed.
    """
    if wf.grid.ndim != hamiltonian.dim:
        raise UsageError("wave function and hamiltonian dimensions differ")
    if dt == 0 or not math.isfinite(dt):
        raise UsageError(f"dt must be a nonzero finite number, got {dt}")
    if n_steps < 0 or sample_every < 1:
        raise UsageError("n_steps must be >= 0 and sample_every >= 1")

    hbar_eps = wf.hbar.hbar_eps
    meshes = wf.grid.meshes()
    v_mesh = np.asarray(hamiltonian.potential(*meshes), dtype=float)
    v_cap = np.pi * hbar_eps / abs(dt)
    v_onset = 0.8 * v_cap
    absorb = None
    if np.any(v_mesh > v_onset):
        shell_mass = float(np.sum(np.abs(wf.amplitudes[v_mesh > v_cap]) ** 2)
                           * wf.grid.cell_volume)
        if shell_mass > 1e-10:
            raise ConfigError(
                f"initial packet carries {shell_mass:.2e} probability where "
                f"V > pi hbar_eps/dt = {v_cap:.3g}; shrink dt or the grid")
        width = v_cap - v_onset
        v_mesh = np.where(v_mesh > v_onset,
                          v_onset + width * np.tanh((v_mesh - v_onset) / width),
                          v_mesh)
        absorb = _edge_absorber(wf.grid, hbar_eps)
    p_meshes = _momentum_meshes(wf.grid, hbar_eps)
    t_mesh = hamiltonian.kinetic(*p_meshes)
    exp_v = np.exp(-1j * v_mesh * dt / hbar_eps)
    exp_t_half = np.exp(-1j * t_mesh * dt / (2 * hbar_eps))
    exp_t_full = np.exp(-1j * t_mesh * dt / hbar_eps)

    edge_mask = _nyquist_mask(wf.grid)
    tail_scale = wf.grid.cell_volume / (2 * np.pi * hbar_eps) ** (wf.grid.ndim / 2)

    psi0 = wf.copy()
    psi = wf.amplitudes.copy()
    n_samples = n_steps // sample_every + 1
    sample_dt = dt * sample_every
    ts = np.arange(n_samples) * sample_dt

    snap_index = {}
    for t_req in snapshot_times:
        idx = int(round(float(t_req) / sample_dt)) if sample_dt else 0
        if not (0 <= idx < n_samples):
            raise UsageError(f"snapshot time {t_req} outside the run window")
        snap_index.setdefault(idx, float(t_req))

    peak_lo = peak_hi = None
    peak_best = None  # (|A|, time, amplitudes)
    if peak_snapshot_window is not None:
        peak_lo, peak_hi = (float(v) for v in peak_snapshot_window)
        if not peak_lo < peak_hi:
            raise UsageError("peak snapshot window must satisfy t_lo < t_hi")
        if peak_lo > ts[-1]:
            raise UsageError(
                f"peak snapshot window starts at {peak_lo}, after the last "
                f"sample {float(ts[-1]):g}")

    recorder = _ObserverRecorder(observers, wf.grid, wf.hbar, hamiltonian,
                                 meshes, p_meshes, t_mesh, v_mesh, psi0, n_samples)
    snapshots = []

    recorder.record(0, psi)
    if 0 in snap_index:
        snapshots.append((0.0, WaveFunction(psi.copy(), wf.grid, wf.hbar)))

    done = 0
    for i in range(1, n_samples):
        chunk = min(sample_every, n_steps - done)
        phi = np.fft.fftn(psi)
        phi *= exp_t_half
        psi = np.fft.ifftn(phi)
        psi *= exp_v
        if absorb is not None:
            psi *= absorb
        for _ in range(chunk - 1):
            phi = np.fft.fftn(psi)
            phi *= exp_t_full
            psi = np.fft.ifftn(phi)
            psi *= exp_v
            if absorb is not None:
                psi *= absorb
        phi = np.fft.fftn(psi)
        phi *= exp_t_half
        tail = float(np.max(np.abs(phi[edge_mask]))) * tail_scale
        if tail > alias_threshold:
            raise NumericsError(
                f"momentum-grid aliasing at step {done + chunk}: "
                f"|psi~| = {tail:.2e} at the dual-grid edge; "
                "enlarge n_points or the grid extent")
        psi = np.fft.ifftn(phi)
        done += chunk
        recorder.record(i, psi)
        if i in snap_index:
            snapshots.append((float(ts[i]), WaveFunction(psi.copy(), wf.grid, wf.hbar)))
        if peak_lo is not None and peak_lo <= ts[i] <= peak_hi:
            a_abs = abs(complex(np.vdot(psi0.amplitudes, psi))) * wf.grid.cell_volume
            if peak_best is None or a_abs > peak_best[0]:
                peak_best = (a_abs, float(ts[i]), psi.copy())

    series = recorder.to_series(ts, {"hbar_eps": hbar_eps, "dt": dt})
    peak_snapshot = None
    if peak_best is not None:
        peak_snapshot = (peak_best[1],
                         WaveFunction(peak_best[2], wf.grid, wf.hbar),
                         peak_best[0])
    return PropagationResult(series=series,
                             final=WaveFunction(psi, wf.grid, wf.hbar),
                             snapshots=snapshots,
                             peak_snapshot=peak_snapshot)


def _edge_absorber(grid: GridSpec, hbar_eps: float) -> np.ndarray:
    """Amplitude mask: exactly 1 in the interior, smoothly falling to 0 at
    the periodic box edges over the outer 2 sigma_x strip on each axis."""
    width = 2.0 * math.sqrt(hbar_eps / 2.0)
    mask = np.ones(tuple(grid.n_points))
    for axis in range(grid.ndim):
        x = grid.axis(axis)
        lo = grid.x_min[axis]
        hi = lo + grid.length(axis)
        dist = np.minimum(x - lo, hi - x)
        u = np.clip(dist / width, 0.0, 1.0)
        prof = u * u * u * (u * (6.0 * u - 15.0) + 10.0)  # smootherstep
        shape = [1] * grid.ndim
        shape[axis] = len(x)
        mask = mask * prof.reshape(shape)
    return mask


def _nyquist_mask(grid: GridSpec):
    """Boolean mask selecting the highest-|k| band on each axis."""
    mask = np.zeros(tuple(grid.n_points), dtype=bool)
    for axis in range(grid.ndim):
        sl = [slice(None)] * grid.ndim
        sl[axis] = grid.n_points[axis] // 2  # the Nyquist index of fftfreq
        mask[tuple(sl)] = True
    return mask


class _ObserverRecorder:
    """Accumulates requested observables sample by sample."""

    def __init__(self, observers, grid, hbar, hamiltonian, meshes, p_meshes,
                 t_mesh, v_mesh, psi0, n_samples):
        known = {"x", "p", "var_x", "autocorr", "energy", "norm"}
        self.observers = tuple(observers)
        unknown = set(self.observers) - known
        if unknown:
            raise UsageError(f"unknown observers: {sorted(unknown)}")
        self.grid = grid
        self.hbar = hbar
        self.meshes = meshes
        self.p_meshes = p_meshes
        self.t_mesh = t_mesh
        self.v_mesh = v_mesh
        self.psi0 = psi0
        self.dv = grid.cell_volume
        d = grid.ndim
        self.dp = 1.0
        for i in range(d):
            self.dp *= 2 * np.pi * hbar.hbar_eps / grid.length(i)
        self.p_scale = self.dv / (2 * np.pi * hbar.hbar_eps) ** (d / 2)
        self.data = {}
        labels = lambda stem: [stem] if d == 1 else [f"{stem}{i+1}" for i in range(d)]
        for obs in self.observers:
            if obs in ("x", "p"):
                for lab in labels(obs):
                    self.data[lab] = np.empty(n_samples)
            elif obs == "var_x":
                for lab in labels("var_x"):
                    self.data[lab] = np.empty(n_samples)
            elif obs == "autocorr":
                self.data["autocorr_re"] = np.empty(n_samples)
                self.data["autocorr_im"] = np.empty(n_samples)
                self.data["autocorr_abs"] = np.empty(n_samples)
            else:
                self.data[obs] = np.empty(n_samples)

    def record(self, i, psi):
        d = self.grid.ndim
        need_p = "p" in self.observers or "energy" in self.observers
        prob = None
        if {"x", "var_x", "energy", "norm"} & set(self.observers):
            prob = np.abs(psi) ** 2 * self.dv
        prob_p = None
        if need_p:
            phi = np.fft.fftn(psi) * self.p_scale
            prob_p = np.abs(phi) ** 2 * self.dp
        for obs in self.observers:
            if obs == "x":
                for ax in range(d):
                    lab = "x" if d == 1 else f"x{ax+1}"
                    self.data[lab][i] = float(np.sum(self.meshes[ax] * prob))
            elif obs == "p":
                for ax in range(d):
                    lab = "p" if d == 1 else f"p{ax+1}"
                    self.data[lab][i] = float(np.sum(self.p_meshes[ax] * prob_p))
            elif obs == "var_x":
                for ax in range(d):
                    lab = "var_x" if d == 1 else f"var_x{ax+1}"
                    mean = float(np.sum(self.meshes[ax] * prob))
                    self.data[lab][i] = float(
                        np.sum((self.meshes[ax] - mean) ** 2 * prob))
            elif obs == "autocorr":
                val = complex(np.vdot(self.psi0.amplitudes, psi) * self.dv)
                self.data["autocorr_re"][i] = val.real
                self.data["autocorr_im"][i] = val.imag
                self.data["autocorr_abs"][i] = abs(val)
            elif obs == "energy":
                kin = float(np.sum(self.t_mesh * prob_p))
                pot = float(np.sum(self.v_mesh * prob))
                self.data[obs][i] = kin + pot
            elif obs == "norm":
                self.data[obs][i] = math.sqrt(float(np.sum(prob)))

    def to_series(self, ts, meta):
        return {name: TimeSeries(ts, vals, dict(meta))
                for name, vals in self.data.items()}


def autocorrelation(wf_t: WaveFunction, wf_0: WaveFunction) -> complex:
    """<psi(0)|psi(t)> on a common grid."""
    if wf_t.grid != wf_0.grid:
        raise UsageError("autocorrelation requires a common grid")
    return complex(np.vdot(wf_0.amplitudes, wf_t.amplitudes)
                   * wf_t.grid.cell_volume)


@dataclass
class Spectrum:
    """Eigenvalues (and optionally eigenvectors) of the discretized 1D
    Hamiltonian, with a spectral-resolution trust marker."""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]
    n_levels: int
    trusted_levels: int
    warning: bool


def eigen_spectrum(hamiltonian: Hamiltonian, grid: GridSpec,
                   hbar: ScaledPlanck, n_levels: int,
                   want_vectors: bool = False) -> Spectrum:
    """Lowest eigenvalues via the dense spectral Hamiltonian
    K = F^dagger diag(T(p)) F plus diag(V).

    Levels whose de Broglie wavelength is sampled by fewer than 8 grid
    points are flagged as untrusted (warning=True).
    """
    if hamiltonian.dim != 1 or grid.ndim != 1:
        raise UsageError("eigen_spectrum supports 1D Hamiltonians")
    n = grid.n_points[0]
    if n > 2048:
        raise ConfigError("dense eigensolver limited to 2048 points")
    if not (1 <= n_levels <= n):
        raise UsageError(f"n_levels must be in [1, {n}]")

    x = grid.axis(0)
    v = hamiltonian.potential(x)
    p = grid.momenta(hbar.hbar_eps, 0)
    t_diag = hamiltonian.kinetic(p)

    from scipy.linalg import dft, eigh
    f_mat = dft(n, scale="sqrtn")  # unitary DFT, matches numpy fft ordering
    h_mat = (f_mat.conj().T * t_diag) @ f_mat
    h_mat[np.arange(n), np.arange(n)] += v
    h_mat = 0.5 * (h_mat + h_mat.conj().T)

    if want_vectors:
        vals, vecs = eigh(h_mat, subset_by_index=[0, n_levels - 1])
        vecs = vecs / math.sqrt(grid.dx(0))  # L2-normalized on the grid
    else:
        vals = eigh(h_mat, subset_by_index=[0, n_levels - 1], eigvals_only=True)
        vecs = None

    if np.any(np.diff(vals) <= 0):
        raise NumericsError("eigenvalues not strictly increasing; "
                            "grid too coarse for the requested levels")

    v_min = float(np.min(v))
    dx = grid.dx(0)
    trusted = 0
    for e in vals:
        p_max = math.sqrt(max(2 * hamiltonian.mass * (e - v_min), 0.0))
        if p_max == 0:
            trusted += 1
            continue
        wavelength = 2 * np.pi * hbar.hbar_eps / p_max
        if wavelength / dx >= 8.0:
            trusted += 1
        else:
            break
    return Spectrum(eigenvalues=np.asarray(vals), eigenvectors=vecs,
                    n_levels=n_levels, trusted_levels=trusted,
                    warning=trusted < n_levels)
