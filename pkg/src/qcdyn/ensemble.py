"""Classical ensembles matched to the initial quantum state: Gaussian
phase-space sampling and vectorized symplectic evolution with the same
observable labels as the quantum propagator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .analysis import TimeSeries
from .errors import NumericsError, UsageError
from .model import Hamiltonian, ScaledPlanck

__all__ = ["PhaseEnsemble", "EnsembleResult", "sample_wigner", "evolve_ensemble"]

ENERGY_DRIFT_LIMIT = 1e-4


@dataclass
class PhaseEnsemble:
    """A swarm of phase-space points; x and p are (n,) in 1D or (n, d)."""

    x: np.ndarray
    p: np.ndarray
    hbar: ScaledPlanck
    seed: Optional[int] = None

    def __post_init__(self):
        self.x = np.ascontiguousarray(np.atleast_1d(self.x), dtype=np.float64)
        self.p = np.ascontiguousarray(np.atleast_1d(self.p), dtype=np.float64)
        if self.x.shape != self.p.shape:
            raise UsageError("x and p shapes differ")
        if self.x.ndim not in (1, 2) or (self.x.ndim == 2 and self.x.shape[1] not in (1, 2)):
            raise UsageError("points must be (n,) or (n, d) with d in {1, 2}")
        if self.x.size == 0:
            raise UsageError("ensemble must contain at least one point")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.p))):
            raise UsageError("ensemble contains non-finite coordinates")

    @property
    def n_points(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return 1 if self.x.ndim == 1 else self.x.shape[1]

    def mean_x(self) -> tuple:
        if self.dim == 1:
            return (float(np.mean(self.x)),)
        return tuple(float(np.mean(self.x[:, i])) for i in range(self.dim))

    def mean_p(self) -> tuple:
        if self.dim == 1:
            return (float(np.mean(self.p)),)
        return tuple(float(np.mean(self.p[:, i])) for i in range(self.dim))

    def var_x(self) -> tuple:
        if self.dim == 1:
            return (float(np.var(self.x)),)
        return tuple(float(np.var(self.x[:, i])) for i in range(self.dim))

    def energies(self, hamiltonian: Hamiltonian) -> np.ndarray:
        if self.dim == 1:
            return (hamiltonian.kinetic(self.p)
                    + hamiltonian.potential(self.x))
        return (hamiltonian.kinetic(*(self.p[:, i] for i in range(self.dim)))
                + hamiltonian.potential(*(self.x[:, i] for i in range(self.dim))))

    def copy(self) -> "PhaseEnsemble":
        return PhaseEnsemble(self.x.copy(), self.p.copy(), self.hbar, self.seed)


def sample_wigner(hamiltonian: Hamiltonian, x0, p0, hbar: ScaledPlanck,
                  n_samples: int, seed: int) -> PhaseEnsemble:
    """Draw n_samples points from the Wigner function of the matched
    Gaussian packet: independent normals with sigma = sqrt(hbar_eps/2)
    around (x0, p0) on every axis."""
    if n_samples < 1:
        raise UsageError("n_samples must be positive")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    d = hamiltonian.dim
    if len(x0) != d or len(p0) != d:
        raise UsageError("x0/p0 dimension does not match the Hamiltonian")
    sigma = math.sqrt(hbar.hbar_eps / 2.0)
    rng = np.random.default_rng(seed)
    shape = (n_samples,) if d == 1 else (n_samples, d)
    x = rng.normal(loc=x0 if d > 1 else x0[0], scale=sigma, size=shape)
    p = rng.normal(loc=p0 if d > 1 else p0[0], scale=sigma, size=shape)
    return PhaseEnsemble(x=x, p=p, hbar=hbar, seed=seed)


@dataclass
class EnsembleResult:
    series: dict  # label -> TimeSeries of swarm means/variances
    final: PhaseEnsemble
    energy_drift: float
    snapshots: list = field(default_factory=list)  # (time, PhaseEnsemble)


def evolve_ensemble(ensemble: PhaseEnsemble, hamiltonian: Hamiltonian,
                    dt: float, n_steps: int, sample_every: int = 1,
                    snapshot_times: Sequence[float] = ()) -> EnsembleResult:
    """Leapfrog the whole swarm, recording mean x, mean p and var x with
    the same series labels the quantum propagator uses.

    The worst per-point relative energy drift over the run must stay
    below 1e-4, else NumericsError suggests a smaller dt.
    """
    if ensemble.dim != hamiltonian.dim:
        raise UsageError("ensemble and hamiltonian dimensions differ")
    if dt == 0 or not math.isfinite(dt):
        raise UsageError(f"dt must be a nonzero finite number, got {dt}")
    if n_steps < 0 or sample_every < 1:
        raise UsageError("n_steps must be >= 0 and sample_every >= 1")

    d = ensemble.dim
    x = ensemble.x.copy()
    p = ensemble.p.copy()
    n_samples = n_steps // sample_every + 1
    sample_dt = dt * sample_every
    ts = np.arange(n_samples) * sample_dt

    snap_index = {}
    for t_req in snapshot_times:
        idx = int(round(float(t_req) / sample_dt)) if sample_dt else 0
        if not (0 <= idx < n_samples):
            raise UsageError(f"snapshot time {t_req} outside the run window")
        snap_index.setdefault(idx, float(t_req))

    labels = (["x", "p", "var_x"] if d == 1 else
              ["x1", "x2", "p1", "p2", "var_x1", "var_x2"])
    data = {lab: np.empty(n_samples) for lab in labels}

    def record(i):
        if d == 1:
            data["x"][i] = float(np.mean(x))
            data["p"][i] = float(np.mean(p))
            data["var_x"][i] = float(np.var(x))
        else:
            for ax in range(2):
                data[f"x{ax+1}"][i] = float(np.mean(x[:, ax]))
                data[f"p{ax+1}"][i] = float(np.mean(p[:, ax]))
                data[f"var_x{ax+1}"][i] = float(np.var(x[:, ax]))

    e0 = PhaseEnsemble(x, p, ensemble.hbar).energies(hamiltonian)
    e_scale = float(np.max(np.abs(e0)))
    e_scale = e_scale if e_scale > 0 else 1.0

    snapshots = []
    record(0)
    if 0 in snap_index:
        snapshots.append((0.0, PhaseEnsemble(x.copy(), p.copy(), ensemble.hbar)))

    done = 0
    for i in range(1, n_samples):
        chunk = min(sample_every, n_steps - done)
        kernels.leapfrog(hamiltonian, x, p, dt, chunk)
        done += chunk
        record(i)
        if i in snap_index:
            snapshots.append((float(ts[i]),
                              PhaseEnsemble(x.copy(), p.copy(), ensemble.hbar)))

    final = PhaseEnsemble(x, p, ensemble.hbar, ensemble.seed)
    e1 = final.energies(hamiltonian)
    drift = float(np.max(np.abs(e1 - e0))) / e_scale
    if drift > ENERGY_DRIFT_LIMIT:
        raise NumericsError(
            f"ensemble energy drift {drift:.2e} exceeds {ENERGY_DRIFT_LIMIT:.0e}; "
            "reduce dt")

    meta = {"hbar_eps": ensemble.hbar.hbar_eps, "dt": dt,
            "n_points": ensemble.n_points}
    series = {lab: TimeSeries(ts, vals, dict(meta)) for lab, vals in data.items()}
    return EnsembleResult(series=series, final=final, energy_drift=drift,
                          snapshots=snapshots)
