"""Classical trajectories and action-angle quantities: I(E), omega(I),
omega'(I), and the dephasing/revival time predictors built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .analysis import TimeSeries
from .errors import DomainError, NumericsError, UsageError
from .model import Hamiltonian, ScaledPlanck

# Default step keeps leapfrog energy error near 1e-9 relative for the
# reference scenarios (error scales as dt^2).
DEFAULT_DT = 1e-4

# Relative energy drift above which a run is rejected outright.
DRIFT_LIMIT = 1e-4


@dataclass(frozen=True)
class PhasePoint:
    """A point (x, p) in 1D or 2D phase space."""

    x: tuple
    p: tuple

    def __post_init__(self):
        xs = tuple(float(v) for v in np.atleast_1d(self.x))
        ps = tuple(float(v) for v in np.atleast_1d(self.p))
        object.__setattr__(self, "x", xs)
        object.__setattr__(self, "p", ps)
        if len(xs) != len(ps) or len(xs) not in (1, 2):
            raise UsageError("x and p must both have 1 or 2 components")
        if not all(math.isfinite(v) for v in xs + ps):
            raise UsageError("phase point components must be finite")

    @property
    def dim(self) -> int:
        return len(self.x)


@dataclass
class Trajectory:
    """Sampled classical trajectory plus integrator diagnostics."""

    series: dict  # component name -> TimeSeries
    final: PhasePoint
    energy_drift: float  # max relative drift over the samples

    def __getitem__(self, key: str) -> TimeSeries:
        return self.series[key]


def integrate_trajectory(point: PhasePoint, hamiltonian: Hamiltonian,
                         dt: float = DEFAULT_DT, n_steps: int = 10_000,
                         sample_every: int = 1) -> Trajectory:
    """Leapfrog (kick-drift-kick) trajectory sampled every sample_every
    steps. Raises NumericsError when relative energy drift exceeds 1e-4."""
    if dt == 0 or not math.isfinite(dt):
        raise DomainError(f"dt must be a nonzero finite number, got {dt}")
    if n_steps < 0:
        raise UsageError("n_steps must be nonnegative")
    if point.dim != hamiltonian.dim:
        raise UsageError("phase point dimension does not match hamiltonian")

    d = hamiltonian.dim
    n_samples = n_steps // sample_every + 1
    x = np.array(point.x, dtype=float).reshape(1, d)
    p = np.array(point.p, dtype=float).reshape(1, d)
    xs = np.empty((n_samples, d))
    ps = np.empty((n_samples, d))
    xs[0] = x[0]
    ps[0] = p[0]
    if d == 1:
        xk, pk = x[:, 0].copy(), p[:, 0].copy()
    else:
        xk, pk = x.copy(), p.copy()

    done = 0
    for i in range(1, n_samples):
        chunk = min(sample_every, n_steps - done)
        kernels.leapfrog(hamiltonian, xk, pk, dt, chunk)
        done += chunk
        xs[i] = xk if d == 1 else xk[0]
        ps[i] = pk if d == 1 else pk[0]

    ts = np.arange(n_samples) * (dt * sample_every)
    energies = hamiltonian.kinetic(*(ps[:, i] for i in range(d))) \
        + hamiltonian.potential(*(xs[:, i] for i in range(d)))
    e0 = float(energies[0])
    scale = max(abs(e0), 1e-30)
    drift = float(np.max(np.abs(energies - e0)) / scale)
    # a diverged trajectory yields nan/inf drift and must hit the same guard
    if not math.isfinite(drift) or drift > DRIFT_LIMIT:
        raise NumericsError(
            f"energy drift {drift:.3e} exceeds {DRIFT_LIMIT:.0e}; "
            f"reduce dt (currently {dt})")

    meta = {"dt": dt, "kind": hamiltonian.kind}
    if d == 1:
        series = {"x": TimeSeries(ts, xs[:, 0], dict(meta)),
                  "p": TimeSeries(ts, ps[:, 0], dict(meta))}
    else:
        series = {"x1": TimeSeries(ts, xs[:, 0], dict(meta)),
                  "x2": TimeSeries(ts, xs[:, 1], dict(meta)),
                  "p1": TimeSeries(ts, ps[:, 0], dict(meta)),
                  "p2": TimeSeries(ts, ps[:, 1], dict(meta))}
    final = PhasePoint(tuple(xs[-1]), tuple(ps[-1]))
    return Trajectory(series=series, final=final, energy_drift=drift)


def _require_1d(hamiltonian: Hamiltonian):
    if hamiltonian.dim != 1:
        raise UsageError("action-angle quadrature is defined for 1D Hamiltonians")


def _potential_minimum(hamiltonian: Hamiltonian) -> tuple[float, float]:
    """Locate the well minimum (x_min, V_min) of a confining 1D potential."""
    if hamiltonian.kind in ("quartic", "harmonic"):
        return 0.0, float(hamiltonian.potential(0.0))
    from scipy.optimize import minimize_scalar
    res = minimize_scalar(lambda x: float(hamiltonian.potential(x)),
                          bracket=(-1.0, 0.0, 1.0))
    if not res.success:  # pragma: no cover - defensive
        raise NumericsError("failed to locate potential minimum")
    return float(res.x), float(res.fun)


def _turning_points(hamiltonian: Hamiltonian, E: float) -> tuple[float, float]:
    """Bracketed root-finding for V(x) = E on both sides of the minimum."""
    x_min, v_min = _potential_minimum(hamiltonian)
    if E <= v_min:
        raise DomainError(f"energy {E} is not above the potential minimum {v_min}")

    def v_shift(x):
        return float(hamiltonian.potential(x)) - E

    out = []
    for direction in (-1.0, 1.0):
        step = max(1e-3, 0.1 * (1 + abs(x_min)))
        hi = x_min + direction * step
        for _ in range(200):
            if v_shift(hi) > 0:
                break
            step *= 2
            hi = x_min + direction * step
        else:
            raise DomainError("potential does not confine at this energy")
        lo = x_min
        root = brentq(v_shift, min(lo, hi), max(lo, hi), xtol=1e-14, rtol=1e-15)
        out.append(root)
    return out[0], out[1]


@lru_cache(maxsize=32)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _well_quadrature(hamiltonian, E, integrand, rel_tol) -> float:
    """Gauss-Legendre integration over the well after x = c + A sin(theta),
    which removes the inverse-square-root turning-point singularity.

    Close to the turning points E - V(x) is pure cancellation noise (and
    can round negative), so there the gap switches to its tangent-line
    model |V'(x_t)| * dist with dist computed via half-angle identities.
    """
    x_lo, x_hi = _turning_points(hamiltonian, E)
    c = 0.5 * (x_lo + x_hi)
    amp = 0.5 * (x_hi - x_lo)
    slope_lo = abs(float(np.asarray(hamiltonian.potential_gradient(x_lo)[0])))
    slope_hi = abs(float(np.asarray(hamiltonian.potential_gradient(x_hi)[0])))
    _, v_min = _potential_minimum(hamiltonian)
    gap_switch = 1e-8 * max(E - v_min, 1e-12)

    def eval_at(n):
        nodes, weights = _leggauss(n)
        theta = 0.5 * np.pi * nodes
        sin_t = np.sin(theta)
        cos_t = np.cos(theta)
        x = c + amp * sin_t
        gap = E - hamiltonian.potential(x)
        dist = amp * cos_t**2 / (1.0 + np.abs(sin_t))  # to nearest endpoint
        slope = np.where(sin_t > 0, slope_hi, slope_lo)
        gap = np.where(gap < gap_switch, slope * dist, gap)
        vals = integrand(gap) * amp * cos_t
        return 0.5 * np.pi * float(weights @ vals)

    prev = eval_at(64)
    for n in (128, 256, 512, 1024, 2048, 4096):
        cur = eval_at(n)
        if abs(cur - prev) <= rel_tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise NumericsError("turning-point quadrature did not reach tolerance")


def action_of_energy(hamiltonian: Hamiltonian, E: float,
                     rel_tol: float = 1e-10) -> float:
    """Action I(E) = (1/pi) * integral sqrt(2m(E-V)) dx between turning
    points of a confining 1D potential."""
    _require_1d(hamiltonian)
    m = hamiltonian.mass
    return _well_quadrature(hamiltonian, E,
                            lambda gap: np.sqrt(2 * m * gap), rel_tol) / np.pi


def period_of_energy(hamiltonian: Hamiltonian, E: float,
                     rel_tol: float = 1e-10) -> float:
    """Classical period T(E) = 2 * integral m dx / sqrt(2m(E-V))."""
    _require_1d(hamiltonian)
    if hamiltonian.kind == "harmonic":
        return 2 * np.pi / hamiltonian.omega
    m = hamiltonian.mass
    with np.errstate(divide="ignore"):
        val = _well_quadrature(
            hamiltonian, E,
            lambda gap: m / np.sqrt(np.maximum(2 * m * gap, 1e-300)), rel_tol)
    return 2 * val


def omega_of_energy(hamiltonian: Hamiltonian, E: float) -> float:
    """Angular frequency omega(E) = 2 pi / T(E)."""
    return 2 * np.pi / period_of_energy(hamiltonian, E)


def omega_prime(hamiltonian: Hamiltonian, E: float) -> float:
    """d omega / d I at energy E, via (d omega/d E) * omega and a centered
    difference whose step is validated by halving (Richardson check)."""
    _require_1d(hamiltonian)
    if hamiltonian.kind == "harmonic":
        return 0.0
    _, v_min = _potential_minimum(hamiltonian)
    omega = omega_of_energy(hamiltonian, E)
    h = 0.02 * max(E - v_min, 1e-6)
    prev = None
    for _ in range(8):
        d_est = (omega_of_energy(hamiltonian, E + h)
                 - omega_of_energy(hamiltonian, E - h)) / (2 * h)
        if prev is not None and abs(d_est - prev) <= 1e-6 * max(abs(d_est), 1e-300):
            return d_est * omega
        prev = d_est
        h *= 0.5
    raise NumericsError("omega'(I) finite difference did not stabilize")


@dataclass
class ActionProfile:
    """Tabulated action-angle quantities on an energy grid."""

    energy_grid: np.ndarray
    I_of_E: np.ndarray
    omega_of_I: np.ndarray
    omega_prime_of_I: np.ndarray

    def __post_init__(self):
        if not np.all(np.diff(self.energy_grid) > 0):
            raise UsageError("energy grid must be strictly increasing")
        if not np.all(np.diff(self.I_of_E) > 0):
            raise NumericsError("action values are not increasing in energy")
        if not np.all(self.omega_of_I > 0):
            raise NumericsError("nonpositive frequency on a confining potential")

    @classmethod
    def build(cls, hamiltonian: Hamiltonian, energies: Sequence[float]) -> "ActionProfile":
        energies = np.asarray(sorted(float(e) for e in energies))
        acts = np.array([action_of_energy(hamiltonian, e) for e in energies])
        oms = np.array([omega_of_energy(hamiltonian, e) for e in energies])
        omps = np.array([omega_prime(hamiltonian, e) for e in energies])
        return cls(energies, acts, oms, omps)

    def rows(self):
        """(E, I, omega, omega') rows for CSV export."""
        return zip(self.energy_grid, self.I_of_E, self.omega_of_I,
                   self.omega_prime_of_I)


def predicted_ehrenfest_time(hamiltonian: Hamiltonian, x0: float, p0: float,
                             hbar: ScaledPlanck) -> float:
    """Dephasing time tau = 2 pi / (|omega'(I)| (|dI/dx| dx + |dI/dp| dp))
    with dx = dp = sqrt(hbar_eps/2), evaluated at E(x0, p0).

    Returns math.inf for isochronous (harmonic) dynamics, where the
    first-order dephasing rate vanishes.
    """
    _require_1d(hamiltonian)
    if hamiltonian.kind == "harmonic":
        return math.inf
    E = hamiltonian.energy(x0, p0)
    omp = omega_prime(hamiltonian, E)
    omega = omega_of_energy(hamiltonian, E)
    grad_v = float(hamiltonian.potential_gradient(x0)[0])
    di_dx = abs(grad_v) / omega
    di_dp = abs(p0) / (hamiltonian.mass * omega)
    delta = hbar.sigma_x
    denom = abs(omp) * (di_dx * delta + di_dp * delta)
    if denom < 1e-300:
        return math.inf
    return 2 * math.pi / denom


def predicted_ehrenfest_time_nd(per_action_times: Sequence[float]) -> float:
    """The shortest of the per-action dephasing times."""
    times = list(per_action_times)
    if not times:
        raise UsageError("need at least one per-action time")
    for t in times:
        if t < 0 or (not math.isfinite(t) and not math.isinf(t)):
            raise DomainError(f"invalid per-action time {t}")
    return min(times)


def predicted_revival_time(hamiltonian: Hamiltonian, E_m: float,
                           hbar: ScaledPlanck) -> float:
    """Full revival time T_r = 4 pi / (omega'(I_m) hbar_eps)."""
    _require_1d(hamiltonian)
    if hamiltonian.kind == "harmonic":
        return math.inf
    omp = omega_prime(hamiltonian, E_m)
    if abs(omp) < 1e-300:
        return math.inf
    return 4 * math.pi / (abs(omp) * hbar.hbar_eps)


def classical_period(hamiltonian: Hamiltonian, E: float) -> float:
    """Characteristic period used for step-size defaults. For 2D systems
    this is the small-oscillation period about the potential minimum."""
    if hamiltonian.dim == 1:
        return period_of_energy(hamiltonian, E)
    if hamiltonian.kind == "toda":
        # linearized frequency about the origin is sqrt(3)
        return 2 * np.pi / math.sqrt(3.0)
    raise UsageError(f"no period rule for hamiltonian kind {hamiltonian.kind!r}")
