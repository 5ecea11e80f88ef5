"""Time-series analysis: deviation envelopes, the a(1-e^{-b t^2}) fit,
log-log scaling regressions, and revival detection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, FitError, InsufficientDataError, UsageError


@dataclass
class TimeSeries:
    """Real-valued series on a uniform time grid."""

    t: np.ndarray
    v: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.t.ndim != 1 or self.t.shape != self.v.shape:
            raise UsageError("t and v must be 1D arrays of equal length")
        if len(self.t) >= 2:
            steps = np.diff(self.t)
            d0 = steps[0]
            if d0 <= 0 or not np.allclose(steps, d0, rtol=1e-9, atol=1e-12):
                raise UsageError("time grid must be uniformly increasing")
        if not np.all(np.isfinite(self.v)):
            raise UsageError("series values must be finite")

    def __len__(self):
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    def until(self, t_max: float) -> "TimeSeries":
        keep = self.t <= t_max
        return TimeSeries(self.t[keep], self.v[keep], dict(self.meta))


@dataclass
class ScatterSeries:
    """Sparse (t, v) samples on a non-uniform, increasing time axis."""

    t: np.ndarray
    v: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.t.ndim != 1 or self.t.shape != self.v.shape:
            raise UsageError("t and v must be 1D arrays of equal length")
        if len(self.t) >= 2 and not np.all(np.diff(self.t) > 0):
            raise UsageError("time axis must be strictly increasing")
        if not np.all(np.isfinite(self.v)):
            raise UsageError("series values must be finite")

    def __len__(self):
        return len(self.t)


@dataclass(frozen=True)
class EnvelopeFit:
    """Result of the saturating-envelope fit y = a (1 - e^{-b t^2})."""

    a: float
    b: float
    tau: float
    residual: float  # RMS over the fitted peaks
    n_peaks: int
    n_iterations: int = 0


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float  # natural-log intercept
    r_squared: float


@dataclass(frozen=True)
class RevivalResult:
    found: bool
    t_r: Optional[float]
    strength: float
    fractional: tuple = ()  # (time, strength, (p, q) or None) triples


def deviation_series(q: TimeSeries, c: TimeSeries, mode: str = "absolute",
                     floor_frac: float = 0.5):
    """Pointwise deviation between a quantum and a classical series.

    absolute: |q - c| on the common grid (TimeSeries).
    relative: |q - c| / |c| restricted to samples where |c| >= floor_frac
    times max|c|, returned as a ScatterSeries (zero crossings excluded).
    """
    if len(q) != len(c) or not np.allclose(q.t, c.t, rtol=1e-9, atol=1e-12):
        raise UsageError("deviation_series requires a common time grid")
    if mode == "absolute":
        return TimeSeries(q.t.copy(), np.abs(q.v - c.v), dict(q.meta))
    if mode == "relative":
        floor = floor_frac * np.max(np.abs(c.v))
        mask = np.abs(c.v) >= floor
        if not np.any(mask):
            raise UsageError("relative deviation mask is empty; lower floor_frac")
        rel = np.abs(q.v[mask] - c.v[mask]) / np.abs(c.v[mask])
        return ScatterSeries(q.t[mask], rel, dict(q.meta))
    raise UsageError(f"unknown deviation mode {mode!r}")


def _local_maxima(v: np.ndarray) -> np.ndarray:
    if len(v) < 3:
        return np.empty(0, dtype=int)
    interior = (v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])
    return np.nonzero(interior)[0] + 1


def peak_envelope(series, floor_frac: float = 1e-3) -> ScatterSeries:
    """Strict local maxima above a noise floor of floor_frac * max."""
    idx = _local_maxima(series.v)
    if len(idx):
        floor = floor_frac * np.max(series.v)
        idx = idx[series.v[idx] > floor]
    if len(idx) < 4:
        raise InsufficientDataError(
            f"found {len(idx)} envelope peaks, need at least 4")
    return ScatterSeries(series.t[idx], series.v[idx], dict(series.meta))


def fit_envelope(peaks: ScatterSeries, max_iterations: int = 200) -> EnvelopeFit:
    """Damped Gauss-Newton fit of y = a (1 - e^{-b t^2}) to peak samples.

    Initialization: a0 = max peak, b0 = 1/t_half^2 at the first crossing
    of a0/2. Convergence: relative parameter change < 1e-8.
    """
    t = np.asarray(peaks.t, dtype=float)
    y = np.asarray(peaks.v, dtype=float)
    if len(t) < 4:
        raise InsufficientDataError("need at least 4 peaks to fit the envelope")

    a = float(np.max(y))
    if a <= 0:
        raise DomainError("envelope peaks must include positive values")
    above = t[(y >= a / 2) & (t > 0)]
    t_half = float(above[0]) if len(above) else float(np.median(t[t > 0]))
    b = 1.0 / (t_half * t_half)

    t2 = t * t
    lam = 1e-3
    trace = []

    def residual(aa, bb):
        return aa * (1.0 - np.exp(-bb * t2)) - y

    r = residual(a, b)
    cost = 0.5 * float(r @ r)
    for iteration in range(max_iterations):
        e = np.exp(-b * t2)
        jac = np.column_stack([1.0 - e, a * t2 * e])
        g = jac.T @ r
        h = jac.T @ jac
        step_ok = False
        for _ in range(60):
            damped = h + lam * np.diag(np.diag(h))
            try:
                delta = np.linalg.solve(damped, -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            a_new, b_new = a + delta[0], b + delta[1]
            # keep parameters in the positive quadrant
            shrink = 1.0
            while (a_new <= 0 or b_new <= 0) and shrink > 1e-6:
                shrink *= 0.5
                a_new, b_new = a + shrink * delta[0], b + shrink * delta[1]
            r_new = residual(a_new, b_new)
            cost_new = 0.5 * float(r_new @ r_new)
            if cost_new <= cost and a_new > 0 and b_new > 0:
                step_ok = True
                break
            lam *= 10
        if not step_ok:
            raise FitError("envelope fit stalled (no descent step found)", trace)
        change = max(abs(a_new - a) / abs(a), abs(b_new - b) / abs(b))
        a, b, r, cost = a_new, b_new, r_new, cost_new
        lam = max(lam / 10, 1e-12)
        trace.append((iteration, a, b, cost))
        if change < 1e-8:
            rms = math.sqrt(2 * cost / len(t))
            return EnvelopeFit(a=a, b=b, tau=1.0 / math.sqrt(b), residual=rms,
                               n_peaks=len(t), n_iterations=iteration + 1)
    raise FitError(
        f"envelope fit did not converge in {max_iterations} iterations", trace)


def scaling_fit(points: Sequence[tuple]) -> ScalingFit:
    """OLS of log(tau) against log(1/hbar_eps), natural logarithm."""
    if len(points) < 4:
        raise InsufficientDataError(
            f"scaling fit needs at least 4 points, got {len(points)}")
    hbars = np.array([float(p[0]) for p in points])
    taus = np.array([float(p[1]) for p in points])
    if len(np.unique(hbars)) < 4:
        raise InsufficientDataError("scaling fit needs at least 4 distinct hbar values")
    if np.any(taus <= 0) or np.any(hbars <= 0):
        raise DomainError("scaling fit requires positive hbar and tau values")
    x = -np.log(hbars)
    y = np.log(taus)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return ScalingFit(float(slope), float(intercept), r2)


def _cluster_peaks(times, values, gap):
    """Group peaks separated by less than `gap`; keep each cluster's max."""
    clusters = []
    start = 0
    for i in range(1, len(times) + 1):
        if i == len(times) or times[i] - times[i - 1] > gap:
            seg = slice(start, i)
            j = start + int(np.argmax(values[seg]))
            clusters.append((times[j], values[j]))
            start = i
    return clusters


def detect_revival(autocorr_mag: TimeSeries, t_c: float) -> RevivalResult:
    """Locate the full-revival period of |A(t)| and fractional structures.

    Strong recurrences (>= 80% of the strongest) are clustered on the
    scale of a few classical periods. A uniformly spaced, uniformly strong
    cluster train is a perfect recurrence (T_r = spacing). Otherwise the
    strongest cluster is tested against its own half time: a markedly
    weaker structure at t*/2 marks t* as the mirror half-revival, so the
    full revival sits near 2 t*. Detection needs t beyond 10 T_c.
    """
    if t_c <= 0:
        raise DomainError("classical period must be positive")
    idx = _local_maxima(autocorr_mag.v)
    idx = idx[autocorr_mag.t[idx] > 10 * t_c]
    if len(idx) == 0:
        return RevivalResult(False, None, 0.0)
    pt = autocorr_mag.t[idx]
    pv = autocorr_mag.v[idx]
    s_max = float(np.max(pv))
    if s_max < 0.4:
        return RevivalResult(False, None, s_max)

    strong = pv >= 0.8 * s_max
    clusters = _cluster_peaks(pt[strong], pv[strong], gap=3 * t_c)
    times = np.array([c[0] for c in clusters])
    vals = np.array([c[1] for c in clusters])

    if len(clusters) >= 3:
        spacing = np.diff(times)
        uniform_strength = np.min(vals) >= 0.9 * np.max(vals)
        uniform_spacing = np.std(spacing) <= 0.1 * np.mean(spacing)
        if uniform_strength and uniform_spacing:
            t_r = float(np.mean(spacing))
            return RevivalResult(True, t_r, float(np.max(vals)),
                                 _fractional(pt, pv, t_r, t_c))

    j = int(np.argmax(vals))
    t_star = float(times[j])
    half_window = (autocorr_mag.t >= t_star / 2 - t_c) & (autocorr_mag.t <= t_star / 2 + t_c)
    m_half = float(np.max(autocorr_mag.v[half_window])) if np.any(half_window) else 0.0
    if m_half >= 0.85 * s_max:
        t_r = t_star
        strength = float(vals[j])
    else:
        # t_star is the mirror half-revival; refine near its double
        t_r = 2 * t_star
        near = (pt >= t_r - 3 * t_c) & (pt <= t_r + 3 * t_c)
        if np.any(near):
            k = int(np.argmax(pv[near]))
            t_r = float(pt[near][k])
            strength = float(pv[near][k])
        else:
            strength = float(vals[j])
    return RevivalResult(True, t_r, strength, _fractional(pt, pv, t_r, t_c))


def _fractional(pt, pv, t_r, t_c):
    """Label recurrence clusters above 0.5 with p/q times of the revival."""
    notable = pv >= 0.5
    out = []
    for time, value in _cluster_peaks(pt[notable], pv[notable], gap=3 * t_c):
        label = None
        for q in (1, 2, 3, 4):
            p = int(round(q * time / t_r))
            if p >= 1 and math.gcd(p, q) == 1 and abs(time - p * t_r / q) <= 0.02 * t_r:
                label = (p, q)
                break
        out.append((float(time), float(value), label))
    return tuple(out)
