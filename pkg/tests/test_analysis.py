"""Envelope extraction, scaling regression and revival detection on
synthetic series with known answers."""

import math

import numpy as np
import pytest

from qcdyn.analysis import (ScatterSeries, TimeSeries, detect_revival,
                            deviation_series, fit_envelope, peak_envelope,
                            scaling_fit)
from qcdyn.errors import (DomainError, InsufficientDataError, UsageError)

RNG = np.random.default_rng(11)


def _saturating(t, a, b):
    return a * (1.0 - np.exp(-b * t * t))


def test_time_series_validation():
    with pytest.raises(UsageError):
        TimeSeries(np.array([0.0, 1.0, 1.5]), np.zeros(3))
    with pytest.raises(UsageError):
        TimeSeries(np.array([0.0, 1.0]), np.array([1.0, math.nan]))
    s = TimeSeries(np.arange(10.0), np.arange(10.0))
    assert s.dt == 1.0
    cut = s.until(4.5)
    assert len(cut) == 5


def test_scatter_series_requires_increasing_axis():
    with pytest.raises(UsageError):
        ScatterSeries(np.array([0.0, 2.0, 1.0]), np.zeros(3))


def test_deviation_series_modes():
    t = np.linspace(0.0, 10.0, 101)
    q = TimeSeries(t, np.sin(t) + 0.1)
    c = TimeSeries(t, np.sin(t))
    dev = deviation_series(q, c, mode="absolute")
    assert np.allclose(dev.v, 0.1)
    rel = deviation_series(q, c, mode="relative")
    # zero crossings of the reference are masked out
    assert np.all(np.abs(np.sin(rel.t)) >= 0.5)
    assert np.allclose(rel.v, 0.1 / np.abs(np.sin(rel.t)))
    with pytest.raises(UsageError):
        deviation_series(q, TimeSeries(t + 0.5, np.sin(t)), mode="absolute")
    with pytest.raises(UsageError):
        deviation_series(q, c, mode="weird")


def test_peak_envelope_finds_local_maxima():
    t = np.linspace(0.0, 20.0, 2001)
    v = np.abs(np.sin(3.0 * t)) * _saturating(t, 1.0, 0.05)
    peaks = peak_envelope(TimeSeries(t, v))
    # every peak sits on the saturating curve
    assert np.allclose(peaks.v, _saturating(peaks.t, 1.0, 0.05), rtol=1e-3)
    with pytest.raises(InsufficientDataError):
        peak_envelope(TimeSeries(t[:5], np.ones(5)))


def test_fit_envelope_recovers_parameters():
    t = np.linspace(0.5, 30.0, 40)
    a, b = 0.8, 0.02
    fit = fit_envelope(ScatterSeries(t, _saturating(t, a, b)))
    assert fit.a == pytest.approx(a, rel=1e-6)
    assert fit.b == pytest.approx(b, rel=1e-6)
    assert fit.tau == pytest.approx(1.0 / math.sqrt(b), rel=1e-6)
    assert fit.residual < 1e-8
    assert fit.n_peaks == 40


def test_fit_envelope_noise_tolerance():
    # 1% multiplicative noise moves tau by a few percent at most
    t = np.linspace(0.5, 30.0, 60)
    a, b = 0.8, 0.02
    worst = 0.0
    for _ in range(20):
        y = _saturating(t, a, b) * (1.0 + 0.01 * RNG.standard_normal(len(t)))
        fit = fit_envelope(ScatterSeries(t, np.abs(y)))
        worst = max(worst, abs(fit.tau * math.sqrt(b) - 1.0))
    assert worst < 0.05


def test_fit_envelope_needs_enough_peaks():
    with pytest.raises(InsufficientDataError):
        fit_envelope(ScatterSeries(np.array([1.0, 2.0, 3.0]), np.ones(3)))


def test_scaling_fit_exact_power_law():
    hbars = [0.01, 0.02, 0.05, 0.1]
    pts = [(h, 3.0 * h ** -0.5) for h in hbars]
    fit = scaling_fit(pts)
    assert fit.slope == pytest.approx(0.5, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_scaling_fit_refuses_degenerate_input():
    with pytest.raises(InsufficientDataError):
        scaling_fit([(0.1, 1.0), (0.2, 2.0)])
    with pytest.raises(InsufficientDataError):
        scaling_fit([(0.1, 1.0)] * 5)
    with pytest.raises(DomainError):
        scaling_fit([(0.1, 1.0), (0.2, 2.0), (0.3, -1.0), (0.4, 2.0)])


def _bump_train(times, widths, heights, t_max=1000.0, dt=0.25):
    t = np.arange(0.0, t_max, dt)
    v = np.zeros_like(t)
    for c, w, h in zip(times, widths, heights):
        v += h * np.exp(-((t - c) / w) ** 2)
    return TimeSeries(t, v)


def test_detect_revival_uniform_train():
    t_c = 3.0
    series = _bump_train([300.0, 600.0, 900.0], [4.0, 4.0, 4.0],
                         [0.9, 0.88, 0.91])
    res = detect_revival(series, t_c)
    assert res.found
    assert res.t_r == pytest.approx(300.0, rel=0.02)
    labels = {lab for _, _, lab in res.fractional if lab is not None}
    assert (1, 1) in labels


def test_detect_revival_mirror_half():
    # single strong structure with nothing at its own half time: the full
    # revival is at twice that time
    series = _bump_train([450.0, 893.0], [4.0, 4.0], [0.9, 0.55])
    res = detect_revival(series, 3.0)
    assert res.found
    assert res.t_r == pytest.approx(893.0, rel=0.02)


def test_detect_revival_reports_fractional_structure():
    series = _bump_train([225.0, 450.0, 900.0], [4.0, 4.0, 4.0],
                         [0.55, 0.8, 0.9])
    res = detect_revival(series, 3.0)
    assert res.found
    assert res.t_r == pytest.approx(900.0, rel=0.02)
    labels = {lab for _, _, lab in res.fractional if lab is not None}
    assert (1, 2) in labels
    assert (1, 4) in labels


def test_detect_revival_floor():
    # peaks below the 0.4 strength floor are not revivals
    series = _bump_train([500.0], [4.0], [0.35])
    res = detect_revival(series, 3.0)
    assert not res.found
    assert res.strength == pytest.approx(0.35, abs=0.01)
    # nothing beyond 10 classical periods at all
    early = _bump_train([10.0], [1.0], [0.9], t_max=100.0)
    assert not detect_revival(early, 3.0).found
    with pytest.raises(DomainError):
        detect_revival(series, 0.0)
