"""Symplectic integration and the action-angle quadrature layer.

The quartic reference numbers are high-precision quadrature values for
H = p^2/2 + x^2 + x^4 computed with mpmath (40 digits) from the exact
factorization E - V = (a^2 - x^2)(x^2 + a^2 + 1).
"""

import math

import numpy as np
import pytest

from qcdyn.classical import (ActionProfile, PhasePoint, action_of_energy,
                             classical_period, integrate_trajectory,
                             omega_of_energy, omega_prime,
                             predicted_ehrenfest_time,
                             predicted_ehrenfest_time_nd,
                             predicted_revival_time, period_of_energy)
from qcdyn.errors import DomainError, NumericsError, UsageError
from qcdyn.model import Harmonic1D, Quartic1D, ScaledPlanck, Toda2D, \
    toda_conserved_F

QUARTIC = Quartic1D()

# quadrature references at E = 2 (the orbit through (1,0) and (0,2))
I_E2 = 1.0590977782056262460
T_E2 = 2.8314744168519123978
OMEGA_E2 = 2.2190507072161197547
OMEGA_PRIME_E2 = 0.48219920974823484915  # d omega / d I
TAU_02_H003 = 118.04428751123713757
TAU_10_H003 = 39.348095837079045856
TR_H003 = 868.68458514758579567
T_E18 = 2.8900027964463948207
I_E11 = 0.63206093781518316921


def test_quartic_action_oracle():
    assert action_of_energy(QUARTIC, 2.0) == pytest.approx(I_E2, rel=1e-12)
    assert action_of_energy(QUARTIC, 1.1) == pytest.approx(I_E11, rel=1e-12)


def test_quartic_period_oracle():
    assert period_of_energy(QUARTIC, 2.0) == pytest.approx(T_E2, rel=1e-9)
    assert period_of_energy(QUARTIC, 1.8) == pytest.approx(T_E18, rel=1e-9)
    assert omega_of_energy(QUARTIC, 2.0) == pytest.approx(OMEGA_E2, rel=1e-9)


def test_quartic_omega_prime_oracle():
    # finite-difference with Richardson stop; tolerance reflects its 1e-6 gate
    assert omega_prime(QUARTIC, 2.0) == pytest.approx(OMEGA_PRIME_E2, rel=2e-6)


def test_predicted_times_oracle():
    h = ScaledPlanck(0.03)
    assert predicted_ehrenfest_time(QUARTIC, 0.0, 2.0, h) == \
        pytest.approx(TAU_02_H003, rel=1e-5)
    assert predicted_ehrenfest_time(QUARTIC, 1.0, 0.0, h) == \
        pytest.approx(TAU_10_H003, rel=1e-5)
    assert predicted_revival_time(QUARTIC, 2.0, h) == \
        pytest.approx(TR_H003, rel=1e-5)


def test_predicted_tau_scales_as_inverse_sqrt_hbar():
    t1 = predicted_ehrenfest_time(QUARTIC, 1.0, 0.0, ScaledPlanck(0.02))
    t2 = predicted_ehrenfest_time(QUARTIC, 1.0, 0.0, ScaledPlanck(0.08))
    assert t1 / t2 == pytest.approx(2.0, rel=1e-12)


def test_predicted_revival_scales_as_inverse_hbar():
    t1 = predicted_revival_time(QUARTIC, 2.0, ScaledPlanck(0.02))
    t2 = predicted_revival_time(QUARTIC, 2.0, ScaledPlanck(0.08))
    assert t1 / t2 == pytest.approx(4.0, rel=1e-12)


def test_harmonic_is_isochronous():
    ham = Harmonic1D(omega=1.7)
    for e in (0.3, 1.0, 4.0):
        assert period_of_energy(ham, e) == pytest.approx(2 * math.pi / 1.7, rel=1e-9)
        assert action_of_energy(ham, e) == pytest.approx(e / 1.7, rel=1e-9)
    assert omega_prime(ham, 1.0) == 0.0
    assert predicted_ehrenfest_time(ham, 1.0, 0.0, ScaledPlanck(0.05)) == math.inf
    assert predicted_revival_time(ham, 1.0, ScaledPlanck(0.05)) == math.inf


def test_action_rejects_energy_below_minimum():
    with pytest.raises(DomainError):
        action_of_energy(QUARTIC, 0.0)
    with pytest.raises(DomainError):
        period_of_energy(QUARTIC, -1.0)


def test_action_profile_rows_monotonic():
    prof = ActionProfile.build(QUARTIC, np.linspace(1.2, 2.8, 9))
    rows = list(prof.rows())
    assert len(rows) == 9
    acts = [r[1] for r in rows]
    assert all(b > a for a, b in zip(acts, acts[1:]))
    with pytest.raises(UsageError):
        ActionProfile(np.array([2.0, 1.0]), np.array([0.1, 0.2]),
                      np.array([1.0, 1.0]), np.array([0.1, 0.1]))


def test_harmonic_trajectory_analytic_50_periods():
    # single-trajectory deviation from the closed form stays below 1e-4
    ham = Harmonic1D(omega=1.0)
    period = 2 * math.pi
    dt = period / 4000
    n = 4000 * 50
    traj = integrate_trajectory(PhasePoint((1.0,), (0.0,)), ham,
                                dt=dt, n_steps=n, sample_every=100)
    t = traj["x"].t
    assert np.max(np.abs(traj["x"].v - np.cos(t))) < 1e-4
    assert np.max(np.abs(traj["p"].v + np.sin(t))) < 1e-4


def test_leapfrog_reversibility():
    # forward, momentum flip, forward again returns to the start at 1e-10
    start = PhasePoint((1.0,), (0.3,))
    fwd = integrate_trajectory(start, QUARTIC, dt=1e-3, n_steps=4000,
                               sample_every=4000)
    back = integrate_trajectory(
        PhasePoint(fwd.final.x, tuple(-p for p in fwd.final.p)),
        QUARTIC, dt=1e-3, n_steps=4000, sample_every=4000)
    assert abs(back.final.x[0] - 1.0) < 1e-10
    assert abs(-back.final.p[0] - 0.3) < 1e-10


def test_leapfrog_reversibility_toda():
    start = PhasePoint((0.4, -0.2), (0.5, 0.1))
    fwd = integrate_trajectory(start, Toda2D(), dt=1e-3, n_steps=3000,
                               sample_every=3000)
    back = integrate_trajectory(
        PhasePoint(fwd.final.x, tuple(-p for p in fwd.final.p)),
        Toda2D(), dt=1e-3, n_steps=3000, sample_every=3000)
    assert np.allclose(back.final.x, start.x, atol=1e-10)
    assert np.allclose([-v for v in back.final.p], start.p, atol=1e-10)


def test_toda_conserves_h_and_f():
    ham = Toda2D()
    traj = integrate_trajectory(PhasePoint((0.7, 1.2), (0.4, 0.6)), ham,
                                dt=5e-5, n_steps=800_000, sample_every=800)
    assert traj.energy_drift < 1e-8
    states = np.column_stack([traj["x1"].v, traj["x2"].v,
                              traj["p1"].v, traj["p2"].v])
    f = toda_conserved_F(states)
    assert np.max(np.abs(f - f[0])) / max(abs(f[0]), 1e-30) < 1e-8


def test_leapfrog_area_preservation():
    # harmonic flow is linear, so a finite triangle keeps its area exactly
    ham = Harmonic1D(omega=1.3)
    pts = [PhasePoint((0.0,), (0.0,)), PhasePoint((0.7,), (0.1,)),
           PhasePoint((0.2,), (0.9,))]
    ends = [integrate_trajectory(pt, ham, dt=5e-3, n_steps=1000,
                                 sample_every=1000).final for pt in pts]

    def area(ps):
        (x0, p0), (x1, p1), (x2, p2) = [(q.x[0], q.p[0]) for q in ps]
        return 0.5 * abs((x1 - x0) * (p2 - p0) - (x2 - x0) * (p1 - p0))

    assert area(ends) == pytest.approx(area(pts), abs=1e-12)


def test_energy_drift_guard_trips():
    with pytest.raises(NumericsError, match="drift"):
        integrate_trajectory(PhasePoint((1.0,), (0.0,)), QUARTIC,
                             dt=0.2, n_steps=200)
    # full divergence (non-finite energies) must hit the same guard
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NumericsError, match="drift"):
            integrate_trajectory(PhasePoint((1.0,), (0.0,)), QUARTIC,
                                 dt=0.5, n_steps=200)


def test_trajectory_input_validation():
    with pytest.raises(DomainError):
        integrate_trajectory(PhasePoint((1.0,), (0.0,)), QUARTIC, dt=0.0)
    with pytest.raises(UsageError):
        integrate_trajectory(PhasePoint((1.0, 0.0), (0.0, 0.0)), QUARTIC)
    with pytest.raises(UsageError):
        PhasePoint((1.0, 2.0, 3.0), (0.0, 0.0, 0.0))
    with pytest.raises(UsageError):
        PhasePoint((math.nan,), (0.0,))


def test_classical_period_2d_small_oscillation():
    # near the Toda minimum the period comes from the local quadratic form
    ham = Toda2D()
    p0 = classical_period(ham, ham.energy((0.01, 0.0), (0.0, 0.0)))
    assert math.isfinite(p0) and p0 > 0


def test_predicted_nd_reductions():
    assert predicted_ehrenfest_time_nd([5.0, 3.0, 9.0]) == 3.0
    assert predicted_ehrenfest_time_nd([math.inf, 4.0]) == 4.0
    with pytest.raises(UsageError):
        predicted_ehrenfest_time_nd([])
    with pytest.raises(DomainError):
        predicted_ehrenfest_time_nd([-1.0])
