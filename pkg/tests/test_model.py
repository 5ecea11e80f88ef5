"""Hamiltonian definitions, the scaled Planck constant, and the closed-form
SI estimates."""

import math

import numpy as np
import pytest

from qcdyn.errors import ConfigError, DomainError
from qcdyn.model import (HBAR_SI, YEAR_SI, Custom1D, Harmonic1D, Quartic1D,
                         ScaledPlanck, SIInputs, Toda2D, box_ehrenfest_time,
                         box_revival_time, kepler_coupling_for_period,
                         kepler_ehrenfest_time, kepler_revival_time,
                         quartic_potential, toda_conserved_F)

RNG = np.random.default_rng(7)


def test_scaled_planck_widths():
    h = ScaledPlanck(0.03)
    assert h.sigma_x == pytest.approx(math.sqrt(0.015), rel=1e-15)
    assert h.sigma_p == h.sigma_x


@pytest.mark.parametrize("bad", [0.0, -0.1, math.nan, math.inf])
def test_scaled_planck_rejects(bad):
    with pytest.raises(DomainError):
        ScaledPlanck(bad)


def test_quartic_values():
    ham = Quartic1D()
    x = np.array([0.0, 1.0, -2.0])
    assert np.allclose(ham.potential(x), [0.0, 2.0, 20.0])
    assert np.allclose(ham.potential_gradient(x)[0], [0.0, 6.0, -36.0])
    assert ham.energy(1.0, 0.0) == pytest.approx(2.0)
    assert ham.energy(0.0, 2.0) == pytest.approx(2.0)
    assert np.allclose(quartic_potential(x), ham.potential(x))


def test_harmonic_requires_positive_parameters():
    with pytest.raises(DomainError):
        Harmonic1D(omega=0.0)
    with pytest.raises(DomainError):
        Harmonic1D(omega=1.0, mass=-1.0)
    ham = Harmonic1D(omega=2.0, mass=3.0)
    assert ham.potential(1.0) == pytest.approx(6.0)
    assert ham.velocity(6.0)[0] == pytest.approx(2.0)


def test_toda_gradient_matches_finite_difference():
    ham = Toda2D()
    assert float(ham.potential(0.0, 0.0)) == pytest.approx(3.0)
    g0 = ham.potential_gradient(0.0, 0.0)
    assert abs(float(g0[0])) < 1e-15 and abs(float(g0[1])) < 1e-15
    h = 1e-6
    for _ in range(5):
        x1, x2 = RNG.uniform(-1.0, 1.0, size=2)
        gx1, gx2 = (float(g) for g in ham.potential_gradient(x1, x2))
        fd1 = (float(ham.potential(x1 + h, x2)) - float(ham.potential(x1 - h, x2))) / (2 * h)
        fd2 = (float(ham.potential(x1, x2 + h)) - float(ham.potential(x1, x2 - h))) / (2 * h)
        assert gx1 == pytest.approx(fd1, abs=1e-8)
        assert gx2 == pytest.approx(fd2, abs=1e-8)


def test_toda_kinetic_and_velocity():
    ham = Toda2D()
    # T = p1^2 + p2^2 + p1 p2, velocities are its gradient
    assert float(ham.kinetic(1.0, 2.0)) == pytest.approx(7.0)
    v = ham.velocity(1.0, 2.0)
    assert float(v[0]) == pytest.approx(4.0)
    assert float(v[1]) == pytest.approx(5.0)


def test_toda_conserved_f_vectorized():
    states = RNG.uniform(-0.5, 0.5, size=(6, 4))
    batch = toda_conserved_F(states)
    single = np.array([toda_conserved_F(s) for s in states])
    assert np.allclose(batch, single)


def test_custom_potential_fd_gradient():
    ham = Custom1D(lambda x: np.cosh(x), mass=2.0)
    x = np.linspace(-1.5, 1.5, 11)
    grad = ham.potential_gradient(x)[0]
    assert np.allclose(grad, np.sinh(x), atol=1e-7)
    # explicit gradient bypasses the finite difference
    ham2 = Custom1D(lambda x: np.cosh(x), gradient=np.sinh)
    assert np.allclose(ham2.potential_gradient(x)[0], np.sinh(x))
    with pytest.raises(DomainError):
        Custom1D(lambda x: x * x, mass=0.0)


def test_si_inputs_validation():
    with pytest.raises(DomainError):
        SIInputs(mass=-1.0)
    si = SIInputs(mass=1.0)
    with pytest.raises(DomainError, match="length"):
        si.require("mass", "length")


def test_box_ball_values():
    # I = m v a / pi, ratio = sqrt(2 I / hbar): closed-form references
    ball = SIInputs(mass=1e-3, length=1.0, speed=1.0)
    ratio, tau_s = box_ehrenfest_time(ball)
    assert ratio == pytest.approx(2456982035397786.0, rel=1e-12)
    assert tau_s == pytest.approx(ratio * 2.0, rel=1e-12)  # T_c = 2a/v = 2 s
    assert box_revival_time(ball) == pytest.approx(6.036760722267447e30, rel=1e-12)


def test_box_cold_atom_below_one():
    atom = SIInputs(mass=1.5e-25, length=1e-7, speed=1e-3)
    ratio, _ = box_ehrenfest_time(atom)
    assert ratio == pytest.approx(0.3009176146954706, rel=1e-12)
    assert ratio < 1.0


def test_kepler_hydrogen_ratio():
    # L = hbar, I = 0 collapses the denominator to sqrt(hbar/L) = 1
    ratio, _ = kepler_ehrenfest_time(HBAR_SI, 0.0, 9.109e-31, 2.307e-28)
    assert ratio == pytest.approx(math.sqrt(2.0) / 3.0, rel=1e-12)
    assert kepler_revival_time(HBAR_SI, 0.0) == pytest.approx(2.0 / 3.0, rel=1e-12)


def test_kepler_coupling_round_trip():
    L, m = 2.7e39, 5.97e24
    k = kepler_coupling_for_period(L, 0.0, m, YEAR_SI)
    t_c = 2 * math.pi * L**3 / (m * k * k)
    assert t_c == pytest.approx(YEAR_SI, rel=1e-12)


def test_kepler_domain_errors():
    with pytest.raises(DomainError):
        kepler_ehrenfest_time(-1.0, 0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        kepler_ehrenfest_time(1.0, -0.5, 1.0, 1.0)
    with pytest.raises(DomainError):
        kepler_revival_time(0.0)
    with pytest.raises(DomainError):
        kepler_coupling_for_period(1.0, 0.0, 1.0, -2.0)
