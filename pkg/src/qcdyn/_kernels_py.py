"""Pure numpy batch integrators. Reference implementation for the
compiled kernels; always available."""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def leapfrog_quartic(x, p, dt, n_steps):
    """Kick-drift-kick leapfrog for H = p^2/2 + x^2 + x^4, in place."""
    if n_steps <= 0:
        return
    half = 0.5 * dt
    f = -(2.0 * x + 4.0 * x * x * x)
    for _ in range(n_steps):
        p += half * f
        x += dt * p
        f = -(2.0 * x + 4.0 * x * x * x)
        p += half * f


def leapfrog_harmonic(x, p, dt, n_steps, omega, mass):
    """Leapfrog for H = p^2/2m + m omega^2 x^2 / 2, in place."""
    if n_steps <= 0:
        return
    half = 0.5 * dt
    k = mass * omega * omega
    f = -k * x
    for _ in range(n_steps):
        p += half * f
        x += (dt / mass) * p
        f = -k * x
        p += half * f


def leapfrog_toda(x1, x2, p1, p2, dt, n_steps):
    """Leapfrog for the two-degree lattice, in place.

    Velocities are (2 p1 + p2, 2 p2 + p1); forces come from
    V = e^{-x1} + e^{-(x2-x1)} + e^{x2}.
    """
    if n_steps <= 0:
        return
    half = 0.5 * dt
    e1 = np.exp(-x1)
    e2 = np.exp(-(x2 - x1))
    e3 = np.exp(x2)
    f1 = e1 - e2
    f2 = e2 - e3
    for _ in range(n_steps):
        p1 += half * f1
        p2 += half * f2
        x1 += dt * (2.0 * p1 + p2)
        x2 += dt * (2.0 * p2 + p1)
        e1 = np.exp(-x1)
        e2 = np.exp(-(x2 - x1))
        e3 = np.exp(x2)
        f1 = e1 - e2
        f2 = e2 - e3
        p1 += half * f1
        p2 += half * f2


def leapfrog_custom(x, p, dt, n_steps, gradient, mass):
    """Leapfrog with a python-callable potential gradient, in place."""
    if n_steps <= 0:
        return
    half = 0.5 * dt
    f = -np.asarray(gradient(x))
    for _ in range(n_steps):
        p += half * f
        x += (dt / mass) * p
        f = -np.asarray(gradient(x))
        p += half * f


# Fourth-order symplectic composition coefficients for the dimer step;
# w0 = 1 - 2 w1 is negative, which is inherent to the scheme.
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = 1.0 - 2.0 * _W1


def _dimer_strang(a, b, gamma, h):
    # interaction half: pure phase, |a| and |b| invariant
    hh = 0.5 * h
    a *= np.exp(-1j * (gamma * np.abs(a) ** 2) * hh)
    b *= np.exp(-1j * (gamma * np.abs(b) ** 2) * hh)
    # hop full: exact rotation of (a, b)
    c = np.cos(0.5 * h)
    s = np.sin(0.5 * h)
    a2 = c * a + 1j * s * b
    b2 = c * b + 1j * s * a
    a[...] = a2
    b[...] = b2
    # interaction half
    a *= np.exp(-1j * (gamma * np.abs(a) ** 2) * hh)
    b *= np.exp(-1j * (gamma * np.abs(b) ** 2) * hh)


def dimer_splitstep(a, b, gamma, dt, n_steps):
    """Two-mode mean-field evolution i da/dt = -b/2 + gamma |a|^2 a,
    in place on complex arrays, time in hbar/nu units.

    Fourth-order (triple-jump) composition of the exact hop rotation and
    the exact interaction phase; norm |a|^2 + |b|^2 is preserved exactly.
    """
    if n_steps <= 0:
        return
    for _ in range(n_steps):
        _dimer_strang(a, b, gamma, _W1 * dt)
        _dimer_strang(a, b, gamma, _W0 * dt)
        _dimer_strang(a, b, gamma, _W1 * dt)
