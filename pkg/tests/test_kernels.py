"""Backend dispatch for the hot loops: compiled and numpy paths must agree
to rounding, and the in-place contracts must hold."""

import numpy as np
import pytest

from qcdyn import _kernels_py, kernels
from qcdyn.errors import UsageError
from qcdyn.model import Harmonic1D, Quartic1D, Toda2D

RNG = np.random.default_rng(20240811)


def _pair(n=64):
    return (RNG.uniform(-1.0, 1.0, n).copy(), RNG.uniform(-1.5, 1.5, n).copy())


def test_backend_reports_a_name():
    assert kernels.backend_name() in ("compiled", "python")


@pytest.mark.skipif(kernels.backend_name() == "python",
                    reason="compiled extension not built")
def test_compiled_matches_pure_quartic():
    x, p = _pair()
    xc, pc = x.copy(), p.copy()
    kernels.leapfrog(Quartic1D(), xc, pc, 1e-3, 500)
    xp, pp = x.copy(), p.copy()
    _kernels_py.leapfrog_quartic(xp, pp, 1e-3, 500)
    assert np.allclose(xc, xp, rtol=0, atol=1e-12)
    assert np.allclose(pc, pp, rtol=0, atol=1e-12)


@pytest.mark.skipif(kernels.backend_name() == "python",
                    reason="compiled extension not built")
def test_compiled_matches_pure_toda():
    x = RNG.uniform(-0.5, 0.5, (32, 2)).copy()
    p = RNG.uniform(-0.5, 0.5, (32, 2)).copy()
    xc, pc = x.copy(), p.copy()
    kernels.leapfrog(Toda2D(), xc, pc, 1e-3, 400)
    cols = [np.ascontiguousarray(a) for a in (x[:, 0], x[:, 1], p[:, 0], p[:, 1])]
    _kernels_py.leapfrog_toda(*cols, 1e-3, 400)
    assert np.allclose(xc[:, 0], cols[0], atol=1e-12)
    assert np.allclose(xc[:, 1], cols[1], atol=1e-12)
    assert np.allclose(pc[:, 0], cols[2], atol=1e-12)
    assert np.allclose(pc[:, 1], cols[3], atol=1e-12)


@pytest.mark.skipif(kernels.backend_name() == "python",
                    reason="compiled extension not built")
def test_compiled_matches_pure_dimer():
    a = (RNG.normal(size=16) + 1j * RNG.normal(size=16)).astype(np.complex128)
    b = (RNG.normal(size=16) + 1j * RNG.normal(size=16)).astype(np.complex128)
    norm = np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2)
    a /= norm
    b /= norm
    ac, bc = a.copy(), b.copy()
    kernels.dimer_splitstep(ac, bc, 2.0, 0.01, 300)
    ap, bp = a.copy(), b.copy()
    _kernels_py.dimer_splitstep(ap, bp, 2.0, 0.01, 300)
    assert np.allclose(ac, ap, atol=1e-12)
    assert np.allclose(bc, bp, atol=1e-12)


def test_leapfrog_modifies_in_place():
    x, p = _pair(8)
    idx, idp = id(x), id(p)
    kernels.leapfrog(Quartic1D(), x, p, 1e-3, 10)
    assert id(x) == idx and id(p) == idp
    x2, p2 = _pair(8)
    assert not np.allclose(x, x2) or not np.allclose(p, p2)


def test_leapfrog_zero_steps_is_identity():
    x, p = _pair(8)
    x0, p0 = x.copy(), p.copy()
    kernels.leapfrog(Quartic1D(), x, p, 1e-3, 0)
    assert np.array_equal(x, x0) and np.array_equal(p, p0)


def test_leapfrog_rejects_bad_arrays():
    with pytest.raises(UsageError):
        kernels.leapfrog(Quartic1D(), np.arange(8, dtype=np.float32),
                         np.zeros(8, dtype=np.float32), 1e-3, 1)
    stride = np.zeros(16)[::2]
    with pytest.raises(UsageError):
        kernels.leapfrog(Quartic1D(), stride, np.zeros(8), 1e-3, 1)
    with pytest.raises(UsageError):
        kernels.leapfrog(Toda2D(), np.zeros(8), np.zeros(8), 1e-3, 1)


def test_harmonic_kernel_uses_omega_and_mass():
    # one slow heavy oscillator period: x returns to start
    ham = Harmonic1D(omega=0.5, mass=2.0)
    x = np.array([1.0])
    p = np.array([0.0])
    period = 2 * np.pi / ham.omega
    n = 20000
    kernels.leapfrog(ham, x, p, period / n, n)
    assert x[0] == pytest.approx(1.0, abs=1e-5)
    assert p[0] == pytest.approx(0.0, abs=1e-5)


def test_dimer_norm_preserved():
    a = np.full(4, 1 / np.sqrt(2), dtype=np.complex128)
    b = np.full(4, 1j / np.sqrt(2), dtype=np.complex128)
    kernels.dimer_splitstep(a, b, 2.0, 0.005, 2000)
    assert np.allclose(np.abs(a) ** 2 + np.abs(b) ** 2, 1.0, atol=1e-12)


def test_dimer_rejects_wrong_dtype():
    with pytest.raises(UsageError):
        kernels.dimer_splitstep(np.zeros(4), np.zeros(4), 1.0, 0.01, 1)
