"""Split-operator propagation against analytic and dense-matrix oracles."""

import math

import numpy as np
import pytest

from qcdyn.classical import action_of_energy
from qcdyn.errors import ConfigError, NumericsError, UsageError
from qcdyn.grids import GridSpec
from qcdyn.model import Harmonic1D, Quartic1D, ScaledPlanck, Toda2D
from qcdyn.quantum import (WaveFunction, autocorrelation, eigen_spectrum,
                           gaussian_packet, propagate)


def _dense_hamiltonian(ham, grid, heps):
    from scipy.linalg import dft
    n = grid.n_points[0]
    f = dft(n, scale="sqrtn")
    hmat = (f.conj().T * ham.kinetic(grid.momenta(heps, 0))) @ f
    hmat += np.diag(ham.potential(grid.axis(0)))
    return 0.5 * (hmat + hmat.conj().T)


def test_gaussian_packet_moments():
    grid = GridSpec.make([-4.0], [4.0], [256])
    h = ScaledPlanck(0.08)
    wf = gaussian_packet(grid, [0.7], [1.3], h)
    assert wf.norm() == pytest.approx(1.0, abs=1e-12)
    assert wf.mean_x()[0] == pytest.approx(0.7, abs=1e-12)
    assert wf.mean_p()[0] == pytest.approx(1.3, abs=1e-10)
    assert wf.var_x()[0] == pytest.approx(0.04, rel=1e-10)  # hbar_eps / 2


def test_gaussian_packet_rejects_edge_overlap():
    grid = GridSpec.make([-2.0], [2.0], [128])
    with pytest.raises(ConfigError, match="grid extent"):
        gaussian_packet(grid, [1.5], [0.0], ScaledPlanck(0.1))


def test_wavefunction_contracts():
    grid = GridSpec.make([-4.0], [4.0], [128])
    h = ScaledPlanck(0.1)
    wf = gaussian_packet(grid, [0.0], [0.0], h)
    with pytest.raises(UsageError):
        WaveFunction(np.zeros(64), grid, h)
    other = gaussian_packet(GridSpec.make([-5.0], [5.0], [128]), [0.0], [0.0], h)
    with pytest.raises(UsageError):
        wf.inner(other)
    assert wf.inner(wf).real == pytest.approx(1.0, abs=1e-12)
    # momentum representation is unit-normalized too
    phi = wf.momentum_amplitudes()
    assert float(np.sum(np.abs(phi) ** 2) * wf.momentum_cell()) == \
        pytest.approx(1.0, abs=1e-10)


def test_zero_steps_returns_input_bitwise():
    grid = GridSpec.make([-4.0], [4.0], [128])
    wf = gaussian_packet(grid, [0.5], [0.4], ScaledPlanck(0.1))
    before = wf.amplitudes.copy()
    prop = propagate(wf, Quartic1D(), 1e-3, 0, observers=("norm",))
    assert np.array_equal(prop.final.amplitudes, before)
    assert len(prop.series["norm"]) == 1


def test_coherent_state_follows_classical_center():
    # harmonic coherent state: <x>(t) = cos t, perfect revival each period
    ham = Harmonic1D(omega=1.0)
    grid = GridSpec.make([-4.0], [4.0], [128])
    wf = gaussian_packet(grid, [1.0], [0.0], ScaledPlanck(0.1))
    n_steps = 16384
    dt = 2 * (2 * math.pi) / n_steps
    prop = propagate(wf, ham, dt, n_steps, sample_every=4)
    t = prop.series["x"].t
    assert np.max(np.abs(prop.series["x"].v - np.cos(t))) < 1e-6
    assert np.max(np.abs(prop.series["p"].v + np.sin(t))) < 1e-6
    i_tc = np.argmin(np.abs(t - 2 * math.pi))
    assert prop.series["autocorr_abs"].v[i_tc] == pytest.approx(1.0, abs=1e-8)
    assert np.max(np.abs(prop.series["norm"].v - 1.0)) < 1e-10
    e = prop.series["energy"].v
    assert np.max(np.abs(e - e[0])) / abs(e[0]) < 1e-6


def test_propagator_matches_matrix_exponential():
    from scipy.linalg import expm
    ham = Quartic1D()
    heps = 0.2
    grid = GridSpec.make([-4.5], [4.5], [256])
    wf = gaussian_packet(grid, [0.5], [0.0], ScaledPlanck(heps))
    dt, n_steps = 5e-4, 200
    hmat = _dense_hamiltonian(ham, grid, heps)
    psi_exact = expm(-1j * hmat * (dt * n_steps) / heps) @ wf.amplitudes
    prop = propagate(wf, ham, dt, n_steps, observers=("norm",))
    assert np.max(np.abs(prop.final.amplitudes - psi_exact)) < 1e-6


def test_propagation_reverses_under_conjugation():
    ham = Quartic1D()
    grid = GridSpec.make([-4.5], [4.5], [256])
    wf = gaussian_packet(grid, [0.5], [0.0], ScaledPlanck(0.2))
    fwd = propagate(wf.copy(), ham, 5e-4, 400, observers=("norm",))
    mid = fwd.final
    mid.amplitudes = np.conj(mid.amplitudes)
    back = propagate(mid, ham, 5e-4, 400, observers=("norm",))
    assert np.max(np.abs(np.conj(back.final.amplitudes) - wf.amplitudes)) < 1e-9


def test_ehrenfest_relations_finite_difference():
    ham = Quartic1D()
    grid = GridSpec.make([-2.8], [2.8], [512])
    wf = gaussian_packet(grid, [0.8], [0.0], ScaledPlanck(0.05))
    dt = 1e-3
    prop = propagate(wf, ham, dt, 2000, observers=("x", "p"),
                     snapshot_times=(0.5, 1.0, 1.5))
    xs, ps = prop.series["x"].v, prop.series["p"].v
    dxdt = (xs[2:] - xs[:-2]) / (2 * dt)
    assert np.max(np.abs(dxdt - ps[1:-1])) < 1e-5
    vgrad = ham.potential_gradient(grid.axis(0))[0]
    for t_snap, wf_t in prop.snapshots:
        i = int(round(t_snap / dt))
        dpdt = (ps[i + 1] - ps[i - 1]) / (2 * dt)
        mean_force = -float(np.sum(vgrad * wf_t.probability()))
        assert dpdt == pytest.approx(mean_force, abs=1e-5)


def test_aliasing_guard_names_the_step():
    # under-resolved dual grid: high-energy components wrap and trip the ring check
    ham = Quartic1D()
    grid = GridSpec.make([-4.5], [4.5], [128])
    wf = gaussian_packet(grid, [0.5], [0.0], ScaledPlanck(0.2))
    with pytest.raises(NumericsError, match=r"aliasing at step \d+"):
        propagate(wf, ham, 1e-3, 200, observers=("norm",))


def test_saturation_shell_guard():
    # pi hbar / dt sits far below the edge potential: the packet must not
    # carry weight into the saturated shell
    ham = Quartic1D()
    grid = GridSpec.make([-6.0], [6.0], [256])
    wf = gaussian_packet(grid, [1.8], [0.0], ScaledPlanck(0.2))
    with pytest.raises(ConfigError, match="shrink dt"):
        propagate(wf, ham, 0.05, 10, observers=("norm",))


def test_peak_snapshot_window():
    ham = Harmonic1D(omega=1.0)
    grid = GridSpec.make([-4.0], [4.0], [128])
    wf = gaussian_packet(grid, [1.0], [0.0], ScaledPlanck(0.1))
    t_c = 2 * math.pi
    dt = t_c / 512
    prop = propagate(wf, ham, dt, 2 * 512, sample_every=2,
                     peak_snapshot_window=(0.85 * t_c, 1.15 * t_c))
    assert prop.peak_snapshot is not None
    t_pk, wf_pk, a_pk = prop.peak_snapshot
    assert t_pk == pytest.approx(t_c, abs=2 * dt)
    assert a_pk == pytest.approx(1.0, abs=1e-6)
    assert abs(wf_pk.inner(wf)) == pytest.approx(a_pk, abs=1e-12)


def test_peak_window_validation():
    grid = GridSpec.make([-4.0], [4.0], [128])
    wf = gaussian_packet(grid, [1.0], [0.0], ScaledPlanck(0.1))
    ham = Harmonic1D(omega=1.0)
    with pytest.raises(UsageError):
        propagate(wf, ham, 1e-2, 100, peak_snapshot_window=(2.0, 1.0))
    with pytest.raises(UsageError):
        propagate(wf, ham, 1e-2, 100, peak_snapshot_window=(50.0, 60.0))


def test_autocorrelation_helper():
    grid = GridSpec.make([-5.0], [5.0], [128])
    h = ScaledPlanck(0.1)
    a = gaussian_packet(grid, [0.0], [0.0], h)
    b = gaussian_packet(grid, [2.0], [0.0], h)
    assert autocorrelation(a, a) == pytest.approx(1.0, abs=1e-12)
    # displaced packets: |<a|b>| = exp(-d^2 / (8 sigma_x^2)) with d = 2
    expected = math.exp(-4.0 / (8 * 0.05))
    assert abs(autocorrelation(a, b)) == pytest.approx(expected, rel=1e-6)


def test_eigen_spectrum_harmonic_levels():
    spec = eigen_spectrum(Harmonic1D(omega=1.0),
                          GridSpec.make([-10.0], [10.0], [256]),
                          ScaledPlanck(1.0), 30)
    exact = np.arange(30) + 0.5
    assert np.max(np.abs(spec.eigenvalues - exact)) < 1e-6
    assert not spec.warning
    assert spec.trusted_levels == 30


def test_eigen_spectrum_bohr_sommerfeld_spacing():
    # mid-spectrum action differences step by hbar_eps within 2%
    heps = 0.1
    spec = eigen_spectrum(Quartic1D(), GridSpec.make([-2.5], [2.5], [512]),
                          ScaledPlanck(heps), 12)
    acts = [action_of_energy(Quartic1D(), float(e)) for e in spec.eigenvalues]
    for n in range(5, 12):
        ratio = (acts[n] - acts[4]) / ((n - 4) * heps)
        assert abs(ratio - 1.0) < 0.02


def test_eigen_spectrum_trust_marker():
    # coarse grid: the top requested levels are under-sampled
    spec = eigen_spectrum(Harmonic1D(omega=1.0),
                          GridSpec.make([-12.0], [12.0], [64]),
                          ScaledPlanck(1.0), 40, want_vectors=True)
    assert spec.warning
    assert spec.trusted_levels < 40
    assert spec.eigenvectors.shape == (64, 40)


def test_eigen_spectrum_input_checks():
    grid = GridSpec.make([-4.0], [4.0], [128])
    with pytest.raises(UsageError):
        eigen_spectrum(Toda2D(), grid, ScaledPlanck(0.1), 4)
    with pytest.raises(UsageError):
        eigen_spectrum(Quartic1D(), grid, ScaledPlanck(0.1), 0)
