"""Backend selection and dispatch for the hot trajectory loops.

The compiled extension is used when it imported successfully; setting
QCDYN_PURE_PYTHON=1 forces the numpy reference backend. Both backends
perform identical operation sequences, so results agree to rounding.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py
from .errors import UsageError

if os.environ.get("QCDYN_PURE_PYTHON"):
    _backend = _kernels_py
else:
    try:
        from . import _kernels as _backend  # type: ignore[no-redef]
    except ImportError:
        _backend = _kernels_py


def backend_name() -> str:
    return _backend.BACKEND


def _contiguous(*arrays):
    for a in arrays:
        if not (isinstance(a, np.ndarray) and a.dtype == np.float64
                and a.flags["C_CONTIGUOUS"]):
            raise UsageError("kernel arrays must be contiguous float64")


def leapfrog(hamiltonian, x: np.ndarray, p: np.ndarray, dt: float, n_steps: int):
    """Advance a batch of phase points in place by n_steps leapfrog steps.

    x, p have shape (n,) for 1D Hamiltonians and (n, 2) for 2D ones.
    """
    kind = hamiltonian.kind
    if hamiltonian.dim == 1:
        xf = x if x.ndim == 1 else x[:, 0]
        pf = p if p.ndim == 1 else p[:, 0]
        _contiguous(xf, pf)
        if kind == "quartic":
            _backend.leapfrog_quartic(xf, pf, dt, n_steps)
        elif kind == "harmonic":
            _backend.leapfrog_harmonic(xf, pf, dt, n_steps,
                                       hamiltonian.omega, hamiltonian.mass)
        elif kind == "custom":
            # python-callable gradient: always the numpy backend
            _kernels_py.leapfrog_custom(xf, pf, dt, n_steps,
                                        lambda q: hamiltonian.potential_gradient(q)[0],
                                        hamiltonian.mass)
        else:
            raise UsageError(f"no kernel for 1D hamiltonian kind {kind!r}")
    elif kind == "toda":
        if x.ndim != 2 or x.shape[1] != 2:
            raise UsageError("toda kernel expects (n, 2) arrays")
        x1 = np.ascontiguousarray(x[:, 0])
        x2 = np.ascontiguousarray(x[:, 1])
        p1 = np.ascontiguousarray(p[:, 0])
        p2 = np.ascontiguousarray(p[:, 1])
        _backend.leapfrog_toda(x1, x2, p1, p2, dt, n_steps)
        x[:, 0] = x1
        x[:, 1] = x2
        p[:, 0] = p1
        p[:, 1] = p2
    else:
        raise UsageError(f"no kernel for hamiltonian kind {kind!r}")


def dimer_splitstep(a: np.ndarray, b: np.ndarray, gamma: float,
                    dt: float, n_steps: int):
    """Advance two-mode mean-field amplitudes in place (complex arrays)."""
    for arr in (a, b):
        if not (isinstance(arr, np.ndarray) and arr.dtype == np.complex128
                and arr.flags["C_CONTIGUOUS"]):
            raise UsageError("dimer kernel arrays must be contiguous complex128")
    _backend.dimer_splitstep(a, b, gamma, dt, n_steps)
