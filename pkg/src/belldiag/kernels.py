"""Backend selection for the Bell-expression kernels.

The compiled extension is used when it imports; setting ``BELLDIAG_PURE=1``
forces the NumPy implementation.  Both expose ``correlations``,
``signed_value`` and ``ascend`` with identical semantics.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("BELLDIAG_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def interleave(rho: np.ndarray) -> np.ndarray:
    """Flatten an n-qubit matrix so qubit j contributes the digit ``2*row_j + col_j``."""
    n = int(rho.shape[0]).bit_length() - 1
    t = np.asarray(rho, dtype=complex).reshape((2,) * (2 * n))
    order = [a for j in range(n) for a in (j, n + j)]
    return np.ascontiguousarray(t.transpose(order).reshape(4**n))


def get_backend(name: str | None = None):
    """Return the kernel module for ``name`` ('cython', 'python') or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


fill_ops = _pykernels.fill_ops


def correlations(v: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    return _impl.correlations(v, np.ascontiguousarray(b, dtype=complex), n)


def signed_value(v: np.ndarray, ang: np.ndarray, n: int, full: bool, coeffs: np.ndarray) -> float:
    return _impl.signed_value(v, np.ascontiguousarray(ang, dtype=float), n, bool(full), coeffs)


def ascend(v, ang0, n, full, coeffs, tol=1e-7, max_sweeps=500):
    return _impl.ascend(v, np.ascontiguousarray(ang0, dtype=float), n, bool(full), coeffs, tol, max_sweeps)
