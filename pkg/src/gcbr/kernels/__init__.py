"""Kernel backend selection.

Two interchangeable backends provide the hot inner-loop operations:

* ``c``  -- the Cython extension built at install time (``_ckernels``)
* ``py`` -- scipy.sparse / numpy, used when the extension is absent

Selection happens once at import. ``GCBR_KERNELS=c`` or ``GCBR_KERNELS=py``
forces a backend (``c`` raises if the extension is missing); the default
``auto`` prefers the compiled one. Both backends are bit-identical, so the
choice affects speed only; see benchmarks/bench_kernels.py.
"""

import os

import numpy as np

from . import fallback

_choice = os.environ.get("GCBR_KERNELS", "auto").lower()
if _choice not in ("auto", "c", "py"):
    raise ValueError(f"GCBR_KERNELS must be 'auto', 'c' or 'py', got {_choice!r}")

if _choice in ("auto", "c"):
    try:
        from . import _ckernels

        BACKEND = "c"
    except ImportError:
        if _choice == "c":
            raise
        _ckernels = None
        BACKEND = "py"
else:
    _ckernels = None
    BACKEND = "py"


def _canonical_csr(indptr, indices, data):
    indptr = np.ascontiguousarray(indptr, dtype=np.int32)
    indices = np.ascontiguousarray(indices, dtype=np.int32)
    data = np.ascontiguousarray(data, dtype=np.float64)
    return indptr, indices, data


def make_spmm(indptr, indices, data, shape):
    """Bind a CSR matrix once, returning a ``dense -> A @ dense`` callable."""
    indptr, indices, data = _canonical_csr(indptr, indices, data)
    if BACKEND == "c":
        def spmm(dense):
            dense = np.ascontiguousarray(dense, dtype=np.float64)
            return _ckernels.csr_matmul(indptr, indices, data, dense)

        return spmm
    return fallback.make_spmm(indptr, indices, data, shape)


def csr_matmul(indptr, indices, data, dense):
    """One-shot A @ dense for a CSR matrix given as raw arrays."""
    indptr, indices, data = _canonical_csr(indptr, indices, data)
    dense = np.ascontiguousarray(dense, dtype=np.float64)
    if BACKEND == "c":
        return _ckernels.csr_matmul(indptr, indices, data, dense)
    return fallback.csr_matmul(indptr, indices, data, dense)


def adam_update(param, grad, m, v, step_count, lr, beta1, beta2, eps):
    """In-place bias-corrected Adam step; arrays may be any (matching) shape."""
    p = param.reshape(-1)
    g = np.ascontiguousarray(grad, dtype=np.float64).reshape(-1)
    if BACKEND == "c":
        _ckernels.adam_update(p, g, m.reshape(-1), v.reshape(-1),
                              step_count, lr, beta1, beta2, eps)
    else:
        fallback.adam_update(p, g, m.reshape(-1), v.reshape(-1),
                             step_count, lr, beta1, beta2, eps)
