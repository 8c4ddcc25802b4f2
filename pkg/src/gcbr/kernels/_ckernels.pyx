# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: CSR sparse x dense product and fused Adam update.

Accumulation order is the serial k-order loop, matching the scipy fallback
bit for bit (the build disables FP contraction for the same reason).
"""

from libc.math cimport sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def csr_matmul(const int[::1] indptr, const int[::1] indices,
               const double[::1] data, const double[:, ::1] dense):
    """Return A @ dense for A in CSR form, shape (len(indptr)-1, dense.shape[1])."""
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef Py_ssize_t n_cols = dense.shape[1]
    cdef cnp.ndarray[double, ndim=2] out = np.zeros((n_rows, n_cols))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t r, k, c, j
    cdef double v
    for r in range(n_rows):
        for k in range(indptr[r], indptr[r + 1]):
            j = indices[k]
            v = data[k]
            for c in range(n_cols):
                o[r, c] += v * dense[j, c]
    return out


def adam_update(double[::1] param, const double[::1] grad,
                double[::1] m, double[::1] v,
                long step_count, double lr,
                double beta1, double beta2, double eps):
    """In-place bias-corrected Adam step on flat arrays."""
    cdef Py_ssize_t n = param.shape[0]
    cdef double omb1 = 1.0 - beta1
    cdef double omb2 = 1.0 - beta2
    cdef double bc1 = 1.0 - beta1 ** step_count
    cdef double bc2 = 1.0 - beta2 ** step_count
    cdef Py_ssize_t i
    cdef double mhat, vhat
    for i in range(n):
        m[i] = beta1 * m[i] + omb1 * grad[i]
        v[i] = beta2 * v[i] + omb2 * grad[i] * grad[i]
        mhat = m[i] / bc1
        vhat = v[i] / bc2
        param[i] -= lr * mhat / (sqrt(vhat) + eps)
