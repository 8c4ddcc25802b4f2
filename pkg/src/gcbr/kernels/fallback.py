"""No-compile kernel backend: scipy.sparse for the sparse product, numpy for Adam.

Operation order mirrors the compiled kernels exactly so both backends produce
bit-identical results.
"""

import numpy as np
import scipy.sparse as sp


def make_spmm(indptr, indices, data, shape):
    mat = sp.csr_matrix((data, indices, indptr), shape=shape)

    def spmm(dense):
        return mat @ dense

    return spmm


def csr_matmul(indptr, indices, data, dense):
    n = indptr.shape[0] - 1
    return sp.csr_matrix((data, indices, indptr), shape=(n, dense.shape[0])) @ dense


def adam_update(param, grad, m, v, step_count, lr, beta1, beta2, eps):
    omb1 = 1.0 - beta1
    omb2 = 1.0 - beta2
    bc1 = 1.0 - beta1 ** step_count
    bc2 = 1.0 - beta2 ** step_count
    m *= beta1
    m += omb1 * grad
    v *= beta2
    v += omb2 * grad * grad
    param -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
