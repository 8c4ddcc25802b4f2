import numpy as np
import pytest

from gcbr import kernels
from gcbr.kernels import fallback


def random_csr(rng, n, density=0.1):
    dense = rng.standard_normal((n, n)) * (rng.random((n, n)) < density)
    rows, cols = np.nonzero(dense)
    vals = dense[rows, cols]
    indptr = np.zeros(n + 1, np.int64)
    np.add.at(indptr, rows + 1, 1)
    return np.cumsum(indptr), cols, vals, dense


def test_csr_matmul_matches_dense():
    rng = np.random.default_rng(0)
    for n, d in [(1, 1), (7, 3), (40, 16), (100, 1)]:
        indptr, cols, vals, dense = random_csr(rng, n)
        x = rng.standard_normal((n, d))
        out = kernels.csr_matmul(indptr, cols, vals, x)
        assert np.allclose(out, dense @ x, atol=1e-12)


def test_csr_matmul_empty_rows():
    # rows 0 and 2 have no entries
    indptr = np.array([0, 0, 2, 2])
    cols = np.array([0, 2])
    vals = np.array([1.5, -2.0])
    x = np.arange(6.0).reshape(3, 2)
    out = kernels.csr_matmul(indptr, cols, vals, x)
    assert np.array_equal(out[0], [0.0, 0.0])
    assert np.array_equal(out[2], [0.0, 0.0])
    assert np.allclose(out[1], 1.5 * x[0] - 2.0 * x[2])


def test_csr_matmul_all_empty():
    out = kernels.csr_matmul(np.zeros(4, np.int64), np.array([], np.int64),
                             np.array([]), np.ones((3, 2)))
    assert np.array_equal(out, np.zeros((3, 2)))


@pytest.mark.skipif(kernels.BACKEND != "c",
                    reason="compiled backend not built")
def test_backends_bitwise_identical_spmm():
    rng = np.random.default_rng(1)
    for n, d in [(5, 2), (60, 8), (200, 64)]:
        indptr, cols, vals, _ = random_csr(rng, n, 0.2)
        x = rng.standard_normal((n, d))
        ip, ix, dt = kernels._canonical_csr(indptr, cols, vals)
        out_c = kernels._ckernels.csr_matmul(ip, ix, dt,
                                             np.ascontiguousarray(x))
        out_py = fallback.csr_matmul(ip, ix, dt, np.ascontiguousarray(x))
        assert np.array_equal(out_c, out_py)


def adam_reference(param, grad, m, v, t, lr, b1, b2, eps):
    m_new = b1 * m + (1 - b1) * grad
    v_new = b2 * v + (1 - b2) * grad * grad
    mhat = m_new / (1 - b1 ** t)
    vhat = v_new / (1 - b2 ** t)
    return param - lr * mhat / (np.sqrt(vhat) + eps), m_new, v_new


def test_adam_update_matches_reference():
    rng = np.random.default_rng(2)
    p = rng.standard_normal((4, 3))
    g = rng.standard_normal((4, 3))
    m = np.zeros((4, 3))
    v = np.zeros((4, 3))
    expected = p.copy()
    em, ev = m.copy(), v.copy()
    for t in range(1, 8):
        kernels.adam_update(p, g, m, v, t, 0.05, 0.9, 0.999, 1e-8)
        expected, em, ev = adam_reference(expected, g, em, ev, t, 0.05,
                                          0.9, 0.999, 1e-8)
    assert np.allclose(p, expected, atol=1e-14)
    assert np.allclose(m, em, atol=1e-14)


@pytest.mark.skipif(kernels.BACKEND != "c",
                    reason="compiled backend not built")
def test_backends_bitwise_identical_adam():
    rng = np.random.default_rng(3)
    p1 = rng.standard_normal(53)
    g = rng.standard_normal(53)
    m1, v1 = np.zeros(53), np.zeros(53)
    p2, m2, v2 = p1.copy(), m1.copy(), v1.copy()
    for t in range(1, 20):
        kernels._ckernels.adam_update(p1, g, m1, v1, t, 0.01, 0.9, 0.999, 1e-8)
        fallback.adam_update(p2, g, m2, v2, t, 0.01, 0.9, 0.999, 1e-8)
    assert np.array_equal(p1, p2)
    assert np.array_equal(m1, m2)
    assert np.array_equal(v1, v2)
