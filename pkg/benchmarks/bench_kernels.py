"""Compare the compiled kernels against the scipy/numpy fallback.

Times the two hot kernels in isolation and a full environment step on a
mid-size synthetic graph. Run from the repo root:

    python benchmarks/bench_kernels.py [--nodes 1000]

The backend used by the package itself is chosen at import; this script
drives both implementations directly, so it needs the compiled extension
built (it reports fallback-only numbers otherwise).
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gcbr import kernels  # noqa: E402
from gcbr.graphs import SbmConfig, generate_sbm, make_split  # noqa: E402
from gcbr.kernels import fallback  # noqa: E402


def timeit(fn, repeats=200):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def bench_spmm(g, d):
    adj = g.norm_adj
    x = np.random.default_rng(0).standard_normal((g.num_nodes, d))
    ip, ix, dt = kernels._canonical_csr(adj.indptr, adj.indices, adj.data)
    rows = []
    py_spmm = fallback.make_spmm(ip, ix, dt, adj.shape)
    rows.append(("spmm (py: scipy)", timeit(lambda: py_spmm(x))))
    if kernels._ckernels is not None:
        c = kernels._ckernels
        rows.append(("spmm (c: cython)",
                     timeit(lambda: c.csr_matmul(ip, ix, dt, x))))
    return rows


def bench_adam(size=64 * 1433):
    rng = np.random.default_rng(1)
    grad = rng.standard_normal(size)
    rows = []

    def run(impl):
        p = rng.standard_normal(size)
        m = np.zeros(size)
        v = np.zeros(size)
        t = [0]

        def step():
            t[0] += 1
            impl(p, grad, m, v, t[0], 1e-3, 0.9, 0.999, 1e-8)

        return timeit(step)

    rows.append(("adam (py: numpy)", run(fallback.adam_update)))
    if kernels._ckernels is not None:
        rows.append(("adam (c: cython)", run(kernels._ckernels.adam_update)))
    return rows


def bench_env_step(g):
    from gcbr.env import RewardConfig, reset, step, build_state

    split = make_split(g, 1, g.num_nodes // 5, g.num_nodes // 5)
    env = reset(g, split, RewardConfig(), budget=g.num_nodes // 4, seed=0)
    pool = iter(int(i) for i in split.train_idx)

    def one_step():
        build_state(env, g)
        step(env, g, split, next(pool))

    t0 = time.perf_counter()
    n = 50
    for _ in range(n):
        one_step()
    return [("env step + state build (active backend: "
             f"{kernels.BACKEND})", (time.perf_counter() - t0) / n)]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--nodes", type=int, default=1000)
    parser.add_argument("--feature-dim", type=int, default=64)
    args = parser.parse_args()

    g = generate_sbm(SbmConfig(args.nodes, (0.6, 0.2, 0.1, 0.06, 0.04),
                               0.05, 0.005, 16, 1.5), seed=0)
    nnz = g.norm_adj.data.size
    print(f"graph: {g.num_nodes} nodes, {nnz} nonzeros; "
          f"dense width {args.feature_dim}")
    print(f"active package backend: {kernels.BACKEND}")
    print()
    rows = (bench_spmm(g, args.feature_dim) + bench_adam()
            + bench_env_step(g))
    width = max(len(name) for name, _ in rows)
    for name, dt in rows:
        print(f"{name:<{width}}  {dt * 1e3:8.3f} ms")
    if kernels._ckernels is None:
        print("\ncompiled extension not built; only fallback numbers shown")


if __name__ == "__main__":
    main()
