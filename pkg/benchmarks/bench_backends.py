#!/usr/bin/env python3
"""Time the numba kernels against their pure-numpy/Python fallbacks.

The three hot loops are the autodiff backward sweep, all-pairs BFS, and the
exact four-point enumeration.  Run directly:

    python benchmarks/bench_backends.py

The active package backend (LGCN_BACKEND) does not matter here; both kernel
variants are imported explicitly.
"""

import time

import numpy as np

import lgcn
from lgcn import autodiff as ad
from lgcn._backend import HAVE_NUMBA
from lgcn.autodiff import Parameter, Tape
from lgcn.graphs import _bfs_all_numpy, _bfs_all_py, _exact_enum_numpy, _exact_enum_py
from lgcn.model import LgcnConfig, LgcnModel, forward_values, link_prediction_loss


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backward_sweep():
    g = lgcn.generate_tree(6, 2, feature_mode="path", noise=0.5, seed=7)
    cfg = LgcnConfig(dims=[6, 16, 16], seed=7)
    model = LgcnModel(cfg, np.random.default_rng(7))
    nbrs = g.neighbor_lists()
    tape = Tape()
    emb, beta = forward_values(tape, model, nbrs, g.feature_matrix())
    edges = g.edges()
    loss = link_prediction_loss(emb, edges[:60], edges[60:120], 2.0, 1.0, beta=beta)

    n = len(tape)
    d0 = np.frombuffer(tape._d0, dtype=np.float64, count=n)
    p0 = np.frombuffer(tape._p0, dtype=np.int64, count=n)
    d1 = np.frombuffer(tape._d1, dtype=np.float64, count=n)
    p1 = np.frombuffer(tape._p1, dtype=np.int64, count=n)

    def run_python():
        grad = np.zeros(n)
        grad[loss.i] = 1.0
        ad._sweep_py(d0, p0, d1, p1, grad, loss.i)
        return grad

    rows = [("backward sweep (python)", timeit(run_python), n)]
    if HAVE_NUMBA:
        import numba

        jit = numba.njit(
            "void(float64[::1], int64[::1], float64[::1], int64[::1], float64[::1], int64)",
            cache=True,
        )(ad._sweep_py)

        def run_numba():
            grad = np.zeros(n)
            grad[loss.i] = 1.0
            jit(d0, p0, d1, p1, grad, loss.i)
            return grad

        run_numba()  # compile before timing
        np.testing.assert_allclose(run_numba(), run_python())
        rows.append(("backward sweep (numba)", timeit(run_numba), n))
    return rows


def bench_bfs():
    g = lgcn.generate_blocks(400, 0.03, 0.005, seed=3)
    rows = [("all-pairs BFS (numpy)", timeit(lambda: _bfs_all_numpy(g), 3), g.n)]
    if HAVE_NUMBA:
        import numba

        jit = numba.njit("int64[:,::1](int64[::1], int64[::1], int64)", cache=True)(_bfs_all_py)
        jit(g.indptr, g.indices, g.n)
        np.testing.assert_array_equal(jit(g.indptr, g.indices, g.n), _bfs_all_numpy(g))
        rows.append(("all-pairs BFS (numba)", timeit(lambda: jit(g.indptr, g.indices, g.n), 3), g.n))
    return rows


def bench_quadruples():
    g = lgcn.generate_blocks(30, 0.4, 0.1, seed=5)
    d = lgcn.all_pairs_distances(g)
    rows = [("exact 4-point enum (numpy)", timeit(lambda: _exact_enum_numpy(d, g.n), 3), g.n)]
    if HAVE_NUMBA:
        import numba

        jit = numba.njit(
            "Tuple((float64, float64, int64, int64))(float64[:,::1], int64)", cache=True
        )(_exact_enum_py)
        jit(d, g.n)
        assert jit(d, g.n) == _exact_enum_numpy(d, g.n)
        rows.append(("exact 4-point enum (numba)", timeit(lambda: jit(d, g.n), 3), g.n))
    return rows


def main():
    print(f"numba available: {HAVE_NUMBA}")
    groups = [bench_backward_sweep(), bench_bfs(), bench_quadruples()]
    print(f"{'kernel':35s} {'size':>8s} {'best time':>12s} {'speedup':>9s}")
    for rows in groups:
        base = rows[0][1]
        for name, t, size in rows:
            print(f"{name:35s} {size:8d} {t * 1e3:10.2f}ms {base / t:8.1f}x")


if __name__ == "__main__":
    main()
