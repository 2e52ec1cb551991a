"""Timing comparison of the compiled kernel backend against the numpy
fallback.  Run from the repo root after installing the package:

    python3 benchmarks/bench_kernels.py

Covers the two non-BLAS hot paths: the O(n^2) merge-relation union-find
behind macro-node partitioning, and the CSR segment softmax (forward and
backward) behind GAT attention.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lrg import _kernels
from lrg._kernels import _py
from lrg.generate import generate_sbm
from lrg.nn import attention_structure
from lrg.renorm import propagator_matrix
from lrg.spectral import eigendecompose
from lrg.graph import laplacian, largest_connected_component

try:
    from lrg._kernels import _ck
except ImportError:
    _ck = None


def _time(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _row(label, size, py_fn, ck_fn):
    t_py = _time(py_fn)
    if ck_fn is None:
        print(f"{label:<24} {size:>10} {t_py * 1e3:>12.3f} {'-':>12} {'-':>9}")
        return
    t_ck = _time(ck_fn)
    print(
        f"{label:<24} {size:>10} {t_py * 1e3:>12.3f} {t_ck * 1e3:>12.3f} "
        f"{t_py / t_ck:>8.1f}x"
    )


def bench_merge(n, tau=0.8):
    g = largest_connected_component(
        generate_sbm(n_nodes=n, n_blocks=4, p_in=0.3, p_out=0.01, seed=1)
    )
    spec = eigendecompose(laplacian(g))
    rho = propagator_matrix(spec, tau).values
    _row(
        "merge_labels",
        g.n_nodes,
        lambda: _py.merge_labels(rho),
        (lambda: _ck.merge_labels(rho)) if _ck else None,
    )


def bench_softmax(n):
    g = largest_connected_component(
        generate_sbm(n_nodes=n, n_blocks=4, p_in=0.3, p_out=0.01, seed=1)
    )
    indptr, _, _ = attention_structure(g)
    rng = np.random.default_rng(0)
    logits = rng.normal(size=int(indptr[-1]))
    alpha_py = _py.row_softmax(indptr, logits)
    upstream = rng.normal(size=logits.shape[0])
    _row(
        "row_softmax",
        logits.shape[0],
        lambda: _py.row_softmax(indptr, logits),
        (lambda: _ck.row_softmax(indptr, logits)) if _ck else None,
    )
    _row(
        "row_softmax_grad",
        logits.shape[0],
        lambda: _py.row_softmax_grad(indptr, alpha_py, upstream),
        (lambda: _ck.row_softmax_grad(indptr, alpha_py, upstream)) if _ck else None,
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--merge-sizes", type=int, nargs="+", default=[200, 800, 1600])
    parser.add_argument("--softmax-sizes", type=int, nargs="+", default=[2000, 8000])
    args = parser.parse_args()

    print(f"active backend: {_kernels.BACKEND}")
    if _ck is None:
        print("compiled backend unavailable; showing fallback timings only")
    print(f"{'kernel':<24} {'size':>10} {'python ms':>12} {'compiled ms':>12} {'speedup':>9}")
    for n in args.merge_sizes:
        bench_merge(n)
    for n in args.softmax_sizes:
        bench_softmax(n)


if __name__ == "__main__":
    main()
