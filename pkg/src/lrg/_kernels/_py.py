"""NumPy fallback implementations of the hot kernels.

Semantics match ``_ck`` (the Cython build) exactly; see that module for
the reference loop formulations.
"""

import numpy as np


def merge_labels(rho):
    """Union-find closure of the pairwise merge relation on a propagator.

    Nodes i != j merge when rho[i, j] > min(rho[i, i], rho[j, j]).  Returns
    an [n] int64 array where each entry is the smallest node id of the
    merged group the node belongs to.
    """
    rho = np.ascontiguousarray(rho, dtype=np.float64)
    n = rho.shape[0]
    diag = np.diagonal(rho).copy()
    mask = rho > np.minimum.outer(diag, diag)
    ii, jj = np.nonzero(np.triu(mask, k=1))

    parent = np.arange(n, dtype=np.int64)

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for u, v in zip(ii.tolist(), jj.tolist()):
        ru, rv = find(u), find(v)
        if ru != rv:
            if ru < rv:
                parent[rv] = ru
            else:
                parent[ru] = rv
    return np.fromiter((find(i) for i in range(n)), dtype=np.int64, count=n)


def _rows_from_indptr(indptr):
    counts = np.diff(indptr)
    return np.repeat(np.arange(indptr.shape[0] - 1), counts)


def row_softmax(indptr, values):
    """Softmax within each CSR row segment of ``values``.

    Rows must be non-empty (graph rows always hold at least the self edge).
    """
    starts = indptr[:-1]
    rows = _rows_from_indptr(indptr)
    m = np.maximum.reduceat(values, starts)
    e = np.exp(values - m[rows])
    denom = np.add.reduceat(e, starts)
    return e / denom[rows]


def row_softmax_grad(indptr, alpha, grad_alpha):
    """Gradient of row_softmax: alpha * (grad_alpha - rowsum(alpha * grad_alpha))."""
    starts = indptr[:-1]
    rows = _rows_from_indptr(indptr)
    inner = np.add.reduceat(alpha * grad_alpha, starts)
    return alpha * (grad_alpha - inner[rows])
