# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: propagator merge partition and CSR row softmax.

The NumPy fallback in ``_py`` mirrors these loops; keep the two in sync.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()


cdef Py_ssize_t _find(cnp.int64_t* parent, Py_ssize_t x) noexcept nogil:
    cdef Py_ssize_t root = x
    cdef Py_ssize_t nxt
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


def merge_labels(const double[:, ::1] rho not None):
    """Union-find closure of rho[i, j] > min(rho[i, i], rho[j, j]), i != j.

    Returns an [n] int64 array mapping each node to the smallest node id in
    its merged group.
    """
    cdef Py_ssize_t n = rho.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] parent_arr = np.arange(n, dtype=np.int64)
    cdef cnp.int64_t* parent = <cnp.int64_t*> parent_arr.data
    cdef cnp.ndarray[cnp.float64_t, ndim=1] diag_arr = np.empty(n, dtype=np.float64)
    cdef double* diag = <double*> diag_arr.data
    cdef Py_ssize_t i, j, ri, rj
    cdef double di, t

    with nogil:
        for i in range(n):
            diag[i] = rho[i, i]
        for i in range(n):
            di = diag[i]
            for j in range(i + 1, n):
                t = di if di < diag[j] else diag[j]
                if rho[i, j] > t:
                    ri = _find(parent, i)
                    rj = _find(parent, j)
                    if ri != rj:
                        if ri < rj:
                            parent[rj] = ri
                        else:
                            parent[ri] = rj
        for i in range(n):
            parent[i] = _find(parent, i)
    return parent_arr


def row_softmax(const cnp.int64_t[::1] indptr not None,
                const double[::1] values not None):
    """Softmax within each CSR row segment; rows must be non-empty."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(values.shape[0], dtype=np.float64)
    cdef double* out = <double*> out_arr.data
    cdef Py_ssize_t r, k, s, e
    cdef double m, denom

    with nogil:
        for r in range(n):
            s = indptr[r]
            e = indptr[r + 1]
            m = values[s]
            for k in range(s + 1, e):
                if values[k] > m:
                    m = values[k]
            denom = 0.0
            for k in range(s, e):
                out[k] = exp(values[k] - m)
                denom += out[k]
            for k in range(s, e):
                out[k] /= denom
    return out_arr


def row_softmax_grad(const cnp.int64_t[::1] indptr not None,
                     const double[::1] alpha not None,
                     const double[::1] grad_alpha not None):
    """alpha * (grad_alpha - rowsum(alpha * grad_alpha)) per CSR row."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(alpha.shape[0], dtype=np.float64)
    cdef double* out = <double*> out_arr.data
    cdef Py_ssize_t r, k, s, e
    cdef double inner

    with nogil:
        for r in range(n):
            s = indptr[r]
            e = indptr[r + 1]
            inner = 0.0
            for k in range(s, e):
                inner += alpha[k] * grad_alpha[k]
            for k in range(s, e):
                out[k] = alpha[k] * (grad_alpha[k] - inner)
    return out_arr
