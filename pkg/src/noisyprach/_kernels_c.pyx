# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled neighbour-search kernels (see ``_kernels_py`` for the reference)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()


cdef inline void _insert(double* bd, long long* bi, int k, double d, long long idx) noexcept nogil:
    # bd/bi sorted ascending by (d, idx); idx is always >= existing on ties
    cdef int pos = k - 1
    if d >= bd[pos]:
        return
    while pos > 0 and bd[pos - 1] > d:
        bd[pos] = bd[pos - 1]
        bi[pos] = bi[pos - 1]
        pos -= 1
    bd[pos] = d
    bi[pos] = idx


def knn_search(queries, refs, Py_ssize_t k, bint exclude_self=False):
    """Brute-force k nearest neighbours, sorted by (distance, index)."""
    cdef const double[:, ::1] Q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef const double[:, ::1] R = np.ascontiguousarray(refs, dtype=np.float64)
    cdef Py_ssize_t nq = Q.shape[0], nr = R.shape[0], dim = Q.shape[1]
    cdef Py_ssize_t avail = nr - 1 if exclude_self else nr
    if k > avail:
        raise ValueError(f"k={k} exceeds the {avail} available references")
    out_d_arr = np.empty((nq, k), dtype=np.float64)
    out_i_arr = np.empty((nq, k), dtype=np.int64)
    if k == 0:
        return out_d_arr, out_i_arr
    cdef double[:, ::1] out_d = out_d_arr
    cdef long long[:, ::1] out_i = out_i_arr
    cdef Py_ssize_t q, r, j
    cdef double acc, diff
    with nogil:
        for q in range(nq):
            for j in range(k):
                out_d[q, j] = INFINITY
                out_i[q, j] = -1
            for r in range(nr):
                if exclude_self and r == q:
                    continue
                acc = 0.0
                for j in range(dim):
                    diff = Q[q, j] - R[r, j]
                    acc = acc + diff * diff
                _insert(&out_d[q, 0], &out_i[q, 0], <int>k, acc, r)
            for j in range(k):
                out_d[q, j] = sqrt(out_d[q, j])
    return out_d_arr, out_i_arr


def knn_merge(best_d_arr, best_i_arr, queries, new_refs, long long index_offset):
    """Merge ``new_refs`` into the sorted k-best lists in place."""
    cdef double[:, ::1] bd = best_d_arr
    cdef long long[:, ::1] bi = best_i_arr
    cdef const double[:, ::1] Q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef const double[:, ::1] R = np.ascontiguousarray(new_refs, dtype=np.float64)
    cdef Py_ssize_t nq = Q.shape[0], nr = R.shape[0], dim = Q.shape[1]
    cdef Py_ssize_t k = bd.shape[1]
    cdef Py_ssize_t q, r, j
    cdef double acc, diff
    if k == 0 or nr == 0:
        return
    with nogil:
        for q in range(nq):
            for r in range(nr):
                acc = 0.0
                for j in range(dim):
                    diff = Q[q, j] - R[r, j]
                    acc = acc + diff * diff
                _insert(&bd[q, 0], &bi[q, 0], <int>k, sqrt(acc), index_offset + r)


def active_knn_mean(cand_d_arr, cand_i_arr, active_arr, Py_ssize_t k):
    """Mean distance to the first ``k`` active candidates; NaN if too few."""
    cdef const double[:, ::1] cd = np.ascontiguousarray(cand_d_arr, dtype=np.float64)
    cdef const long long[:, ::1] ci = np.ascontiguousarray(cand_i_arr, dtype=np.int64)
    cdef const cnp.uint8_t[::1] act = np.ascontiguousarray(active_arr, dtype=np.uint8)
    cdef Py_ssize_t n = cd.shape[0], width = cd.shape[1]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, taken
    cdef long long idx
    cdef double acc
    with nogil:
        for i in range(n):
            acc = 0.0
            taken = 0
            for j in range(width):
                if taken == k:
                    break
                idx = ci[i, j]
                if idx >= 0 and act[idx]:
                    acc = acc + cd[i, j]
                    taken += 1
            if taken < k:
                out[i] = 0.0 / 0.0
            else:
                out[i] = acc / k
    return out_arr
