# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: CART split search and k-nearest-neighbour scan.

Results are bit-identical to ``_pykernels``: each feature is ordered by
(value, position) with the same stable argsort, sums accumulate left to right, and
the same midpoint and tie rules apply.
"""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double NEG_INF = float("-inf")


def _sorted_column(cols, y_node, Py_ssize_t f):
    """Feature ``f`` and the targets, ordered by (value, position) via a stable argsort."""
    v = np.ascontiguousarray(cols[:, f])
    order = np.argsort(v, kind="stable")
    return v[order], np.ascontiguousarray(y_node[order])


cdef inline double _midpoint(double a, double b) noexcept nogil:
    cdef double t = (a + b) * 0.5
    if t < b:
        return t
    return a


def best_split_regression(const double[:, ::1] X, const double[::1] y,
                          const cnp.int64_t[::1] samples, const cnp.int64_t[::1] features,
                          Py_ssize_t min_leaf):
    cdef Py_ssize_t m = samples.shape[0]
    cdef Py_ssize_t nf = features.shape[0]
    cdef Py_ssize_t fi, i, f
    cdef double sl, sr, total, score, nl, nr
    cdef Py_ssize_t best_f = -1
    cdef double best_t = float("nan")
    cdef double best_s = NEG_INF
    cdef const double[::1] vs
    cdef const double[::1] ys
    if m < 2 * min_leaf or m < 2:
        return best_f, best_t, best_s
    cols = np.asarray(X)[np.asarray(samples)]
    y_node = np.asarray(y)[np.asarray(samples)]
    for fi in range(nf):
        f = features[fi]
        vs, ys = _sorted_column(cols, y_node, f)
        with nogil:
            total = 0.0
            for i in range(m):
                total += ys[i]
            sl = 0.0
            for i in range(m - 1):
                sl += ys[i]
                if i + 1 < min_leaf:
                    continue
                if m - i - 1 < min_leaf:
                    break
                if not (vs[i] < vs[i + 1]):
                    continue
                nl = <double> (i + 1)
                nr = <double> (m - i - 1)
                sr = total - sl
                score = sl * sl / nl + sr * sr / nr
                if score > best_s:
                    best_s = score
                    best_f = f
                    best_t = _midpoint(vs[i], vs[i + 1])
    return best_f, best_t, best_s


def best_split_classification(const double[:, ::1] X, const cnp.int64_t[::1] y,
                              const cnp.int64_t[::1] samples, const cnp.int64_t[::1] features,
                              Py_ssize_t n_classes, Py_ssize_t min_leaf):
    cdef Py_ssize_t m = samples.shape[0]
    cdef Py_ssize_t nf = features.shape[0]
    cdef Py_ssize_t fi, i, f, c
    cdef cnp.int64_t sq_l, sq_r
    cdef double score, nl, nr
    cdef Py_ssize_t best_f = -1
    cdef double best_t = float("nan")
    cdef double best_s = NEG_INF
    cdef const double[::1] vs
    cdef const cnp.int64_t[::1] ys
    cdef cnp.int64_t[::1] left = np.zeros(n_classes, dtype=np.int64)
    cdef cnp.int64_t[::1] right = np.zeros(n_classes, dtype=np.int64)
    if m < 2 * min_leaf or m < 2:
        return best_f, best_t, best_s
    cols = np.asarray(X)[np.asarray(samples)]
    y_node = np.asarray(y)[np.asarray(samples)]
    for fi in range(nf):
        f = features[fi]
        vs, ys = _sorted_column(cols, y_node, f)
        with nogil:
            for c in range(n_classes):
                left[c] = 0
                right[c] = 0
            for i in range(m):
                right[ys[i]] += 1
            sq_l = 0
            sq_r = 0
            for c in range(n_classes):
                sq_r += right[c] * right[c]
            for i in range(m - 1):
                c = ys[i]
                sq_l += 2 * left[c] + 1
                left[c] += 1
                sq_r -= 2 * right[c] - 1
                right[c] -= 1
                if i + 1 < min_leaf:
                    continue
                if m - i - 1 < min_leaf:
                    break
                if not (vs[i] < vs[i + 1]):
                    continue
                nl = <double> (i + 1)
                nr = <double> (m - i - 1)
                score = (<double> sq_l) / nl + (<double> sq_r) / nr
                if score > best_s:
                    best_s = score
                    best_f = f
                    best_t = _midpoint(vs[i], vs[i + 1])
    return best_f, best_t, best_s


def knn_neighbors(const double[:, ::1] X_train, const double[:, ::1] X_query, Py_ssize_t k):
    cdef Py_ssize_t n = X_train.shape[0]
    cdef Py_ssize_t d = X_train.shape[1]
    cdef Py_ssize_t nq = X_query.shape[0]
    cdef Py_ssize_t q, i, j, slot
    cdef double acc, diff
    out = np.empty((nq, k), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] res = out
    cdef double* bd = <double*> malloc(k * sizeof(double))
    cdef Py_ssize_t* bi = <Py_ssize_t*> malloc(k * sizeof(Py_ssize_t))
    cdef Py_ssize_t filled
    if bd == NULL or bi == NULL:
        free(bd)
        free(bi)
        raise MemoryError()
    try:
        with nogil:
            for q in range(nq):
                filled = 0
                for i in range(n):
                    acc = 0.0
                    for j in range(d):
                        diff = X_query[q, j] - X_train[i, j]
                        acc += diff * diff
                    # i increases, so an equal distance never displaces an earlier index
                    if filled == k and not (acc < bd[k - 1]):
                        continue
                    slot = filled if filled < k else k - 1
                    while slot > 0 and acc < bd[slot - 1]:
                        if slot < k:
                            bd[slot] = bd[slot - 1]
                            bi[slot] = bi[slot - 1]
                        slot -= 1
                    bd[slot] = acc
                    bi[slot] = i
                    if filled < k:
                        filled += 1
                for slot in range(k):
                    res[q, slot] = bi[slot]
    finally:
        free(bd)
        free(bi)
    return out
