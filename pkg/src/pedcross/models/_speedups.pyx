# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled mirrors of the reference kernels.

Every function reproduces its counterpart in _kernels_py operation for
operation; the build disables FP contraction, so results are bit-identical
to the numpy versions.  Keep the two files in lockstep.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double NEG_INF = float("-inf")
cdef double POS_INF = float("inf")


def scan_split_reg(double[::1] xs, double[:, ::1] Y, long min_leaf):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t q = Y.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cs_arr = np.empty((n, q))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cs2_arr = np.empty((n, q))
    cdef double[:, ::1] cs = cs_arr
    cdef double[:, ::1] cs2 = cs2_arr
    cdef Py_ssize_t r, c
    cdef double v
    for c in range(q):
        cs[0, c] = Y[0, c]
        cs2[0, c] = Y[0, c] * Y[0, c]
    for r in range(1, n):
        for c in range(q):
            v = Y[r, c]
            cs[r, c] = cs[r - 1, c] + v
            cs2[r, c] = cs2[r - 1, c] + v * v

    cdef double parent = 0.0
    for c in range(q):
        parent += cs2[n - 1, c] - cs[n - 1, c] * cs[n - 1, c] / n

    cdef double best_gain = NEG_INF
    cdef double best_thr = float("nan")
    cdef Py_ssize_t i
    cdef double li, ri, t1, t2, rsum, children, gain
    for i in range(1, n):
        if xs[i - 1] >= xs[i]:
            continue
        if i < min_leaf or (n - i) < min_leaf:
            continue
        li = <double> i
        ri = <double> (n - i)
        children = 0.0
        for c in range(q):
            t1 = cs2[i - 1, c] - cs[i - 1, c] * cs[i - 1, c] / li
            rsum = cs[n - 1, c] - cs[i - 1, c]
            t2 = (cs2[n - 1, c] - cs2[i - 1, c]) - rsum * rsum / ri
            children += t1 + t2
        gain = parent - children
        if gain > best_gain:
            best_gain = gain
            best_thr = (xs[i - 1] + xs[i]) / 2.0
    return best_thr, best_gain


def scan_split_cls(double[::1] xs, double[::1] y, long min_leaf):
    cdef Py_ssize_t n = xs.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] c1_arr = np.empty(n)
    cdef double[::1] c1 = c1_arr
    cdef Py_ssize_t r
    c1[0] = y[0]
    for r in range(1, n):
        c1[r] = c1[r - 1] + y[r]
    cdef double tot1 = c1[n - 1]
    cdef double tot0 = n - tot1
    cdef double parent = n - (tot0 * tot0 + tot1 * tot1) / n

    cdef double best_gain = NEG_INF
    cdef double best_thr = float("nan")
    cdef Py_ssize_t i
    cdef double li, ri, l1, l0, r1, r0, children, gain
    for i in range(1, n):
        if xs[i - 1] >= xs[i]:
            continue
        if i < min_leaf or (n - i) < min_leaf:
            continue
        li = <double> i
        ri = <double> (n - i)
        l1 = c1[i - 1]
        l0 = li - l1
        r1 = tot1 - l1
        r0 = ri - r1
        children = (li - (l0 * l0 + l1 * l1) / li) + (ri - (r0 * r0 + r1 * r1) / ri)
        gain = parent - children
        if gain > best_gain:
            best_gain = gain
            best_thr = (xs[i - 1] + xs[i]) / 2.0
    return best_thr, best_gain


def tree_apply(long[::1] feature, double[::1] threshold, long[::1] left,
               long[::1] right, double[:, ::1] X):
    cdef Py_ssize_t n = X.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.zeros(n, dtype=np.int64)
    cdef long[::1] idx = out
    cdef Py_ssize_t r
    cdef long node, f
    for r in range(n):
        node = 0
        f = feature[node]
        while f >= 0:
            if X[r, f] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
            f = feature[node]
        idx[r] = node
    return out


def nn_argmin(double[:, ::1] D, unsigned char[::1] active, long i):
    cdef Py_ssize_t n = D.shape[0]
    cdef double best = POS_INF
    cdef long best_j = 0
    cdef Py_ssize_t j
    for j in range(n):
        if j == i or not active[j]:
            continue
        if D[i, j] < best:
            best = D[i, j]
            best_j = j
    return best_j


def lw_update(double[:, ::1] D, double[::1] size, long a, long b,
              long[::1] ks, int code):
    cdef double na = size[a]
    cdef double nb = size[b]
    cdef double dab = D[a, b]
    cdef Py_ssize_t m = ks.shape[0]
    cdef Py_ssize_t t
    cdef long k
    cdef double nk, dak, dbk, new
    for t in range(m):
        k = ks[t]
        dak = D[a, k]
        dbk = D[b, k]
        if code == 0:
            nk = size[k]
            new = ((na + nk) * dak + (nb + nk) * dbk - nk * dab) / (na + nb + nk)
        elif code == 1:
            new = (na * dak + nb * dbk) / (na + nb)
        else:
            new = dak if dak > dbk else dbk
        D[a, k] = new
        D[k, a] = new
