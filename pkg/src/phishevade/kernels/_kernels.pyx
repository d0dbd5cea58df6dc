# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tree kernels: exhaustive Gini split search and batched forest
traversal. Behavior matches _kernels_py exactly, including tie-breaking."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def best_split(cnp.ndarray[cnp.float64_t, ndim=2] x,
               cnp.ndarray[cnp.int64_t, ndim=1] y):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t k = x.shape[1]
    cdef Py_ssize_t col, i, j
    cdef long long total1 = 0, total0
    cdef long long nl, nr, c0, c1, r0, r1
    cdef double gini_l, gini_r, cost
    cdef double best_cost = np.inf
    cdef Py_ssize_t best_col = -1
    cdef double best_thr = 0.0

    for i in range(n):
        total1 += y[i]
    total0 = n - total1
    if n < 2 or total1 == 0 or total0 == 0:
        return -1, 0.0, np.inf

    cdef cnp.ndarray[cnp.int64_t, ndim=1] order
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xs = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ys = np.empty(n, dtype=np.int64)

    for col in range(k):
        order = np.argsort(x[:, col], kind="stable")
        for i in range(n):
            j = order[i]
            xs[i] = x[j, col]
            ys[i] = y[j]
        c1 = 0
        for i in range(n - 1):
            c1 += ys[i]
            if xs[i + 1] == xs[i]:
                continue
            nl = i + 1
            nr = n - nl
            c0 = nl - c1
            r1 = total1 - c1
            r0 = total0 - c0
            gini_l = 1.0 - <double>(c0 * c0 + c1 * c1) / <double>(nl * nl)
            gini_r = 1.0 - <double>(r0 * r0 + r1 * r1) / <double>(nr * nr)
            cost = (nl * gini_l + nr * gini_r) / n
            if cost < best_cost:
                best_cost = cost
                best_col = col
                best_thr = (xs[i] + xs[i + 1]) / 2.0
    return best_col, best_thr, best_cost


def forest_predict(cnp.ndarray[cnp.int32_t, ndim=1] node_feature,
                   cnp.ndarray[cnp.float64_t, ndim=1] node_threshold,
                   cnp.ndarray[cnp.int32_t, ndim=1] node_left,
                   cnp.ndarray[cnp.int32_t, ndim=1] node_right,
                   cnp.ndarray[cnp.float64_t, ndim=1] node_value,
                   cnp.ndarray[cnp.int32_t, ndim=1] roots,
                   cnp.ndarray[cnp.float64_t, ndim=2] x):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_trees = roots.shape[0]
    cdef Py_ssize_t i, t
    cdef int node, feat
    cdef cnp.ndarray[cnp.float64_t, ndim=1] acc = np.zeros(n, dtype=np.float64)

    for t in range(n_trees):
        for i in range(n):
            node = roots[t]
            feat = node_feature[node]
            while feat >= 0:
                if x[i, feat] <= node_threshold[node]:
                    node = node_left[node]
                else:
                    node = node_right[node]
                feat = node_feature[node]
            acc[i] += node_value[node]
    for i in range(n):
        acc[i] /= n_trees
    return acc
