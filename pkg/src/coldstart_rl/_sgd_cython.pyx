# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled SGD inner loop for factor-model training.

One call performs a full pass of per-sample updates in the caller-supplied
order. Update math matches ``_sgd_python.sgd_pass`` step for step; both
mutate the factor matrices in place.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def sgd_pass(
    double[:, ::1] user_factors,
    double[:, ::1] item_factors,
    const long long[::1] users,
    const long long[::1] items,
    const signed char[::1] signals,
    const long long[::1] order,
    double lr,
    double reg,
):
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t d = user_factors.shape[1]
    cdef Py_ssize_t t, j, idx
    cdef long long u, i
    cdef double err, dot, pj, qj

    for t in range(n):
        idx = order[t]
        u = users[idx]
        i = items[idx]
        dot = 0.0
        for j in range(d):
            dot += user_factors[u, j] * item_factors[i, j]
        err = signals[idx] - dot
        for j in range(d):
            pj = user_factors[u, j]
            qj = item_factors[i, j]
            user_factors[u, j] = pj + lr * (err * qj - reg * pj)
            item_factors[i, j] = qj + lr * (err * pj - reg * qj)
