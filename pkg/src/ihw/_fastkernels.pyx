# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Must stay semantically identical to ``ihw._purekernels`` (same pivot rules,
same tie-breaking, same order of floating-point operations); the test suite
checks parity on random inputs.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

SIMPLEX_OPTIMAL = 0
SIMPLEX_UNBOUNDED = 1
SIMPLEX_MAXITER = 2


def pava_decreasing(y, w):
    """Weighted least-squares projection of ``y`` onto nonincreasing sequences."""
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    means_arr = np.empty(n, dtype=np.float64)
    weights_arr = np.empty(n, dtype=np.float64)
    counts_arr = np.empty(n, dtype=np.intp)
    cdef double[::1] out = out_arr
    cdef double[::1] means = means_arr
    cdef double[::1] weights = weights_arr
    cdef Py_ssize_t[::1] counts = counts_arr
    cdef Py_ssize_t top = -1, i, b, pos, c
    cdef double tot
    for i in range(n):
        top += 1
        means[top] = yv[i]
        weights[top] = wv[i]
        counts[top] = 1
        while top > 0 and means[top - 1] < means[top]:
            tot = weights[top - 1] + weights[top]
            means[top - 1] = (means[top - 1] * weights[top - 1] + means[top] * weights[top]) / tot
            weights[top - 1] = tot
            counts[top - 1] += counts[top]
            top -= 1
    pos = 0
    for b in range(top + 1):
        for c in range(counts[b]):
            out[pos + c] = means[b]
        pos += counts[b]
    return out_arr


def upper_hull_indices(x, y):
    """Indices of the upper convex hull of points with strictly increasing x."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    stack_arr = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] stack = stack_arr
    cdef Py_ssize_t top = 0, i, i1, i2
    cdef double cross
    stack[0] = 0
    for i in range(1, n):
        while top >= 1:
            i1 = stack[top - 1]
            i2 = stack[top]
            cross = (xv[i2] - xv[i1]) * (yv[i] - yv[i1]) - (yv[i2] - yv[i1]) * (xv[i] - xv[i1])
            if cross >= 0.0:
                top -= 1
            else:
                break
        top += 1
        stack[top] = i
    return stack_arr[: top + 1].copy()


def simplex_core(T, basis, double tol, long max_iter):
    """Run simplex pivots in place; see the pure backend for the contract."""
    cdef double[:, ::1] Tv = T
    cdef Py_ssize_t[::1] bv = basis
    cdef Py_ssize_t n_rows = Tv.shape[0]
    cdef Py_ssize_t rhs = Tv.shape[1] - 1
    cdef Py_ssize_t enter, leave, i, j
    cdef long it
    cdef double theta, a, r, num, bound, piv, factor, leave_pivot
    cdef double relax = 1e-9
    for it in range(max_iter):
        enter = -1
        for j in range(rhs):
            if Tv[0, j] < -tol:
                enter = j
                break
        if enter < 0:
            return SIMPLEX_OPTIMAL
        theta = np.inf
        for i in range(1, n_rows):
            a = Tv[i, enter]
            if a > tol:
                num = Tv[i, rhs]
                bound = ((num if num > 0.0 else 0.0) + relax) / a
                if bound < theta:
                    theta = bound
        if theta == np.inf:
            return SIMPLEX_UNBOUNDED
        leave = -1
        leave_pivot = 0.0
        for i in range(1, n_rows):
            a = Tv[i, enter]
            if a > tol:
                num = Tv[i, rhs]
                r = (num if num > 0.0 else 0.0) / a
                if r <= theta:
                    if a > leave_pivot or (a == leave_pivot and bv[i - 1] < bv[leave - 1]):
                        leave = i
                        leave_pivot = a
        piv = Tv[leave, enter]
        for j in range(rhs + 1):
            Tv[leave, j] = Tv[leave, j] / piv
        for i in range(n_rows):
            if i == leave:
                continue
            factor = Tv[i, enter]
            if factor != 0.0:
                for j in range(rhs + 1):
                    Tv[i, j] = Tv[i, j] - factor * Tv[leave, j]
            Tv[i, enter] = 0.0
        Tv[leave, enter] = 1.0
        bv[leave - 1] = enter
        for i in range(1, n_rows):
            if -1e-8 < Tv[i, rhs] < 0.0:
                Tv[i, rhs] = 0.0
    return SIMPLEX_MAXITER
