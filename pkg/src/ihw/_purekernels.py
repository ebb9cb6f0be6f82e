"""Pure-numpy implementations of the hot kernels.

Fallback backend used when the compiled extension is unavailable (or
disabled via ``IHW_PURE_KERNELS=1``). Semantics must match
``ihw._fastkernels`` bit for bit; ``tests/test_kernels.py`` enforces parity.
"""

import numpy as np

SIMPLEX_OPTIMAL = 0
SIMPLEX_UNBOUNDED = 1
SIMPLEX_MAXITER = 2


def pava_decreasing(y, w):
    """Weighted least-squares projection of ``y`` onto nonincreasing sequences.

    Pool-adjacent-violators with a block stack; pooled blocks carry their
    weighted mean. ``y`` and ``w`` are float64 arrays of equal length,
    ``w`` strictly positive.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    n = y.shape[0]
    means = np.empty(n)
    weights = np.empty(n)
    counts = np.empty(n, dtype=np.intp)
    top = -1
    for i in range(n):
        top += 1
        means[top] = y[i]
        weights[top] = w[i]
        counts[top] = 1
        # nonincreasing fit: an earlier block with a smaller mean violates
        while top > 0 and means[top - 1] < means[top]:
            tot = weights[top - 1] + weights[top]
            means[top - 1] = (means[top - 1] * weights[top - 1] + means[top] * weights[top]) / tot
            weights[top - 1] = tot
            counts[top - 1] += counts[top]
            top -= 1
    out = np.empty(n)
    pos = 0
    for b in range(top + 1):
        out[pos : pos + counts[b]] = means[b]
        pos += counts[b]
    return out


def upper_hull_indices(x, y):
    """Indices of the upper convex hull of points with strictly increasing x.

    Monotone-chain scan; collinear interior points are dropped, so
    consecutive hull-edge slopes are strictly decreasing. Endpoints are
    always kept.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = x.shape[0]
    stack = np.empty(n, dtype=np.intp)
    top = 0
    stack[0] = 0
    for i in range(1, n):
        while top >= 1:
            i1 = stack[top - 1]
            i2 = stack[top]
            cross = (x[i2] - x[i1]) * (y[i] - y[i1]) - (y[i2] - y[i1]) * (x[i] - x[i1])
            if cross >= 0.0:
                top -= 1
            else:
                break
        top += 1
        stack[top] = i
    return stack[: top + 1].copy()


def simplex_core(T, basis, tol, max_iter):
    """Run simplex pivots in place on a minimization tableau.

    ``T`` has the reduced-cost row at index 0 (objective value in the last
    column, negated) and one row per constraint with nonnegative right-hand
    sides. ``basis`` holds the basic column of each constraint row. The
    entering column follows Bland's rule (smallest index with a negative
    reduced cost). The leaving row uses a Harris-style two-pass ratio test:
    pass one finds the step bound with a 1e-9 feasibility relaxation, pass
    two takes the numerically largest pivot element among rows within that
    bound (smallest basic column on ties). Degenerate noise rows therefore
    never force a pivot on a dust-sized element, which is what keeps
    near-parallel constraint rows from exploding the tableau; the bounded
    right-hand-side excursions are snapped back to zero after each pivot.
    Callers are expected to feed equilibrated rows so the tolerances are
    meaningful.

    Returns SIMPLEX_OPTIMAL, SIMPLEX_UNBOUNDED or SIMPLEX_MAXITER.
    """
    n_rows = T.shape[0]
    rhs = T.shape[1] - 1
    relax = 1e-9
    for _ in range(max_iter):
        enter = -1
        row0 = T[0]
        for j in range(rhs):
            if row0[j] < -tol:
                enter = j
                break
        if enter < 0:
            return SIMPLEX_OPTIMAL
        theta = np.inf
        for i in range(1, n_rows):
            a = T[i, enter]
            if a > tol:
                num = T[i, rhs]
                bound = ((num if num > 0.0 else 0.0) + relax) / a
                if bound < theta:
                    theta = bound
        if theta == np.inf:
            return SIMPLEX_UNBOUNDED
        leave = -1
        leave_pivot = 0.0
        for i in range(1, n_rows):
            a = T[i, enter]
            if a > tol:
                num = T[i, rhs]
                r = (num if num > 0.0 else 0.0) / a
                if r <= theta:
                    if a > leave_pivot or (a == leave_pivot and basis[i - 1] < basis[leave - 1]):
                        leave = i
                        leave_pivot = a
        pivot_row = T[leave] / T[leave, enter]
        T[leave] = pivot_row
        col = T[:, enter].copy()
        col[leave] = 0.0
        T -= np.outer(col, pivot_row)
        T[:, enter] = 0.0
        T[leave, enter] = 1.0
        basis[leave - 1] = enter
        for i in range(1, n_rows):
            if -1e-8 < T[i, rhs] < 0.0:
                T[i, rhs] = 0.0
    return SIMPLEX_MAXITER
