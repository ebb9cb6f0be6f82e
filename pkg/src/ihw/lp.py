"""Exact solver for small dense linear programs.

Two-phase primal simplex on a dense, row-equilibrated tableau (pivot
tolerance 1e-9): Bland's rule for the entering column, a Harris-style
stabilized ratio test for the leaving row, and a basis refactorization
before returning. The threshold-learning problems solved here have at most
a few hundred rows but mix constraint coefficients across eight orders of
magnitude, so exactness, determinism and conditioning matter more than
speed; the pivot loop itself runs in the selected kernel backend.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ihw import kernels
from ihw.errors import DimensionMismatch, NumericalFailure

LEQ = "<="
EQ = "="
GEQ = ">="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """max c.x subject to row constraints and per-variable bounds."""

    objective: np.ndarray
    constraint_matrix: np.ndarray
    relations: Tuple[str, ...]
    rhs: np.ndarray
    bounds: np.ndarray

    @classmethod
    def build(cls, objective, constraints: Sequence, bounds: Sequence) -> "LinearProgram":
        """Assemble from (coefficients, relation, rhs) triples."""
        c = np.asarray(objective, dtype=np.float64)
        n = c.shape[0]
        rows = []
        rels = []
        rhs = []
        for coeffs, rel, b in constraints:
            coeffs = np.asarray(coeffs, dtype=np.float64)
            if coeffs.shape != (n,):
                raise DimensionMismatch(f"constraint row of length {coeffs.shape}, expected {n}")
            if rel not in (LEQ, EQ, GEQ):
                raise DimensionMismatch(f"unknown relation {rel!r}")
            rows.append(coeffs)
            rels.append(rel)
            rhs.append(float(b))
        matrix = np.vstack(rows) if rows else np.empty((0, n))
        bounds_arr = np.asarray(
            [(float(lo), float(hi)) for lo, hi in bounds], dtype=np.float64
        )
        if bounds_arr.shape != (n, 2):
            raise DimensionMismatch(f"{bounds_arr.shape[0]} bounds for {n} variables")
        lp = cls(c, matrix, tuple(rels), np.asarray(rhs, dtype=np.float64), bounds_arr)
        lp._check()
        return lp

    def _check(self):
        n = self.objective.shape[0]
        if self.constraint_matrix.shape[1] != n:
            raise DimensionMismatch("constraint matrix width does not match objective")
        if not np.all(np.isfinite(self.objective)):
            raise DimensionMismatch("objective coefficients must be finite")
        if not np.all(np.isfinite(self.constraint_matrix)):
            raise DimensionMismatch("constraint coefficients must be finite")
        if not np.all(np.isfinite(self.rhs)):
            raise DimensionMismatch("right-hand sides must be finite")
        if np.any(np.isnan(self.bounds)):
            raise DimensionMismatch("bounds may be infinite but not NaN")

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    primal: Optional[np.ndarray]
    objective_value: Optional[float]


def _transform_to_standard(lp: LinearProgram):
    """Rewrite with all variables >= 0.

    Returns (A, b, relations, c, recover) where ``recover(xprime) -> x``
    maps the transformed solution back. Finite upper bounds become extra
    <= rows.
    """
    n = lp.n_vars
    col_kind = []  # (kind, data) per original variable
    n_cols = 0
    for j in range(n):
        lo, hi = lp.bounds[j]
        if hi < lo:
            return None  # trivially infeasible
        if np.isfinite(lo):
            col_kind.append(("shift", lo, hi))
            n_cols += 1
        elif np.isfinite(hi):
            col_kind.append(("mirror", hi, None))
            n_cols += 1
        else:
            col_kind.append(("free", None, None))
            n_cols += 2

    n_rows_extra = sum(
        1 for kind, lo, hi in col_kind if kind == "shift" and hi is not None and np.isfinite(hi)
    )
    m0 = lp.constraint_matrix.shape[0]
    A = np.zeros((m0 + n_rows_extra, n_cols))
    b = np.concatenate([lp.rhs, np.zeros(n_rows_extra)])
    rels = list(lp.relations) + [LEQ] * n_rows_extra
    c = np.zeros(n_cols)

    col = 0
    extra = m0
    starts = []
    for j, (kind, v1, v2) in enumerate(col_kind):
        starts.append(col)
        a_j = lp.constraint_matrix[:, j]
        if kind == "shift":
            A[:m0, col] = a_j
            b[:m0] -= a_j * v1
            c[col] = lp.objective[j]
            if v2 is not None and np.isfinite(v2):
                A[extra, col] = 1.0
                b[extra] = v2 - v1
                extra += 1
            col += 1
        elif kind == "mirror":
            A[:m0, col] = -a_j
            b[:m0] -= a_j * v1
            c[col] = -lp.objective[j]
            col += 1
        else:
            A[:m0, col] = a_j
            A[:m0, col + 1] = -a_j
            c[col] = lp.objective[j]
            c[col + 1] = -lp.objective[j]
            col += 2

    def recover(xp):
        x = np.empty(n)
        for j, (kind, v1, v2) in enumerate(col_kind):
            s = starts[j]
            if kind == "shift":
                x[j] = xp[s] + v1
            elif kind == "mirror":
                x[j] = v1 - xp[s]
            else:
                x[j] = xp[s] - xp[s + 1]
        return x

    return A, b, rels, c, recover


def _run_phase(T, basis, max_iter):
    status = kernels.simplex_core(T, basis, PIVOT_TOL, max_iter)
    if status == kernels.SIMPLEX_MAXITER:
        raise NumericalFailure("simplex iteration limit exhausted")
    return status


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve to optimality with a deterministic pivot order.

    Returns an optimal basic feasible solution when one exists; the primal
    is verified against every constraint within 1e-8 before returning.
    """
    lp._check()
    transformed = _transform_to_standard(lp)
    if transformed is None:
        return LpSolution(INFEASIBLE, None, None)
    A, b, rels, c, recover = transformed
    m, n = A.shape

    # equilibrate: unit max-abs coefficient per row keeps the tableau well
    # scaled when constraint coefficients span many orders of magnitude
    A = A.copy()
    b = b.copy()
    if m:
        row_scale = np.abs(A).max(axis=1)
        row_scale[row_scale == 0.0] = 1.0
        A /= row_scale[:, None]
        b /= row_scale

    # flip rows so right-hand sides are nonnegative
    flip = b < 0
    A[flip] *= -1.0
    b[flip] = -b[flip]
    rels = [
        {LEQ: GEQ, GEQ: LEQ, EQ: EQ}[r] if f else r for r, f in zip(rels, flip)
    ]

    n_slack = sum(1 for r in rels if r != EQ)
    n_art = sum(1 for r in rels if r != LEQ)
    width = n + n_slack + n_art
    T = np.zeros((m + 1, width + 1))
    T[1:, :n] = A
    T[1:, width] = b
    basis = np.empty(m, dtype=np.intp)
    s = n
    a = n + n_slack
    for i, r in enumerate(rels):
        if r == LEQ:
            T[i + 1, s] = 1.0
            basis[i] = s
            s += 1
        elif r == GEQ:
            T[i + 1, s] = -1.0
            T[i + 1, a] = 1.0
            basis[i] = a
            s += 1
            a += 1
        else:
            T[i + 1, a] = 1.0
            basis[i] = a
            a += 1

    max_iter = 10000 + 200 * (m + width)
    std_matrix = T[1:, : n + n_slack].copy()
    std_rhs = b.copy()
    std_keep = np.ones(m, dtype=bool)

    if n_art:
        # phase 1: minimize the artificial total
        T[0, :] = 0.0
        T[0, n + n_slack : width] = 1.0
        for i in range(m):
            if basis[i] >= n + n_slack:
                T[0, :] -= T[i + 1, :]
        status = _run_phase(T, basis, max_iter)
        if status == kernels.SIMPLEX_UNBOUNDED:
            raise NumericalFailure("phase-1 objective reported unbounded")
        if -T[0, width] > 1e-7:
            return LpSolution(INFEASIBLE, None, None)
        # drive leftover artificials out of the basis
        keep_rows = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= n + n_slack:
                row = T[i + 1]
                pivot_col = -1
                for j in range(n + n_slack):
                    if abs(row[j]) > PIVOT_TOL:
                        pivot_col = j
                        break
                if pivot_col < 0:
                    keep_rows[i] = False
                    continue
                piv = row[pivot_col]
                T[i + 1] = row / piv
                col_vals = T[:, pivot_col].copy()
                col_vals[i + 1] = 0.0
                T -= np.outer(col_vals, T[i + 1])
                T[:, pivot_col] = 0.0
                T[i + 1, pivot_col] = 1.0
                basis[i] = pivot_col
        if not np.all(keep_rows):
            T = np.vstack([T[:1], T[1:][keep_rows]])
            basis = basis[keep_rows]
            m = basis.shape[0]
            std_keep = keep_rows
        # hide artificial columns from phase 2
        T = np.hstack([T[:, : n + n_slack], T[:, width:]])
        width = n + n_slack

    # phase 2: minimize -c.x
    c2 = np.zeros(width)
    c2[:n] = -c
    T[0, :width] = c2
    T[0, width] = 0.0
    for i in range(m):
        cb = c2[basis[i]]
        if cb != 0.0:
            T[0, :] -= cb * T[i + 1, :]
    status = _run_phase(T, basis, max_iter)
    if status == kernels.SIMPLEX_UNBOUNDED:
        return LpSolution(UNBOUNDED, None, None)

    kept_matrix = std_matrix[std_keep]
    kept_rhs = std_rhs[std_keep]

    def residual(xp):
        return float(np.abs(kept_matrix @ xp - kept_rhs).max()) if kept_rhs.size else 0.0

    xp = np.zeros(width)
    xp[basis] = T[1:, width]
    # refactorize: re-solve the basic system from the pre-pivot standard-form
    # data, wiping the rounding drift a long pivot chain accumulates, and
    # keep whichever candidate satisfies the (equilibrated) rows better
    try:
        refined = np.linalg.solve(kept_matrix[:, basis], kept_rhs)
        if np.all(refined >= -1e-7):
            candidate = np.zeros(width)
            candidate[basis] = refined
            if residual(candidate) < residual(xp):
                xp = candidate
    except np.linalg.LinAlgError:
        pass
    x = recover(xp[:n])
    objective_value = float(lp.objective @ x)
    _verify_feasible(lp, x)
    return LpSolution(OPTIMAL, x, objective_value)


def _verify_feasible(lp: LinearProgram, x):
    """Check every constraint within 1e-8 on the row-normalized scale.

    Rows are measured relative to their largest coefficient (plus the
    right-hand side), the resolution a floating-point vertex can actually
    deliver when coefficients span many orders of magnitude.
    """
    lhs = lp.constraint_matrix @ x if lp.constraint_matrix.size else np.empty(0)
    for i, rel in enumerate(lp.relations):
        gap = lhs[i] - lp.rhs[i]
        row_norm = np.abs(lp.constraint_matrix[i]).max() if lp.constraint_matrix.size else 0.0
        scale = 1.0 + abs(lp.rhs[i]) + row_norm
        ok = (
            gap <= FEAS_TOL * scale
            if rel == LEQ
            else gap >= -FEAS_TOL * scale
            if rel == GEQ
            else abs(gap) <= FEAS_TOL * scale
        )
        if not ok:
            raise NumericalFailure(f"returned point violates constraint {i} by {gap!r}")
    lo = lp.bounds[:, 0]
    hi = lp.bounds[:, 1]
    if np.any(x < lo - FEAS_TOL) or np.any(x > hi + FEAS_TOL):
        raise NumericalFailure("returned point violates a variable bound")
