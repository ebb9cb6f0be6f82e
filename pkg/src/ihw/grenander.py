"""Shape-constrained distribution estimation on [0, 1].

The estimator of the conditional p-value distribution is the least concave
majorant (LCM) of the empirical CDF, computed exactly as the upper convex
hull of the ECDF vertices. Its left derivative is the maximum-likelihood
nonincreasing density.

Censoring can map p-values to exactly 0, which puts an atom at the origin;
the fitted CDF then starts at ``mass_at_zero`` instead of 0 and the density
at 0 is the ``+inf`` sentinel.
"""

from dataclasses import dataclass, field

import numpy as np

from ihw import kernels
from ihw.errors import EmptyInput, LengthMismatch, NonpositiveWeight, OutOfDomain, ValidationError


@dataclass(frozen=True, eq=False)
class StepEcdf:
    """Right-continuous empirical CDF: jump points (ties merged) and sizes."""

    points: np.ndarray
    jumps: np.ndarray

    def __post_init__(self):
        if self.points.shape != self.jumps.shape:
            raise LengthMismatch("points and jumps differ in length")
        object.__setattr__(self, "heights", np.cumsum(self.jumps))

    heights: np.ndarray = field(init=False, repr=False)

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    def evaluate(self, t):
        """ECDF value at ``t`` (right-continuous)."""
        idx = np.searchsorted(self.points, t, side="right")
        heights = np.concatenate(([0.0], self.heights))
        return heights[idx]


def ecdf(pvalues) -> StepEcdf:
    """Empirical CDF of values in [0, 1] with tied values merged."""
    p = np.asarray(pvalues, dtype=np.float64)
    if p.size == 0:
        raise EmptyInput("ecdf of an empty sample")
    if np.any(np.isnan(p)) or p.min() < 0.0 or p.max() > 1.0:
        raise OutOfDomain("ecdf input must lie in [0, 1]")
    points, counts = np.unique(p, return_counts=True)
    return StepEcdf(points, counts / p.size)


def pava_decreasing(values, block_weights) -> np.ndarray:
    """Weighted least-squares projection onto the nonincreasing cone.

    Pooled adjacent blocks carry their weighted mean.
    """
    y = np.asarray(values, dtype=np.float64)
    w = np.asarray(block_weights, dtype=np.float64)
    if y.shape != w.shape or y.ndim != 1:
        raise LengthMismatch("values and block_weights must be 1-d and equal length")
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise NonpositiveWeight("block weights must be finite and positive")
    if y.size == 0:
        raise EmptyInput("pava of an empty sequence")
    return kernels.pava_decreasing(y, w)


@dataclass(frozen=True, eq=False)
class GrenanderCdf:
    """Piecewise-linear concave CDF: knots on [0, 1] and per-segment slopes.

    ``mass_at_zero`` is the atom at the origin (0 for ordinary fits); the
    CDF value at knot i is ``mass_at_zero + sum(slopes * knot gaps)`` up
    to i. Construction checks the shape constraints (concavity, domain);
    :meth:`validate` additionally checks that the total mass is one, which
    holds for every fitted estimator but not necessarily for hand-built
    test objects.
    """

    knots: np.ndarray
    slopes: np.ndarray
    mass_at_zero: float = 0.0

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=np.float64)
        slopes = np.asarray(self.slopes, dtype=np.float64)
        if knots.ndim != 1 or slopes.shape != (knots.shape[0] - 1,):
            raise LengthMismatch("need one slope per knot gap")
        if knots[0] != 0.0 or knots[-1] != 1.0 or np.any(np.diff(knots) <= 0):
            raise ValidationError("knots must increase strictly from 0 to 1")
        scale = 1e-9 * (1.0 + (slopes.max() if slopes.size else 0.0))
        if np.any(slopes < -scale) or np.any(np.diff(slopes) > scale):
            raise ValidationError("slopes must be nonnegative and nonincreasing")
        # absorb float dust from chord arithmetic so the invariants are exact
        slopes = np.minimum.accumulate(np.maximum(slopes, 0.0))
        if not 0.0 <= self.mass_at_zero <= 1.0:
            raise ValidationError("mass_at_zero must lie in [0, 1]")
        heights = np.concatenate(
            ([self.mass_at_zero], self.mass_at_zero + np.cumsum(slopes * np.diff(knots)))
        )
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "heights", heights)

    heights: np.ndarray = field(init=False, repr=False)

    @property
    def n_segments(self) -> int:
        return self.slopes.shape[0]

    def validate(self) -> "GrenanderCdf":
        if abs(self.heights[-1] - 1.0) > 1e-10:
            raise ValidationError(f"total mass is {self.heights[-1]!r}, expected 1")
        return self

    def support_lines(self):
        """Coefficients (a, b) of the segment lines z = a*t + b.

        Because the CDF is concave, it equals the pointwise minimum of
        these lines over [0, 1]; they are the epigraph cuts used by the
        threshold LP.
        """
        a = self.slopes
        b = self.heights[:-1] - a * self.knots[:-1]
        return a, b


def identity_cdf() -> GrenanderCdf:
    """The uniform CDF G(t) = t."""
    return GrenanderCdf(np.array([0.0, 1.0]), np.array([1.0]))


def least_concave_majorant(e: StepEcdf) -> GrenanderCdf:
    """Exact least concave majorant of a StepEcdf over [0, 1].

    Computed as the upper convex hull of the ECDF vertices (0, 0),
    (p_(j), ECDF(p_(j))), (1, 1); collinear vertices are merged so the
    returned slopes are strictly decreasing. A jump at p = 0 becomes the
    atom ``mass_at_zero``.
    """
    points = e.points
    heights = e.heights
    if points[0] == 0.0:
        mass_at_zero = float(e.jumps[0])
        xs = [points]
        ys = [heights]
    else:
        mass_at_zero = 0.0
        xs = [np.array([0.0]), points]
        ys = [np.array([0.0]), heights]
    if points[-1] < 1.0:
        xs.append(np.array([1.0]))
        ys.append(np.array([1.0]))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    hull = kernels.upper_hull_indices(x, y)
    knots = x[hull]
    hull_heights = y[hull]
    slopes = np.minimum.accumulate(
        np.maximum(np.diff(hull_heights) / np.diff(knots), 0.0)
    )
    # rounding can leave adjacent chords with equal slope; merge those runs
    # so the returned segments have strictly decreasing slopes
    run_starts = np.flatnonzero(np.concatenate(([True], slopes[1:] != slopes[:-1])))
    if run_starts.shape[0] < slopes.shape[0]:
        run_ends = np.append(run_starts[1:], slopes.shape[0])
        knots = np.concatenate(([knots[0]], knots[run_ends]))
        slopes = slopes[run_starts]
    return GrenanderCdf(knots, slopes, mass_at_zero=mass_at_zero).validate()


def eval_cdf(g: GrenanderCdf, t):
    """CDF value by linear interpolation on the segments."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(np.isnan(t)) or np.any(t < 0.0) or np.any(t > 1.0):
        raise OutOfDomain("cdf argument must lie in [0, 1]")
    out = np.interp(t, g.knots, g.heights)
    return float(out) if out.ndim == 0 else out


def eval_density(g: GrenanderCdf, t):
    """Left-derivative of the CDF at ``t``; +inf sentinel at t = 0.

    This is the maximum-likelihood nonincreasing density of the fitted
    distribution (the atom at zero also evaluates to the sentinel).
    """
    t = np.asarray(t, dtype=np.float64)
    if np.any(np.isnan(t)) or np.any(t < 0.0) or np.any(t > 1.0):
        raise OutOfDomain("density argument must lie in [0, 1]")
    idx = np.searchsorted(g.knots, t, side="left")
    padded = np.concatenate(([np.inf], g.slopes))
    out = padded[idx]
    return float(out) if out.ndim == 0 else out
