"""Conditional local false discovery rate diagnostics.

The local fdr at (t, x) is the bin null proportion over the fitted density,
pi0(bin) / f(t | bin). It diagnoses how a procedure balances its thresholds
across covariate bins and powers an oracle-style step-up procedure on the
lfdr scale. Unlike the censored cross-weighted procedures, nothing here
carries a finite-sample guarantee under model misspecification; treat the
output as descriptive.
"""

from dataclasses import dataclass

import numpy as np

from ihw.errors import InvalidLevel, LengthMismatch
from ihw.grenander import eval_density
from ihw.learner import ConditionalModel
from ihw.procedures import TestOutcome


@dataclass(frozen=True, eq=False)
class LfdrEstimate:
    """Per-hypothesis local fdr values in [0, +inf]; +inf where the fitted
    density vanishes, 0 where the density sentinel is infinite (t = 0)."""

    values: np.ndarray


def conditional_lfdr(model: ConditionalModel, pvalues, bin_labels) -> LfdrEstimate:
    """Evaluate pi0(bin) / f(p | bin) for every hypothesis."""
    p = np.asarray(pvalues, dtype=np.float64)
    labels = np.asarray(bin_labels, dtype=np.int64)
    if p.shape != labels.shape:
        raise LengthMismatch("p-values and bin labels differ in length")
    out = np.empty(p.shape)
    for j in range(1, model.n_bins + 1):
        mask = labels == j
        if not mask.any():
            continue
        dens = np.atleast_1d(eval_density(model.cdfs[j - 1], p[mask]))
        vals = np.empty(dens.shape)
        finite = np.isfinite(dens)
        positive = finite & (dens > 0)
        vals[positive] = model.pi0[j - 1] / dens[positive]
        vals[finite & (dens == 0.0)] = np.inf
        vals[~finite] = 0.0
        out[mask] = vals
    return LfdrEstimate(out)


def cfdr_procedure(lfdr: LfdrEstimate, alpha) -> TestOutcome:
    """Step-up procedure on sorted lfdr values.

    k* is the largest k whose k smallest lfdr values average to at most
    alpha; everything at or below the k*-th value is rejected. Because of
    ties the rejection count can exceed k*; the reported k_star is the
    actual count.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidLevel(f"alpha must lie in (0, 1), got {alpha!r}")
    values = np.asarray(lfdr.values, dtype=np.float64)
    m = values.shape[0]
    ordered = np.sort(values)
    with np.errstate(invalid="ignore"):
        running_means = np.cumsum(ordered) / np.arange(1, m + 1)
    running_means[~np.isfinite(ordered)] = np.inf
    hits = np.flatnonzero(running_means <= alpha)
    if hits.size == 0:
        rejected = np.zeros(m, dtype=bool)
        thresholds = np.full(m, -np.inf)
        return TestOutcome(rejected, 0, thresholds, "cfdr", {"alpha": alpha})
    cut = ordered[int(hits[-1])]
    rejected = values <= cut
    thresholds = np.full(m, cut)
    return TestOutcome(rejected, int(rejected.sum()), thresholds, "cfdr", {"alpha": alpha})
