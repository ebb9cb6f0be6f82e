"""Weighted multiple-testing procedures.

Conventions for weighted p-values Q_i = P_i / W_i: Q_i = +inf when W_i = 0
and P_i > 0 (never rejected), and Q_i = 0 when P_i = 0 (rejectable even at
weight zero). Unweighted procedures are the W = 1 specialization and have
no separate code path.

The fold-aware procedures (Holm, Sidak) run independently per fold l at the
local level alpha * |I_l| / m and require weights normalized to mean one
within each fold; the step-up family (BH/BY, censored or not) only needs
the global budget sum(W) = m.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ihw.errors import (
    EmptyInput,
    InvalidConfig,
    InvalidLevel,
    InvalidTauPrime,
    LengthMismatch,
    PValueOutOfRange,
)
from ihw.table import FoldPartition

IDENTITY = "identity"
HARMONIC = "harmonic"


@dataclass(frozen=True, eq=False)
class TestOutcome:
    """Rejections plus the per-hypothesis thresholds that produced them."""

    rejected: np.ndarray
    k_star: int
    thresholds: np.ndarray
    procedure_id: str
    parameters: dict

    @property
    def n_rejected(self) -> int:
        return int(self.rejected.sum())


@dataclass(frozen=True)
class ReshapingFunction:
    """Transform of the rejection count used by the step-up threshold.

    ``identity`` gives the plain step-up procedure; ``harmonic`` divides by
    the m-th harmonic number, which buys validity under arbitrary
    dependence.
    """

    kind: str
    m: int

    def __post_init__(self):
        if self.kind not in (IDENTITY, HARMONIC):
            raise InvalidConfig(f"unknown reshaping kind {self.kind!r}")
        harmonic_sum = float(np.sum(1.0 / np.arange(1, self.m + 1))) if self.m else 1.0
        object.__setattr__(self, "_harmonic_sum", harmonic_sum)

    @classmethod
    def identity(cls, m: int) -> "ReshapingFunction":
        return cls(IDENTITY, m)

    @classmethod
    def harmonic(cls, m: int) -> "ReshapingFunction":
        return cls(HARMONIC, m)

    @property
    def harmonic_sum(self) -> float:
        return self._harmonic_sum

    def beta(self, r):
        r = np.asarray(r, dtype=np.float64)
        out = r if self.kind == IDENTITY else r / self._harmonic_sum
        return float(out) if out.ndim == 0 else out


def _check_level(alpha):
    if not (isinstance(alpha, (int, float)) and 0.0 < alpha < 1.0):
        raise InvalidLevel(f"alpha must lie in (0, 1), got {alpha!r}")


def _check_inputs(pvalues, weights):
    p = np.asarray(pvalues, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if p.shape != w.shape or p.ndim != 1:
        raise LengthMismatch("p-values and weights must be 1-d and equal length")
    if p.size == 0:
        raise EmptyInput("no hypotheses")
    if np.any(np.isnan(p)) or p.min() < 0.0 or p.max() > 1.0:
        bad = int(np.flatnonzero(np.isnan(p) | (p < 0) | (p > 1))[0])
        raise PValueOutOfRange(bad, float(p[bad]))
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        raise LengthMismatch("weights must be finite and nonnegative")
    return p, w


def weighted_pvalues(pvalues, weights) -> np.ndarray:
    """Q = P/W with Q = +inf for (W=0, P>0) and Q = 0 for P = 0."""
    p, w = _check_inputs(pvalues, weights)
    out = np.full(p.shape, np.inf)
    np.divide(p, w, out=out, where=w > 0)
    out[p == 0.0] = 0.0
    return out


def _check_fold_normalization(w, partition):
    for k in range(1, partition.K + 1):
        idx = partition.indices(k)
        mean = w[idx].mean()
        if abs(mean - 1.0) > 1e-8:
            raise InvalidConfig(
                f"fold {k} weights have mean {mean!r}; fold-aware procedures "
                "need per-fold normalization"
            )


def weighted_bonferroni(pvalues, weights, alpha) -> TestOutcome:
    """Reject where P_i <= alpha * W_i / m."""
    p, w = _check_inputs(pvalues, weights)
    _check_level(alpha)
    thresholds = alpha * w / p.size
    rejected = p <= thresholds
    return TestOutcome(rejected, int(rejected.sum()), thresholds, "bonferroni", {"alpha": alpha})


def k_bonferroni(pvalues, weights, alpha, k: int) -> TestOutcome:
    """Weighted Bonferroni at level k * alpha (controls the k-FWER)."""
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise InvalidLevel(f"k must be a positive integer, got {k!r}")
    _check_level(alpha)
    if k * alpha >= 1.0:
        raise InvalidLevel(f"k * alpha = {k * alpha} must stay below 1")
    out = weighted_bonferroni(pvalues, weights, k * alpha)
    return TestOutcome(
        out.rejected, out.k_star, out.thresholds, "k_bonferroni", {"alpha": alpha, "k": int(k)}
    )


def weighted_holm(pvalues, weights, alpha, partition: FoldPartition) -> TestOutcome:
    """Fold-aware weighted Holm step-down.

    Each fold l runs weighted Holm at level alpha * |I_l| / m: sort the
    weighted p-values Q, compare Q_(i) against the local level over the
    trailing weight sum, stop at the first failure, and reject by the
    Q-threshold reached (ties rejected together).
    """
    p, w = _check_inputs(pvalues, weights)
    _check_level(alpha)
    if p.shape[0] != partition.m:
        raise LengthMismatch("partition does not match the number of hypotheses")
    _check_fold_normalization(w, partition)
    m = p.size
    rejected = np.zeros(m, dtype=bool)
    thresholds = np.zeros(m)
    for k in range(1, partition.K + 1):
        idx = partition.indices(k)
        alpha_l = alpha * idx.size / m
        q = weighted_pvalues(p[idx], w[idx])
        order = np.argsort(q, kind="stable")
        q_sorted = q[order]
        trailing = np.cumsum(w[idx][order][::-1])[::-1]
        with np.errstate(divide="ignore"):
            crit = np.where(trailing > 0, alpha_l / trailing, np.inf)
        ok = (q_sorted <= crit) & np.isfinite(q_sorted)
        k_star = int(np.argmin(ok)) if not ok.all() else idx.size
        if k_star > 0:
            q_cut = q_sorted[k_star - 1]
            fold_thr = q_cut * w[idx]
            fold_thr[w[idx] == 0.0] = 0.0
            rejected[idx] = q <= q_cut
            thresholds[idx] = fold_thr
    return TestOutcome(
        rejected, int(rejected.sum()), thresholds, "holm", {"alpha": alpha}
    )


def weighted_sidak(pvalues, weights, alpha, partition: FoldPartition) -> TestOutcome:
    """Fold-aware weighted Sidak: P_i <= 1 - (1 - alpha_l)^(W_i / |I_l|).

    Valid under within-fold independence of the null p-values (documented
    assumption, not checked). For weights up to the fold size the
    per-hypothesis threshold dominates the Bonferroni one; beyond that the
    exponential form can fall below it, a regime exercised only by very
    concentrated weight vectors.
    """
    p, w = _check_inputs(pvalues, weights)
    _check_level(alpha)
    if p.shape[0] != partition.m:
        raise LengthMismatch("partition does not match the number of hypotheses")
    _check_fold_normalization(w, partition)
    m = p.size
    thresholds = np.empty(m)
    for k in range(1, partition.K + 1):
        idx = partition.indices(k)
        alpha_l = alpha * idx.size / m
        thresholds[idx] = 1.0 - np.power(1.0 - alpha_l, w[idx] / idx.size)
    rejected = p <= thresholds
    return TestOutcome(rejected, int(rejected.sum()), thresholds, "sidak", {"alpha": alpha})


def weighted_bh(
    pvalues,
    weights,
    alpha,
    reshaping: Optional[ReshapingFunction] = None,
    censor_tau: Optional[float] = None,
) -> TestOutcome:
    """Weighted step-up procedure with optional reshaping and censoring.

    k* is the largest k such that at least k hypotheses satisfy
    P_i <= (alpha * W_i * beta(k) / m) ^ tau; everything at or below the
    k* threshold is rejected. With censoring, no hypothesis with
    P_i > tau is ever rejected. beta = identity gives BH; beta = harmonic
    gives BY.

    The scan sorts the effective statistic m * P / (alpha * W) once; the
    exhaustive definition of k* is kept as a test oracle.
    """
    p, w = _check_inputs(pvalues, weights)
    _check_level(alpha)
    m = p.size
    if reshaping is None:
        reshaping = ReshapingFunction.identity(m)
    if reshaping.m != m:
        raise LengthMismatch(f"reshaping function sized for m={reshaping.m}, data has m={m}")
    if censor_tau is None:
        tau = 1.0
    else:
        if not 0.0 < censor_tau < 1.0:
            raise InvalidLevel(f"censoring threshold must lie in (0, 1), got {censor_tau!r}")
        tau = float(censor_tau)

    with np.errstate(divide="ignore", invalid="ignore"):
        effective = np.where(w > 0, m * p / (alpha * w), np.inf)
    effective[p == 0.0] = 0.0
    effective = np.where(p <= tau, effective, np.inf)
    effective_sorted = np.sort(effective)
    betas = reshaping.beta(np.arange(1, m + 1))
    hits = np.flatnonzero(effective_sorted <= betas)
    k_star = int(hits[-1]) + 1 if hits.size else 0

    beta_k = reshaping.beta(k_star) if k_star else 0.0
    thresholds = np.minimum(alpha * w * beta_k / m, tau)
    rejected = p <= thresholds
    return TestOutcome(
        rejected,
        k_star,
        thresholds,
        "bh" if reshaping.kind == IDENTITY else "by",
        {"alpha": alpha, "reshaping": reshaping.kind, "censor_tau": censor_tau},
    )


def storey_pi0(pvalues_fold, weights_fold, tau_prime) -> float:
    """Weighted Storey-type null-proportion estimate for one fold.

    (max_i W_i + sum_i W_i 1{P_i > tau'}) / (|I_l| (1 - tau')); upward
    biased by construction, which is what makes weight inflation by
    1 / pi0_hat safe.
    """
    p, w = _check_inputs(pvalues_fold, weights_fold)
    if not (isinstance(tau_prime, (int, float)) and 0.0 < tau_prime < 1.0):
        raise InvalidTauPrime(f"tau_prime must lie in (0, 1), got {tau_prime!r}")
    return float((w.max() + w[p > tau_prime].sum()) / (p.size * (1.0 - tau_prime)))
