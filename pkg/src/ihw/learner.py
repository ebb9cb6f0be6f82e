"""Learning the weighting function from held-out p-values.

The covariate is discretized into J bins; each bin gets a concave CDF
estimate from the held-out p-values, and per-bin rejection thresholds come
from a linear program that maximizes expected discoveries subject to the
plug-in false-discovery constraint. The thresholds double as raw weights
(normalization to mean one happens in :mod:`ihw.table`).

Regularization couples the per-bin thresholds: low total variation for
ordered (numeric) bins, low deviation from the mean for unordered
(categorical) bins. The regularization strength is picked by nested
cross-validation on the held-out folds, scoring each candidate by the
number of discoveries the implied weights produce and erring toward the
smaller (more regularizing) value on ties.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ihw import grenander, lp
from ihw.procedures import weighted_bh
from ihw.errors import (
    EmptyInput,
    InvalidConfig,
    InvalidLevel,
    LengthMismatch,
    NumericalFailure,
    TooManyBins,
)
from ihw.table import CATEGORICAL, HypothesisTable

ORDERED = "ordered"
UNORDERED = "unordered"

DEFAULT_LAMBDA_GRID: Tuple[float, ...] = tuple(np.geomspace(1e-3, 10.0, 7)) + (np.inf,)

MAX_AUTO_BINS = 40
MIN_PVALUES_PER_BIN = 1500


def default_n_bins(m: int) -> int:
    """Bin count heuristic: keep roughly 1500 p-values per CDF fit."""
    return min(max(m // MIN_PVALUES_PER_BIN, 1), MAX_AUTO_BINS)


@dataclass(frozen=True, eq=False)
class BinnedCovariate:
    """Discretized covariate: per-hypothesis bin in {1..J}."""

    J: int
    bin_of: np.ndarray
    bin_kind: str
    bin_edges: Optional[np.ndarray] = None
    levels: Optional[np.ndarray] = None


def bin_covariate(table: HypothesisTable, J: int) -> BinnedCovariate:
    """Quantile bins for numeric covariates, identity for categorical.

    Numeric edges sit at the empirical j/J quantiles; intervals are
    left-closed, so a value equal to an edge falls in the bin to its
    right. Categorical levels map to bins in sorted label order and J must
    equal the number of observed levels.
    """
    if not (isinstance(J, (int, np.integer)) and J >= 1):
        raise InvalidConfig(f"J must be a positive integer, got {J!r}")
    if table.covariate_kind == CATEGORICAL:
        levels, inverse = np.unique(table.covariates.astype(str), return_inverse=True)
        if J != levels.shape[0]:
            raise (TooManyBins if J > levels.shape[0] else InvalidConfig)(
                f"categorical covariate has {levels.shape[0]} levels, J={J}"
            )
        return BinnedCovariate(J, inverse.astype(np.int64) + 1, UNORDERED, levels=levels)
    x = table.covariates
    n_distinct = np.unique(x).shape[0]
    if J > n_distinct:
        raise TooManyBins(f"J={J} exceeds the {n_distinct} distinct covariate values")
    edges = np.quantile(x, np.arange(1, J) / J)
    bin_of = np.searchsorted(edges, x, side="right").astype(np.int64) + 1
    return BinnedCovariate(J, bin_of, ORDERED, bin_edges=edges)


@dataclass(frozen=True, eq=False)
class ConditionalModel:
    """Per-bin CDF estimates with bin null proportions and masses."""

    cdfs: Tuple[grenander.GrenanderCdf, ...]
    pi0: np.ndarray
    mass: np.ndarray
    pooled_fallback: np.ndarray

    @property
    def n_bins(self) -> int:
        return len(self.cdfs)


def estimate_conditional_model(
    pvalues,
    bin_labels,
    n_bins: int,
    mass_labels=None,
    censor_tau: Optional[float] = None,
) -> ConditionalModel:
    """Fit a concave CDF per bin from held-out p-values.

    ``mass_labels`` are the bin labels of the hypotheses the weights are
    for; their empirical distribution is the covariate measure of the
    model (defaults to ``bin_labels``). With ``censor_tau``, p-values at
    or below tau are set to 0 before fitting. A bin with no held-out
    p-values falls back to the pooled fit over all bins and is flagged.
    """
    p = np.asarray(pvalues, dtype=np.float64)
    labels = np.asarray(bin_labels, dtype=np.int64)
    if p.shape != labels.shape:
        raise LengthMismatch("p-values and bin labels differ in length")
    if p.size == 0:
        raise EmptyInput("cannot fit a conditional model without p-values")
    if censor_tau is not None:
        p = np.where(p <= censor_tau, 0.0, p)
    pooled = None
    cdfs = []
    fallback = np.zeros(n_bins, dtype=bool)
    for j in range(1, n_bins + 1):
        pj = p[labels == j]
        if pj.size == 0:
            if pooled is None:
                pooled = grenander.least_concave_majorant(grenander.ecdf(p))
            cdfs.append(pooled)
            fallback[j - 1] = True
        else:
            cdfs.append(grenander.least_concave_majorant(grenander.ecdf(pj)))
    mass_src = labels if mass_labels is None else np.asarray(mass_labels, dtype=np.int64)
    counts = np.bincount(mass_src, minlength=n_bins + 1)[1 : n_bins + 1].astype(np.float64)
    total = counts.sum()
    mass = counts / total if total > 0 else counts
    return ConditionalModel(tuple(cdfs), np.ones(n_bins), mass, fallback)


@dataclass(frozen=True, eq=False)
class ThresholdFunction:
    """One rejection threshold per covariate bin."""

    thresholds: np.ndarray

    def raw_weights_for(self, bin_labels) -> np.ndarray:
        return self.thresholds[np.asarray(bin_labels, dtype=np.int64) - 1]


@dataclass(frozen=True)
class LearnerConfig:
    """Knobs of the weight learner.

    ``lambda_grid`` entries are regularization budgets; ``inf`` means
    unregularized. ``n_bins=None`` derives J from the data size.
    """

    alpha: float
    n_bins: Optional[int] = None
    lambda_grid: Tuple[float, ...] = DEFAULT_LAMBDA_GRID
    k_inner: int = 5
    censor_tau: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidLevel(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.n_bins is not None and self.n_bins < 1:
            raise InvalidConfig("n_bins must be at least 1")
        if len(self.lambda_grid) == 0:
            raise InvalidConfig("lambda_grid must not be empty")
        if any(lam < 0 for lam in self.lambda_grid):
            raise InvalidConfig("lambda candidates must be nonnegative")
        if self.k_inner < 2:
            raise InvalidConfig("k_inner must be at least 2")
        if self.censor_tau is not None and not 0.0 < self.censor_tau < 1.0:
            raise InvalidLevel("censor_tau must lie in (0, 1)")


def build_threshold_lp(
    model: ConditionalModel, alpha: float, lam: float, bin_kind: str
) -> lp.LinearProgram:
    """Assemble the threshold-optimization LP.

    Variables are per-bin thresholds t_j in [0, 1] and epigraph variables
    z_j standing in for F_j(t_j): since each fitted CDF is concave
    piecewise-linear, z_j <= a*t_j + b over its segment lines is exact.
    The objective maximizes mass-weighted expected discoveries
    sum_j mass_j z_j subject to the plug-in false-discovery constraint
    sum_j mass_j (pi0_j t_j - alpha z_j) <= 0 and, for finite lambda, the
    total-variation (ordered) or deviation-from-mean (unordered)
    regularization budget lambda * sum_j mass_j t_j.
    """
    J = model.n_bins
    regularized = np.isfinite(lam) and J > 1
    if bin_kind not in (ORDERED, UNORDERED):
        raise InvalidConfig(f"unknown bin kind {bin_kind!r}")
    n_aux = 0 if not regularized else (J - 1 if bin_kind == ORDERED else J)
    n = 2 * J + n_aux

    def t(j):
        return j

    def z(j):
        return J + j

    def aux(j):
        return 2 * J + j

    objective = np.zeros(n)
    objective[J : 2 * J] = model.mass
    constraints = []
    for j in range(J):
        a, b = model.cdfs[j].support_lines()
        for s in range(a.shape[0]):
            row = np.zeros(n)
            row[z(j)] = 1.0
            row[t(j)] = -a[s]
            constraints.append((row, lp.LEQ, b[s]))
    fdr_row = np.zeros(n)
    fdr_row[:J] = model.mass * model.pi0
    fdr_row[J : 2 * J] = -alpha * model.mass
    constraints.append((fdr_row, lp.LEQ, 0.0))
    if regularized:
        if bin_kind == ORDERED:
            for j in range(J - 1):
                up = np.zeros(n)
                up[t(j + 1)] = 1.0
                up[t(j)] = -1.0
                up[aux(j)] = -1.0
                constraints.append((up, lp.LEQ, 0.0))
                down = np.zeros(n)
                down[t(j + 1)] = -1.0
                down[t(j)] = 1.0
                down[aux(j)] = -1.0
                constraints.append((down, lp.LEQ, 0.0))
        else:
            for j in range(J):
                up = np.zeros(n)
                up[: J] = -1.0 / J
                up[t(j)] += 1.0
                up[aux(j)] = -1.0
                constraints.append((up, lp.LEQ, 0.0))
                down = np.zeros(n)
                down[: J] = 1.0 / J
                down[t(j)] -= 1.0
                down[aux(j)] = -1.0
                constraints.append((down, lp.LEQ, 0.0))
        budget = np.zeros(n)
        budget[2 * J :] = 1.0
        budget[:J] = -lam * model.mass
        constraints.append((budget, lp.LEQ, 0.0))
    bounds = [(0.0, 1.0)] * (2 * J) + [(0.0, np.inf)] * n_aux
    return lp.LinearProgram.build(objective, constraints, bounds)


def solve_thresholds(
    model: ConditionalModel, alpha: float, lam: float, bin_kind: str
) -> Tuple[ThresholdFunction, float]:
    """Solve the threshold LP; returns the per-bin thresholds and objective."""
    program = build_threshold_lp(model, alpha, lam, bin_kind)
    solution = lp.solve_lp(program)
    if solution.status != lp.OPTIMAL:
        raise NumericalFailure(f"threshold LP unexpectedly {solution.status}")
    thresholds = np.clip(solution.primal[: model.n_bins], 0.0, 1.0)
    return ThresholdFunction(thresholds), float(solution.objective_value)


def _normalize_to_mean_one(raw: np.ndarray) -> np.ndarray:
    total = raw.sum()
    if total == 0.0:
        return np.ones_like(raw)
    return raw.size * raw / total


def _inner_folds(n: int, k: int, seed) -> np.ndarray:
    labels = np.arange(n, dtype=np.int64) % k
    return np.random.default_rng(seed).permutation(labels)


def learn_weight_function(
    heldout_pvalues,
    heldout_bins,
    bins: BinnedCovariate,
    config: LearnerConfig,
    inner_seed,
    mass_labels=None,
):
    """Learn per-bin raw weights from held-out p-values.

    For each candidate lambda, inner cross-validation fits the model on
    inner training splits and scores the implied weights by the number of
    weighted step-up discoveries on the inner held-out split (censored the
    same way the outer procedure is). Selection errs toward smaller lambda
    (more regularization): the smallest candidate whose mean score reaches
    the best score minus one standard error wins, so an uninformative
    covariate collapses to near-uniform weights instead of chasing CV
    noise. The winner is refit on all held-out p-values. If every
    candidate scores zero discoveries the learner returns uniform raw
    weights, so the downstream procedure reduces to its unweighted form.

    Returns (raw_weights_per_bin, diagnostics).
    """
    p = np.asarray(heldout_pvalues, dtype=np.float64)
    labels = np.asarray(heldout_bins, dtype=np.int64)
    if p.size == 0:
        raise EmptyInput("no held-out p-values to learn from")
    grid = _ordered_grid(config.lambda_grid)
    J = bins.J

    k_eff = min(config.k_inner, p.size)
    split_scores = np.zeros((k_eff, len(grid)))
    if k_eff >= 2:
        assignment = _inner_folds(p.size, k_eff, inner_seed)
        for s in range(k_eff):
            test = assignment == s
            train = ~test
            model = estimate_conditional_model(
                p[train],
                labels[train],
                J,
                mass_labels=labels[test],
                censor_tau=config.censor_tau,
            )
            for g, lam in enumerate(grid):
                thresholds, _ = solve_thresholds(model, config.alpha, lam, bins.bin_kind)
                w = _normalize_to_mean_one(thresholds.raw_weights_for(labels[test]))
                outcome = weighted_bh(
                    p[test], w, config.alpha, censor_tau=config.censor_tau
                )
                split_scores[s, g] = outcome.n_rejected
        scores = split_scores.mean(axis=0)
        if scores.max() <= 0.0:
            return np.ones(J), {
                "chosen_lambda": None,
                "lambda_scores": dict(zip(grid, scores)),
                "uniform_fallback": True,
            }
        best = int(np.argmax(scores))
        margin = float(split_scores[:, best].std(ddof=1)) / np.sqrt(k_eff)
        eligible = np.flatnonzero(scores >= scores[best] - margin)
        chosen = grid[int(eligible[0])]
    else:
        chosen = grid[0]
        scores = np.zeros(len(grid))
    model = estimate_conditional_model(
        p, labels, J, mass_labels=mass_labels, censor_tau=config.censor_tau
    )
    thresholds, _ = solve_thresholds(model, config.alpha, chosen, bins.bin_kind)
    return thresholds.thresholds, {
        "chosen_lambda": chosen,
        "lambda_scores": dict(zip(grid, scores)),
        "uniform_fallback": False,
        "pooled_fallback_bins": model.pooled_fallback,
    }


def _ordered_grid(grid) -> Tuple[float, ...]:
    """Candidates sorted ascending with the unregularized sentinel last."""
    vals = sorted(set(float(g) for g in grid))
    return tuple(vals)
