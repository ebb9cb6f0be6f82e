"""End-to-end orchestration of cross-weighted testing.

For each fold, a weighting function is learned from the p-values of the
other folds (censored for the ihwc variants) together with all covariates,
normalized to mean one within the fold, and the configured weighted
procedure is applied to all hypotheses jointly. With B > 1 random splits,
the per-split weights are averaged and only procedures that need the
global weight budget accept the result.

Guarantee summary (finite-sample, given the fold-independence assumption):
bonferroni/k_bonferroni/holm control the FWER and by controls the FDR
under arbitrary within-fold dependence; sidak adds within-fold
independence; ihwc and ihwc_storey control the FDR under full
independence. Plain bh with this learner has no finite-sample proof and
is provided for power comparisons.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from ihw.errors import ConfigMismatch, InvalidConfig, InvalidLevel
from ihw.learner import (
    BinnedCovariate,
    LearnerConfig,
    bin_covariate,
    default_n_bins,
    learn_weight_function,
)
from ihw.procedures import (
    ReshapingFunction,
    TestOutcome,
    k_bonferroni,
    storey_pi0,
    weighted_bh,
    weighted_bonferroni,
    weighted_holm,
    weighted_sidak,
)
from ihw.table import (
    RANDOM,
    USER_SUPPLIED,
    FoldPartition,
    HypothesisTable,
    WeightVector,
    normalize_weights,
    split_folds,
)

PROCEDURES = ("bonferroni", "k_bonferroni", "holm", "sidak", "bh", "by", "ihwc", "ihwc_storey")
#: procedures that need only the global weight budget (safe with averaged weights)
GLOBAL_BUDGET_PROCEDURES = ("bonferroni", "k_bonferroni", "bh", "by", "ihwc")
CENSORED_PROCEDURES = ("ihwc", "ihwc_storey")
FOLD_AWARE_PROCEDURES = ("holm", "sidak")

DEFAULT_TAU = 1e-4
DEFAULT_TAU_PRIME = 0.5


@dataclass(frozen=True)
class IhwConfig:
    """Run configuration: level, procedure, folds, splits, learner knobs."""

    alpha: float
    procedure: str = "bh"
    K: int = 5
    fold_strategy: str = RANDOM
    seed: int = 0
    B: int = 1
    k: int = 1
    tau: Optional[float] = None
    tau_prime: Optional[float] = None
    learner: Optional[LearnerConfig] = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidLevel(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.procedure not in PROCEDURES:
            raise InvalidConfig(f"unknown procedure {self.procedure!r}")
        if self.fold_strategy not in (RANDOM, USER_SUPPLIED):
            raise InvalidConfig(f"unknown fold strategy {self.fold_strategy!r}")
        if self.B < 1:
            raise InvalidConfig("B must be at least 1")
        if self.B > 1 and self.fold_strategy != RANDOM:
            raise ConfigMismatch("B > 1 requires random fold splitting")
        if self.B > 1 and self.procedure not in GLOBAL_BUDGET_PROCEDURES:
            raise ConfigMismatch(
                f"{self.procedure} needs a single fold partition; rerun with B=1"
            )
        if self.procedure == "k_bonferroni":
            if self.k < 1:
                raise InvalidLevel("k must be at least 1")
            if self.k * self.alpha >= 1.0:
                raise InvalidLevel("k * alpha must stay below 1")
        if self.procedure in CENSORED_PROCEDURES:
            tau = self.tau if self.tau is not None else DEFAULT_TAU
            if not 0.0 < tau < 1.0:
                raise InvalidLevel(f"tau must lie in (0, 1), got {tau!r}")
        elif self.tau is not None:
            raise ConfigMismatch(f"{self.procedure} does not censor; drop tau")
        if self.procedure == "ihwc_storey":
            tp = self.tau_prime if self.tau_prime is not None else DEFAULT_TAU_PRIME
            if not self.effective_tau <= tp < 1.0:
                raise InvalidLevel(
                    f"tau_prime must lie in [tau, 1), got {tp!r} with tau {self.effective_tau}"
                )
        elif self.tau_prime is not None:
            raise ConfigMismatch("tau_prime only applies to ihwc_storey")

    @property
    def effective_tau(self) -> Optional[float]:
        if self.procedure not in CENSORED_PROCEDURES:
            return None
        return self.tau if self.tau is not None else DEFAULT_TAU

    @property
    def effective_tau_prime(self) -> Optional[float]:
        if self.procedure != "ihwc_storey":
            return None
        return self.tau_prime if self.tau_prime is not None else DEFAULT_TAU_PRIME

    def resolve_learner(self, m: int) -> LearnerConfig:
        base = self.learner
        if base is None:
            base = LearnerConfig(alpha=self.alpha)
        cfg = replace(base, alpha=self.alpha, censor_tau=self.effective_tau)
        if cfg.n_bins is None:
            cfg = replace(cfg, n_bins=default_n_bins(m))
        return cfg


@dataclass(frozen=True, eq=False)
class IhwResult:
    """Learned weights, the test outcome, and per-fold diagnostics.

    ``weights`` are the cross-fitted weights fed to the procedure (per-fold
    mean one for B = 1; for B > 1 the average over splits, which keeps only
    the global budget sum(W) = m). ``weight_vector`` carries the fold
    partition for single-split runs.
    """

    weights: np.ndarray
    outcome: TestOutcome
    per_fold_thresholds: Tuple[np.ndarray, ...]
    weight_vector: Optional[WeightVector]
    partition: Optional[FoldPartition]
    diagnostics: dict = field(repr=False)

    @property
    def n_rejected(self) -> int:
        return self.outcome.n_rejected


def _split_seed(seed: int, b: int):
    return (int(seed), int(b))


def _learn_split(table, bins: BinnedCovariate, config: IhwConfig, b: int):
    """Learn normalized weights for one random-or-user split."""
    if config.fold_strategy == USER_SUPPLIED:
        partition = split_folds(table, config.K, USER_SUPPLIED)
    else:
        partition = split_folds(table, config.K, RANDOM, seed=_split_seed(config.seed, b))
    lcfg = config.resolve_learner(table.m)
    tau = config.effective_tau
    pvalues = table.pvalues
    if tau is not None:
        learn_p = np.where(pvalues <= tau, 0.0, pvalues)
    else:
        learn_p = pvalues
    raw = np.empty(table.m)
    fold_thresholds = np.empty((partition.K, bins.J))
    fold_diag = []
    for k in range(1, partition.K + 1):
        target = partition.indices(k)
        held = np.flatnonzero(partition.assignments != k)
        raw_bins, diag = learn_weight_function(
            learn_p[held],
            bins.bin_of[held],
            bins,
            lcfg,
            inner_seed=(int(config.seed), int(b), int(k)),
            mass_labels=bins.bin_of[target],
        )
        fold_thresholds[k - 1] = raw_bins
        raw[target] = raw_bins[bins.bin_of[target] - 1]
        fold_diag.append(diag)
    weights = normalize_weights(raw, partition)
    return weights, partition, fold_thresholds, fold_diag


def _apply_procedure(table, weights, partition, config: IhwConfig):
    p = table.pvalues
    alpha = config.alpha
    proc = config.procedure
    storey_estimates = None
    if proc == "bonferroni":
        outcome = weighted_bonferroni(p, weights, alpha)
    elif proc == "k_bonferroni":
        outcome = k_bonferroni(p, weights, alpha, config.k)
    elif proc == "holm":
        outcome = weighted_holm(p, weights, alpha, partition)
    elif proc == "sidak":
        outcome = weighted_sidak(p, weights, alpha, partition)
    elif proc == "bh":
        outcome = weighted_bh(p, weights, alpha)
    elif proc == "by":
        outcome = weighted_bh(p, weights, alpha, ReshapingFunction.harmonic(table.m))
    elif proc == "ihwc":
        outcome = weighted_bh(p, weights, alpha, censor_tau=config.effective_tau)
    elif proc == "ihwc_storey":
        tp = config.effective_tau_prime
        storey_estimates = np.empty(partition.K)
        rescaled = weights.copy()
        for k in range(1, partition.K + 1):
            idx = partition.indices(k)
            storey_estimates[k - 1] = storey_pi0(p[idx], weights[idx], tp)
            rescaled[idx] = weights[idx] / storey_estimates[k - 1]
        outcome = weighted_bh(p, rescaled, alpha, censor_tau=config.effective_tau)
    else:  # pragma: no cover - guarded by IhwConfig
        raise InvalidConfig(proc)
    return outcome, storey_estimates


def run_ihw(table: HypothesisTable, config: IhwConfig) -> IhwResult:
    """Cross-weighted testing end to end; deterministic given the config seed."""
    lcfg = config.resolve_learner(table.m)
    bins = bin_covariate(table, _effective_bins(table, config, lcfg))
    all_thresholds = []
    all_diag = []
    weight_rows = np.empty((config.B, table.m))
    partition = None
    weight_vector = None
    for b in range(config.B):
        wv, partition, fold_thresholds, fold_diag = _learn_split(table, bins, config, b)
        weight_rows[b] = wv.weights
        weight_vector = wv
        all_thresholds.append(fold_thresholds)
        all_diag.append(fold_diag)
    if config.B == 1:
        weights = weight_rows[0]
    else:
        weights = weight_rows.mean(axis=0)
        weight_vector = None
        partition = None
        budget_gap = abs(weights.sum() - table.m)
        if budget_gap > 1e-8 * table.m:
            raise InvalidConfig(f"averaged weights sum to {weights.sum()!r}, expected {table.m}")
    outcome, storey_estimates = _apply_procedure(table, weights, partition, config)
    diagnostics = {
        "bins": bins,
        "chosen_lambda": [[d["chosen_lambda"] for d in split] for split in all_diag],
        "uniform_fallback": [[d["uniform_fallback"] for d in split] for split in all_diag],
        "censor_tau": config.effective_tau,
        "storey_pi0": storey_estimates,
        "learner": lcfg,
        "fold_diagnostics": all_diag,
    }
    return IhwResult(
        weights,
        outcome,
        tuple(all_thresholds),
        weight_vector,
        partition,
        diagnostics,
    )


def _effective_bins(table: HypothesisTable, config: IhwConfig, lcfg: LearnerConfig) -> int:
    """J for the run: level count for categorical; for numeric, the
    configured J, clamped to the distinct-value count when J was derived
    automatically."""
    if table.covariate_kind == "categorical":
        return np.unique(table.covariates.astype(str)).shape[0]
    user_set = config.learner is not None and config.learner.n_bins is not None
    if user_set:
        return lcfg.n_bins
    n_distinct = np.unique(table.covariates).shape[0]
    return min(lcfg.n_bins, n_distinct)


def average_weights_over_splits(table: HypothesisTable, config: IhwConfig) -> np.ndarray:
    """Mean weights over B > 1 random splits; only the global budget holds."""
    if config.B < 2:
        raise ConfigMismatch("averaging needs B > 1")
    if config.fold_strategy != RANDOM:
        raise ConfigMismatch("averaging needs random fold splitting")
    lcfg = config.resolve_learner(table.m)
    bins = bin_covariate(table, _effective_bins(table, config, lcfg))
    rows = np.empty((config.B, table.m))
    for b in range(config.B):
        wv, _, _, _ = _learn_split(table, bins, config, b)
        rows[b] = wv.weights
    weights = rows.mean(axis=0)
    gap = abs(weights.sum() - table.m)
    if gap > 1e-8 * table.m:
        raise InvalidConfig(f"averaged weights sum to {weights.sum()!r}, expected {table.m}")
    return weights
