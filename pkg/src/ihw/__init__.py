"""Covariate-weighted multiple hypothesis testing.

Per-hypothesis weights are learned from a side-information covariate by
cross-fold estimation of the conditional p-value distribution, then plugged
into weighted Bonferroni / Holm / Sidak / BH / BY / censored-BH / Storey
procedures. Cross-weighting keeps each weight independent of its own
p-value, which is what preserves the finite-sample error guarantees.

Typical use::

    from ihw import HypothesisTable, IhwConfig, run_ihw

    table = HypothesisTable.from_arrays(pvalues, covariates)
    result = run_ihw(table, IhwConfig(alpha=0.1, procedure="bh"))
    result.outcome.rejected
"""

from ihw.engine import IhwConfig, IhwResult, average_weights_over_splits, run_ihw
from ihw.grenander import (
    GrenanderCdf,
    StepEcdf,
    ecdf,
    eval_cdf,
    eval_density,
    least_concave_majorant,
    pava_decreasing,
)
from ihw.learner import (
    BinnedCovariate,
    ConditionalModel,
    LearnerConfig,
    ThresholdFunction,
    bin_covariate,
    build_threshold_lp,
    estimate_conditional_model,
    learn_weight_function,
)
from ihw.lfdr import LfdrEstimate, cfdr_procedure, conditional_lfdr
from ihw.lp import LinearProgram, LpSolution, solve_lp
from ihw.procedures import (
    ReshapingFunction,
    TestOutcome,
    k_bonferroni,
    storey_pi0,
    weighted_bh,
    weighted_bonferroni,
    weighted_holm,
    weighted_pvalues,
    weighted_sidak,
)
from ihw.simulate import (
    ErrorReport,
    Scenario,
    counterexample_analytic_fwer,
    counterexample_naive_weighting,
    estimate_error_rates,
    generate_replicate,
    load_scenario,
    make_method,
)
from ihw.table import (
    FoldPartition,
    HypothesisTable,
    WeightVector,
    normalize_weights,
    split_folds,
    validate_table,
)

__version__ = "0.1.0"

__all__ = [
    "BinnedCovariate",
    "ConditionalModel",
    "ErrorReport",
    "FoldPartition",
    "GrenanderCdf",
    "HypothesisTable",
    "IhwConfig",
    "IhwResult",
    "LearnerConfig",
    "LfdrEstimate",
    "LinearProgram",
    "LpSolution",
    "ReshapingFunction",
    "Scenario",
    "StepEcdf",
    "TestOutcome",
    "ThresholdFunction",
    "WeightVector",
    "average_weights_over_splits",
    "bin_covariate",
    "build_threshold_lp",
    "cfdr_procedure",
    "conditional_lfdr",
    "counterexample_analytic_fwer",
    "counterexample_naive_weighting",
    "ecdf",
    "estimate_conditional_model",
    "estimate_error_rates",
    "eval_cdf",
    "eval_density",
    "generate_replicate",
    "k_bonferroni",
    "learn_weight_function",
    "least_concave_majorant",
    "load_scenario",
    "make_method",
    "normalize_weights",
    "pava_decreasing",
    "run_ihw",
    "solve_lp",
    "split_folds",
    "storey_pi0",
    "validate_table",
    "weighted_bh",
    "weighted_bonferroni",
    "weighted_holm",
    "weighted_pvalues",
    "weighted_sidak",
]
