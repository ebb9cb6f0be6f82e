"""Monte Carlo harness: data generators, error-rate estimation, and the
adversarial weighting counterexample.

Data follows the conditional two-groups model with one-sided z-tests:
covariates drawn from their law, truth indicators Bernoulli(1 - pi0(x)),
z = sqrt(N(x)) * mu(x) * H + noise, p = 1 - Phi(z). Null p-values are
exactly uniform given the covariate. The fold-block dependence option
shares an equicorrelated Gaussian factor within each of the K blocks while
keeping blocks independent, which is the regime the fold-aware guarantees
target.

Per-replicate randomness comes from counter-based substreams
SeedSequence(seed, spawn_key=(replicate,)), so parallel and sequential
evaluation produce identical results.
"""

import configparser
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import ndtr

from ihw.errors import InvalidConfig, InvalidLevel
from ihw.table import HypothesisTable

UNIFORM = "uniform"
CATEGORICAL = "categorical"
INDEPENDENT = "independent"
FOLD_BLOCK = "fold_block"


@dataclass(frozen=True)
class Scenario:
    """Generator settings for one simulation condition.

    ``pi0``, ``mu`` and ``n_obs`` are piecewise-constant in the covariate:
    tuples of values over equal-width segments of [0, 1] (uniform
    covariate) or one value per category. Length-1 tuples broadcast.
    """

    m: int
    pi0: Tuple[float, ...] = (1.0,)
    mu: Tuple[float, ...] = (2.0,)
    n_obs: Tuple[float, ...] = (1.0,)
    covariate: str = UNIFORM
    category_probs: Optional[Tuple[float, ...]] = None
    dependence: str = INDEPENDENT
    rho: float = 0.5
    n_blocks: int = 2
    name: str = "scenario"

    def __post_init__(self):
        if self.m < 1:
            raise InvalidConfig("m must be positive")
        if any(not 0.0 <= v <= 1.0 for v in self.pi0):
            raise InvalidConfig("pi0 values must lie in [0, 1]")
        if any(v < 1.0 for v in self.n_obs):
            raise InvalidConfig("sample sizes must be at least 1")
        if self.covariate not in (UNIFORM, CATEGORICAL):
            raise InvalidConfig(f"unknown covariate law {self.covariate!r}")
        if self.covariate == CATEGORICAL:
            probs = self.category_probs
            if probs is None or abs(sum(probs) - 1.0) > 1e-9 or any(p <= 0 for p in probs):
                raise InvalidConfig("categorical covariates need positive probabilities summing to 1")
        if self.dependence not in (INDEPENDENT, FOLD_BLOCK):
            raise InvalidConfig(f"unknown dependence {self.dependence!r}")
        if not 0.0 <= self.rho < 1.0:
            raise InvalidConfig("rho must lie in [0, 1)")
        if self.dependence == FOLD_BLOCK and self.n_blocks < 2:
            raise InvalidConfig("fold-block dependence needs at least 2 blocks")

    def _levels(self) -> int:
        if self.covariate == CATEGORICAL:
            return len(self.category_probs)
        return max(len(self.pi0), len(self.mu), len(self.n_obs))

    def _lookup(self, values: Tuple[float, ...], idx: np.ndarray) -> np.ndarray:
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape[0] == 1:
            return np.full(idx.shape, arr[0])
        return arr[idx]


def generate_replicate(scenario: Scenario, seed) -> Tuple[HypothesisTable, np.ndarray]:
    """Draw one replicate; returns the table and the truth indicator H.

    Draw order is fixed (covariate, truth, shared block factors, noise) so
    replicates are a pure function of the seed. Fold labels are attached
    when the scenario has block dependence.
    """
    rng = np.random.default_rng(seed)
    m = scenario.m
    levels = scenario._levels()
    if scenario.covariate == UNIFORM:
        x = rng.uniform(size=m)
        idx = np.minimum((x * levels).astype(np.int64), levels - 1)
        covariates = x
    else:
        idx = rng.choice(len(scenario.category_probs), size=m, p=scenario.category_probs)
        covariates = np.array([f"c{i}" for i in idx], dtype=object)
    pi0_x = scenario._lookup(scenario.pi0, idx)
    mu_x = scenario._lookup(scenario.mu, idx)
    n_x = scenario._lookup(scenario.n_obs, idx)
    truth = rng.uniform(size=m) < 1.0 - pi0_x
    if scenario.dependence == FOLD_BLOCK:
        blocks = (np.arange(m, dtype=np.int64) * scenario.n_blocks) // m + 1
        shared = rng.standard_normal(scenario.n_blocks)
        noise = np.sqrt(scenario.rho) * shared[blocks - 1]
        noise = noise + np.sqrt(1.0 - scenario.rho) * rng.standard_normal(m)
        fold_labels = blocks
    else:
        noise = rng.standard_normal(m)
        fold_labels = None
    z = np.sqrt(n_x) * mu_x * truth + noise
    pvalues = ndtr(-z)
    table = HypothesisTable.from_arrays(pvalues, covariates, fold_labels)
    return table, truth


@dataclass(frozen=True)
class ErrorReport:
    """Monte Carlo error and power estimates with their standard errors."""

    scenario: str
    procedure: str
    alpha: float
    fdr: float
    fdr_se: float
    fwer: float
    fwer_se: float
    kfwer: float
    kfwer_se: float
    mean_discoveries: float
    mean_discoveries_se: float
    mean_true_discoveries: float
    reps: int


def _mean_se(values: np.ndarray) -> Tuple[float, float]:
    mean = float(values.mean())
    if values.shape[0] < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / np.sqrt(values.shape[0]))


def estimate_error_rates(
    scenario: Scenario,
    method: Callable[[HypothesisTable, int], np.ndarray],
    reps: int,
    alpha: float,
    seed: int,
    k_fwer: int = 1,
    procedure_name: str = "method",
) -> ErrorReport:
    """Estimate FDR, FWER, k-FWER and discovery counts over replicates.

    ``method(table, replicate_index)`` returns the boolean rejection
    vector; the index lets cross-weighted methods derive per-replicate
    fold seeds.
    """
    if reps < 1:
        raise InvalidConfig("reps must be positive")
    fdp = np.empty(reps)
    any_false = np.empty(reps)
    k_false = np.empty(reps)
    discoveries = np.empty(reps)
    true_discoveries = np.empty(reps)
    for r in range(reps):
        table, truth = generate_replicate(
            scenario, np.random.SeedSequence(entropy=seed, spawn_key=(r,))
        )
        rejected = np.asarray(method(table, r), dtype=bool)
        n_rej = int(rejected.sum())
        n_false = int((rejected & ~truth).sum())
        fdp[r] = n_false / max(n_rej, 1)
        any_false[r] = 1.0 if n_false >= 1 else 0.0
        k_false[r] = 1.0 if n_false >= k_fwer else 0.0
        discoveries[r] = n_rej
        true_discoveries[r] = n_rej - n_false
    fdr, fdr_se = _mean_se(fdp)
    fwer, fwer_se = _mean_se(any_false)
    kfwer, kfwer_se = _mean_se(k_false)
    disc, disc_se = _mean_se(discoveries)
    return ErrorReport(
        scenario=scenario.name,
        procedure=procedure_name,
        alpha=alpha,
        fdr=fdr,
        fdr_se=fdr_se,
        fwer=fwer,
        fwer_se=fwer_se,
        kfwer=kfwer,
        kfwer_se=kfwer_se,
        mean_discoveries=disc,
        mean_discoveries_se=disc_se,
        mean_true_discoveries=float(true_discoveries.mean()),
        reps=reps,
    )


def counterexample_analytic_fwer(alpha: float) -> float:
    """Closed-form FWER of the adversarial weighting scheme."""
    if not 0.0 < alpha < 1.0:
        raise InvalidLevel(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha + alpha**2 / 4.0 * (1.0 - alpha)


def counterexample_naive_weighting(alpha: float, reps: int, seed: int) -> ErrorReport:
    """Adversarial weighting of four uniform nulls, then weighted BH.

    P1 decides the weights of hypotheses 3/4 and P3 those of 1/2: landing
    in [alpha/2, alpha] sends weight 2 to the first of the pair, otherwise
    the second. Weighted BH at level alpha then reduces to unweighted BH on
    the two weighted hypotheses, and the exploited step-up geometry pushes
    the FWER above alpha (all hypotheses are null, so FDP = 1{V >= 1}).
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidLevel(f"alpha must lie in (0, 1), got {alpha!r}")
    if reps < 1:
        raise InvalidConfig("reps must be positive")
    rng = np.random.default_rng(seed)
    p = rng.uniform(size=(reps, 4))
    p1, p2, p3, p4 = p.T
    first_pair_weighted = (alpha / 2 <= p3) & (p3 <= alpha)
    second_pair_weighted = (alpha / 2 <= p1) & (p1 <= alpha)
    a = np.where(first_pair_weighted, p1, p2)
    b = np.where(second_pair_weighted, p3, p4)
    low = np.minimum(a, b)
    high = np.maximum(a, b)
    # BH on two p-values at level alpha: reject both if high <= alpha,
    # else reject the low one if low <= alpha / 2
    reject_two = high <= alpha
    reject_any = reject_two | (low <= alpha / 2)
    n_rejected = np.where(reject_two, 2.0, (reject_any & ~reject_two) * 1.0)
    fdp = reject_any.astype(np.float64)
    fdr, fdr_se = _mean_se(fdp)
    disc, disc_se = _mean_se(n_rejected)
    return ErrorReport(
        scenario="counterexample",
        procedure="naive_weighted_bh",
        alpha=alpha,
        fdr=fdr,
        fdr_se=fdr_se,
        fwer=fdr,
        fwer_se=fdr_se,
        kfwer=fdr,
        kfwer_se=fdr_se,
        mean_discoveries=disc,
        mean_discoveries_se=disc_se,
        mean_true_discoveries=0.0,
        reps=reps,
    )


def counterexample_weight_assignment(pvalues: np.ndarray, alpha: float) -> np.ndarray:
    """The adversarial weights for one draw of four p-values (test hook)."""
    p1, _, p3, _ = pvalues
    w = np.zeros(4)
    if alpha / 2 <= p1 <= alpha:
        w[2] = 2.0
    else:
        w[3] = 2.0
    if alpha / 2 <= p3 <= alpha:
        w[0] = 2.0
    else:
        w[1] = 2.0
    return w


UNWEIGHTED_METHODS = ("bonferroni", "holm", "sidak", "bh", "by")
IHW_METHODS = (
    "ihw-bonferroni",
    "ihw-holm",
    "ihw-sidak",
    "ihw-bh",
    "ihw-by",
    "ihwc",
    "ihwc-storey",
)


def make_method(
    name: str,
    alpha: float,
    n_folds: int = 5,
    seed: int = 0,
    learner=None,
    tau: Optional[float] = None,
    tau_prime: Optional[float] = None,
    k: int = 1,
) -> Callable[[HypothesisTable, int], np.ndarray]:
    """Build a rejection closure for :func:`estimate_error_rates`.

    Unweighted baselines run the procedures with unit weights (Holm and
    Sidak over a single fold). The ihw variants run the full
    cross-weighted pipeline; replicate tables with a fold column use it,
    others are split randomly into ``n_folds`` with a per-replicate seed.
    """
    from ihw import procedures
    from ihw.engine import IhwConfig, run_ihw
    from ihw.table import USER_SUPPLIED, FoldPartition

    if name in UNWEIGHTED_METHODS:

        def unweighted(table: HypothesisTable, rep: int) -> np.ndarray:
            ones = np.ones(table.m)
            if name == "bonferroni":
                return procedures.weighted_bonferroni(table.pvalues, ones, alpha).rejected
            if name in ("holm", "sidak"):
                part = FoldPartition(np.ones(table.m, dtype=np.int64), 1, USER_SUPPLIED)
                fn = procedures.weighted_holm if name == "holm" else procedures.weighted_sidak
                return fn(table.pvalues, ones, alpha, part).rejected
            reshaping = (
                procedures.ReshapingFunction.harmonic(table.m)
                if name == "by"
                else procedures.ReshapingFunction.identity(table.m)
            )
            return procedures.weighted_bh(table.pvalues, ones, alpha, reshaping).rejected

        return unweighted

    if name not in IHW_METHODS:
        raise InvalidConfig(f"unknown method {name!r}")
    procedure = {
        "ihw-bonferroni": "bonferroni",
        "ihw-holm": "holm",
        "ihw-sidak": "sidak",
        "ihw-bh": "bh",
        "ihw-by": "by",
        "ihwc": "ihwc",
        "ihwc-storey": "ihwc_storey",
    }[name]

    def cross_weighted(table: HypothesisTable, rep: int) -> np.ndarray:
        rep_seed = int(np.random.SeedSequence(entropy=(seed, rep)).generate_state(1)[0])
        if table.fold_labels is not None:
            strategy, folds = "user_supplied", table.n_user_folds
        else:
            strategy, folds = "random", n_folds
        config = IhwConfig(
            alpha=alpha,
            procedure=procedure,
            K=folds,
            fold_strategy=strategy,
            seed=rep_seed,
            k=k,
            tau=tau,
            tau_prime=tau_prime,
            learner=learner,
        )
        return run_ihw(table, config).outcome.rejected

    return cross_weighted


def load_scenario(path) -> Scenario:
    """Read a scenario from a key = value configuration file.

    The file has a single ``[scenario]`` section; list-valued keys take
    comma-separated numbers. Unknown keys are rejected by name.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise InvalidConfig(f"cannot read scenario file {path!r}")
    if "scenario" not in parser:
        raise InvalidConfig("scenario file needs a [scenario] section")
    section = parser["scenario"]
    known = {
        "m",
        "pi0",
        "mu",
        "n_obs",
        "covariate",
        "category_probs",
        "dependence",
        "rho",
        "n_blocks",
        "name",
    }
    for key in section:
        if key not in known:
            raise InvalidConfig(f"unknown scenario key {key!r}")

    def floats(key, default):
        if key not in section:
            return default
        try:
            return tuple(float(v) for v in section[key].split(","))
        except ValueError as exc:
            raise InvalidConfig(f"scenario key {key!r} must be comma-separated numbers") from exc

    if "m" not in section:
        raise InvalidConfig("scenario file must set m")
    try:
        m = section.getint("m")
    except ValueError as exc:
        raise InvalidConfig("scenario key 'm' must be an integer") from exc
    return Scenario(
        m=m,
        pi0=floats("pi0", (1.0,)),
        mu=floats("mu", (2.0,)),
        n_obs=floats("n_obs", (1.0,)),
        covariate=section.get("covariate", UNIFORM),
        category_probs=floats("category_probs", None),
        dependence=section.get("dependence", INDEPENDENT),
        rho=section.getfloat("rho", 0.5),
        n_blocks=section.getint("n_blocks", 2),
        name=section.get("name", "scenario"),
    )
