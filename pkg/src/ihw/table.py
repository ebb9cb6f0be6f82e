"""Core data model: hypothesis records, fold partitions, and weight vectors.

All types are immutable after construction (backing arrays are marked
read-only), so they can be shared freely across threads; the operations in
this module are pure functions.
"""

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from ihw.errors import (
    EmptyFold,
    EmptyInput,
    InvalidConfig,
    LengthMismatch,
    MissingFoldLabels,
    MissingValue,
    MixedCovariateKinds,
    NegativeWeight,
    PValueOutOfRange,
    TooFewHypotheses,
)

NUMERIC = "numeric"
CATEGORICAL = "categorical"

USER_SUPPLIED = "user_supplied"
RANDOM = "random"

#: absolute tolerance for the per-fold mean-one weight invariant
WEIGHT_MEAN_TOL = 1e-10


def _freeze(arr):
    arr.setflags(write=False)
    return arr


def _classify_covariates(values):
    """Return (array, kind) or raise MixedCovariateKinds / MissingValue."""
    kinds = set()
    for i, v in enumerate(values):
        if v is None:
            raise MissingValue(i, "covariate")
        if isinstance(v, str):
            kinds.add(CATEGORICAL)
        elif isinstance(v, (bool, np.bool_)):
            kinds.add(NUMERIC)
        elif isinstance(v, (int, float, np.integer, np.floating)):
            if np.isnan(v):
                raise MissingValue(i, "covariate")
            kinds.add(NUMERIC)
        else:
            raise MixedCovariateKinds(f"unsupported covariate type {type(v).__name__} at index {i}")
        if len(kinds) > 1:
            raise MixedCovariateKinds("covariates mix numeric values and categorical labels")
    kind = kinds.pop()
    if kind == NUMERIC:
        return _freeze(np.asarray(values, dtype=np.float64)), NUMERIC
    return _freeze(np.asarray(values, dtype=object)), CATEGORICAL


def _check_fold_labels(labels, m):
    labels = np.asarray(labels)
    if labels.shape != (m,):
        raise LengthMismatch(f"expected {m} fold labels, got {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        as_float = np.asarray(labels, dtype=np.float64)
        if np.any(np.isnan(as_float)):
            raise MissingValue(int(np.flatnonzero(np.isnan(as_float))[0]), "fold label")
        if np.any(as_float != np.round(as_float)):
            raise EmptyFold("fold labels must be integers in {1..K}")
        labels = as_float.astype(np.int64)
    labels = labels.astype(np.int64)
    k = int(labels.max(initial=0))
    if labels.min(initial=1) < 1:
        raise EmptyFold("fold labels must be integers in {1..K}")
    present = np.bincount(labels, minlength=k + 1)[1:]
    if np.any(present == 0):
        empty = int(np.flatnonzero(present == 0)[0]) + 1
        raise EmptyFold(f"fold {empty} has no hypotheses")
    return _freeze(labels), k


@dataclass(frozen=True, eq=False)
class HypothesisTable:
    """Validated per-hypothesis records: p-value, covariate, optional fold.

    ``covariates`` is either a float64 array (numeric kind) or an object
    array of labels (categorical kind); a table never mixes the two.
    """

    pvalues: np.ndarray
    covariates: np.ndarray
    covariate_kind: str
    fold_labels: Optional[np.ndarray] = None

    @property
    def m(self) -> int:
        return self.pvalues.shape[0]

    @property
    def n_user_folds(self) -> Optional[int]:
        if self.fold_labels is None:
            return None
        return int(self.fold_labels.max())

    @classmethod
    def from_arrays(cls, pvalues, covariates, fold_labels=None) -> "HypothesisTable":
        pvalues = list(pvalues)
        if len(pvalues) == 0:
            raise EmptyInput("no hypotheses supplied")
        p = np.empty(len(pvalues), dtype=np.float64)
        for i, v in enumerate(pvalues):
            if v is None:
                raise MissingValue(i, "pvalue")
            v = float(v)
            if np.isnan(v) or v < 0.0 or v > 1.0:
                raise PValueOutOfRange(i, v)
            p[i] = v
        cov, kind = _classify_covariates(list(covariates))
        if cov.shape[0] != p.shape[0]:
            raise LengthMismatch(
                f"{p.shape[0]} p-values but {cov.shape[0]} covariates"
            )
        labels = None
        if fold_labels is not None:
            labels, _ = _check_fold_labels(fold_labels, p.shape[0])
        return cls(_freeze(p), cov, kind, labels)


def validate_table(rows: Iterable[Sequence]) -> HypothesisTable:
    """Build a :class:`HypothesisTable` from rows of (pvalue, covariate[, fold]).

    Input order is preserved. Rows must all have a fold entry or all lack
    one.
    """
    pvalues, covariates, folds = [], [], []
    for i, row in enumerate(rows):
        row = tuple(row)
        if len(row) not in (2, 3):
            raise LengthMismatch(f"row {i} has {len(row)} fields, expected 2 or 3")
        pvalues.append(row[0])
        covariates.append(row[1])
        if len(row) == 3 and row[2] is not None:
            folds.append(row[2])
    if not pvalues:
        raise EmptyInput("no rows supplied")
    if folds and len(folds) != len(pvalues):
        raise MissingFoldLabels("some rows carry a fold label and some do not")
    return HypothesisTable.from_arrays(pvalues, covariates, folds if folds else None)


@dataclass(frozen=True, eq=False)
class FoldPartition:
    """Partition of hypotheses into folds 1..K, each nonempty."""

    assignments: np.ndarray
    K: int
    strategy: str
    seed: Optional[int] = None

    def __post_init__(self):
        labels, k = _check_fold_labels(self.assignments, self.assignments.shape[0])
        if k != self.K:
            raise EmptyFold(f"labels span {k} folds but K={self.K}")
        object.__setattr__(self, "assignments", labels)

    @property
    def m(self) -> int:
        return self.assignments.shape[0]

    def indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == k)

    def fold_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.K + 1)[1:]


def split_folds(table: HypothesisTable, K: int, strategy: str = RANDOM, seed=None) -> FoldPartition:
    """Assign hypotheses to K folds.

    ``user_supplied`` passes through the table's fold column. ``random``
    draws a balanced assignment (fold sizes differ by at most one) whose
    membership is a pure function of (m, K, seed).
    """
    m = table.m
    if strategy == USER_SUPPLIED:
        if table.fold_labels is None:
            raise MissingFoldLabels("table has no fold column")
        k_obs = table.n_user_folds
        if K != k_obs:
            raise InvalidConfig(f"K={K} but the fold column spans {k_obs} folds")
        return FoldPartition(table.fold_labels.copy(), k_obs, USER_SUPPLIED, None)
    if strategy != RANDOM:
        raise InvalidConfig(f"unknown fold strategy {strategy!r}")
    if K < 2:
        raise InvalidConfig("random splitting needs K >= 2")
    if m < K:
        raise TooFewHypotheses(f"cannot split {m} hypotheses into {K} folds")
    if seed is None:
        raise InvalidConfig("random splitting needs a seed")
    rng = np.random.default_rng(seed)
    labels = np.arange(m, dtype=np.int64) % K + 1
    return FoldPartition(rng.permutation(labels), K, RANDOM, seed)


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Nonnegative per-hypothesis weights with per-fold mean one."""

    weights: np.ndarray
    partition: FoldPartition

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape[0] != self.partition.m:
            raise LengthMismatch(
                f"{w.shape[0]} weights for a partition of {self.partition.m}"
            )
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            bad = int(np.flatnonzero(~np.isfinite(w) | (w < 0))[0])
            raise NegativeWeight(bad, float(w[bad]))
        for k in range(1, self.partition.K + 1):
            mean = w[self.partition.indices(k)].mean()
            if abs(mean - 1.0) > WEIGHT_MEAN_TOL:
                raise InvalidConfig(f"fold {k} weights have mean {mean!r}, expected 1")
        object.__setattr__(self, "weights", _freeze(w))

    @property
    def m(self) -> int:
        return self.weights.shape[0]


def normalize_weights(raw_weights, partition: FoldPartition) -> WeightVector:
    """Rescale raw weights so every fold has mean exactly one.

    Within a fold whose raw weights are all zero, every weight is set to 1;
    otherwise weights are scaled by fold size over fold total.
    """
    raw = np.asarray(raw_weights, dtype=np.float64)
    if raw.shape[0] != partition.m:
        raise LengthMismatch(f"{raw.shape[0]} weights for a partition of {partition.m}")
    bad = np.flatnonzero(~np.isfinite(raw) | (raw < 0))
    if bad.size:
        raise NegativeWeight(int(bad[0]), float(raw[bad[0]]))
    out = np.empty_like(raw)
    for k in range(1, partition.K + 1):
        idx = partition.indices(k)
        total = raw[idx].sum()
        if total == 0.0:
            out[idx] = 1.0
        else:
            out[idx] = idx.size * raw[idx] / total
    return WeightVector(out, partition)
