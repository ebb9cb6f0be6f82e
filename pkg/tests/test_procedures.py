import numpy as np
import pytest

from ihw.errors import InvalidConfig, InvalidLevel, InvalidTauPrime, LengthMismatch
from ihw.procedures import (
    ReshapingFunction,
    k_bonferroni,
    storey_pi0,
    weighted_bh,
    weighted_bonferroni,
    weighted_holm,
    weighted_pvalues,
    weighted_sidak,
)
from ihw.table import FoldPartition, normalize_weights
from oracles import exhaustive_weighted_bh, textbook_bh, textbook_holm


def single_fold(n):
    return FoldPartition(np.ones(n, dtype=np.int64), 1, "user_supplied")


def random_partition(rng, m, max_k=4):
    k = int(rng.integers(1, min(max_k, m) + 1))
    assignment = rng.integers(1, k + 1, size=m)
    assignment[:k] = np.arange(1, k + 1)
    return FoldPartition(assignment.astype(np.int64), k, "user_supplied")


def random_normalized_weights(rng, partition):
    raw = rng.uniform(0, 3, size=partition.m)
    raw[rng.uniform(size=partition.m) < 0.15] = 0.0
    return normalize_weights(raw, partition).weights


class TestWeightedPvalues:
    def test_conventions(self):
        q = weighted_pvalues([0.5, 0.2, 0.0], [2.0, 0.0, 0.0])
        assert q[0] == pytest.approx(0.25)
        assert q[1] == np.inf
        assert q[2] == 0.0


class TestBonferroni:
    def test_uniform_weights(self):
        out = weighted_bonferroni([0.01, 0.02, 0.03, 0.2], np.ones(4), 0.05)
        assert out.rejected.tolist() == [True, False, False, False]
        np.testing.assert_allclose(out.thresholds, 0.0125)

    def test_zero_weight_never_rejects_positive_p(self):
        out = weighted_bonferroni([0.04, 0.001], [2.0, 0.0], 0.05)
        assert out.rejected.tolist() == [True, False]
        np.testing.assert_allclose(out.thresholds, [0.05, 0.0])

    def test_zero_pvalue_rejected_at_zero_weight(self):
        out = weighted_bonferroni([0.03, 0.031, 0.0], [1.5, 1.5, 0.0], 0.06)
        assert out.rejected.tolist() == [True, False, True]
        np.testing.assert_allclose(out.thresholds, [0.03, 0.03, 0.0])

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            weighted_bonferroni([0.1], [1.0, 1.0], 0.05)
        with pytest.raises(InvalidLevel):
            weighted_bonferroni([0.1], [1.0], 1.5)


class TestKBonferroni:
    def test_k1_reduces_to_bonferroni(self):
        p = [0.01, 0.3, 0.001]
        w = [1.0, 1.0, 1.0]
        assert (
            k_bonferroni(p, w, 0.05, 1).rejected.tolist()
            == weighted_bonferroni(p, w, 0.05).rejected.tolist()
        )

    def test_k2_threshold(self):
        out = k_bonferroni([0.9] * 4, np.ones(4), 0.05, 2)
        np.testing.assert_allclose(out.thresholds, 0.025)

    def test_invalid_level(self):
        with pytest.raises(InvalidLevel):
            k_bonferroni([0.1], [1.0], 0.5, 2)
        with pytest.raises(InvalidLevel):
            k_bonferroni([0.1], [1.0], 0.05, 0)


class TestHolm:
    def test_classical_reduction(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            m = int(rng.integers(1, 12))
            p = np.round(rng.uniform(0, 0.3, size=m), 4)
            out = weighted_holm(p, np.ones(m), 0.1, single_fold(m))
            expected = textbook_holm(p, 0.1)
            assert out.rejected.tolist() == expected.tolist()

    def test_step_down_trace(self):
        out = weighted_holm([0.02, 0.03], np.ones(2), 0.05, single_fold(2))
        assert out.rejected.tolist() == [True, True]

    def test_contains_bonferroni(self):
        rng = np.random.default_rng(99)
        for _ in range(1000):
            m = int(rng.integers(2, 25))
            part = random_partition(rng, m)
            w = random_normalized_weights(rng, part)
            p = rng.uniform(0, 0.5, size=m) ** rng.uniform(1, 3)
            holm = weighted_holm(p, w, 0.1, part).rejected
            bonf = weighted_bonferroni(p, w, 0.1).rejected
            assert np.all(holm | ~bonf), "Holm must reject everything Bonferroni does"

    def test_requires_normalized_weights(self):
        with pytest.raises(InvalidConfig):
            weighted_holm([0.1, 0.2], [2.0, 1.5], 0.05, single_fold(2))

    def test_zero_weights_never_reject_positive(self):
        part = single_fold(3)
        out = weighted_holm([0.001, 0.9, 0.002], [3.0, 0.0, 0.0], 0.05, part)
        assert not out.rejected[1]
        assert not out.rejected[2]


class TestSidak:
    def test_exact_square_root_threshold(self):
        out = weighted_sidak([0.05, 0.2], np.ones(2), 0.19, single_fold(2))
        np.testing.assert_allclose(out.thresholds, 0.1)
        assert out.rejected.tolist() == [True, False]

    def test_zero_weight_threshold_zero(self):
        out = weighted_sidak([0.2, 0.0], [2.0, 0.0], 0.1, single_fold(2))
        assert out.thresholds[1] == 0.0
        assert not out.rejected[0] or out.thresholds[0] >= 0.2
        assert out.rejected[1]  # p = 0 is rejectable at threshold 0

    def test_dominates_bonferroni_for_subunit_weights(self):
        # 1 - (1-a)^w >= a*w on w in [0, 1]
        for a in np.linspace(0.01, 0.5, 20):
            for w in np.linspace(0.0, 1.0, 50):
                assert 1 - (1 - a) ** w >= a * w - 1e-12

    def test_per_fold_levels(self):
        part = FoldPartition(np.array([1, 1, 2, 2, 2, 2]), 2, "user_supplied")
        out = weighted_sidak([0.5] * 6, np.ones(6), 0.3, part)
        # fold 1 at level 0.1, fold 2 at level 0.2
        np.testing.assert_allclose(out.thresholds[:2], 1 - (1 - 0.1) ** 0.5)
        np.testing.assert_allclose(out.thresholds[2:], 1 - (1 - 0.2) ** 0.25)


class TestWeightedBh:
    def test_step_up_example(self):
        out = weighted_bh([0.01, 0.012, 0.04, 0.9], np.ones(4), 0.05)
        assert out.k_star == 2
        assert out.rejected.tolist() == [True, True, False, False]

    def test_censored_example(self):
        out = weighted_bh([0.01, 0.012, 0.04, 0.9], np.ones(4), 0.05, censor_tau=0.011)
        assert out.k_star == 1
        assert out.rejected.tolist() == [True, False, False, False]
        np.testing.assert_allclose(out.thresholds, 0.011)

    def test_harmonic_reshaping_threshold(self):
        reshaping = ReshapingFunction.harmonic(4)
        assert reshaping.harmonic_sum == pytest.approx(25 / 12)
        # k = 4 threshold is alpha * 4 / (4 * H_4) = alpha * 12 / 25
        p = [0.02, 0.021, 0.022, 0.023]
        out = weighted_bh(p, np.ones(4), 0.05, reshaping)
        assert out.k_star == 4
        np.testing.assert_allclose(out.thresholds, 0.05 * 12 / 25)
        assert out.thresholds[0] == pytest.approx(0.024)

    def test_matches_textbook_bh(self):
        rng = np.random.default_rng(123)
        for _ in range(1000):
            m = int(rng.integers(1, 40))
            p = rng.uniform(0, 1, size=m) ** rng.uniform(0.5, 3)
            alpha = float(rng.uniform(0.01, 0.3))
            mine = weighted_bh(p, np.ones(m), alpha).rejected
            ref = textbook_bh(p, alpha)
            assert mine.tolist() == ref.tolist()

    def test_matches_exhaustive_definition_with_weights_and_censoring(self):
        rng = np.random.default_rng(321)
        for _ in range(400):
            m = int(rng.integers(1, 15))
            raw = rng.uniform(0, 2, size=m)
            raw[rng.uniform(size=m) < 0.2] = 0.0
            w = normalize_weights(raw, single_fold(m)).weights
            p = rng.uniform(0, 1, size=m) ** 2
            alpha = float(rng.uniform(0.02, 0.3))
            tau = float(rng.uniform(0.05, 1.0)) if rng.uniform() < 0.5 else None
            kind = ReshapingFunction.harmonic(m) if rng.uniform() < 0.3 else None
            out = weighted_bh(p, w, alpha, kind, censor_tau=tau)
            beta = (lambda k: k / kind.harmonic_sum) if kind is not None else None
            expected, k_star = exhaustive_weighted_bh(
                p, w, alpha, beta, tau if tau is not None else 1.0
            )
            assert out.rejected.tolist() == expected.tolist()
            assert out.k_star == k_star
            assert out.n_rejected == out.k_star

    def test_by_equals_bh_at_reshaped_level(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            m = int(rng.integers(2, 30))
            p = rng.uniform(0, 1, size=m) ** 2
            w = normalize_weights(rng.uniform(0, 2, size=m), single_fold(m)).weights
            alpha = float(rng.uniform(0.05, 0.4))
            h_m = float(np.sum(1 / np.arange(1, m + 1)))
            by = weighted_bh(p, w, alpha, ReshapingFunction.harmonic(m)).rejected
            bh_scaled = weighted_bh(p, w, alpha / h_m).rejected
            assert by.tolist() == bh_scaled.tolist()

    def test_censoring_dominance(self):
        rng = np.random.default_rng(77)
        for _ in range(300):
            m = int(rng.integers(2, 30))
            p = rng.uniform(0, 1, size=m) ** 2
            w = normalize_weights(rng.uniform(0, 2, size=m), single_fold(m)).weights
            tau = float(rng.uniform(0.01, 0.5))
            censored = weighted_bh(p, w, 0.1, censor_tau=tau).rejected
            plain = weighted_bh(p, w, 0.1).rejected
            assert np.all(plain | ~censored)

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(8)
        m = 25
        p = rng.uniform(0, 1, size=m) ** 2
        w = normalize_weights(rng.uniform(0, 2, size=m), single_fold(m)).weights
        part = single_fold(m)
        previous = {"bonf": None, "bh": None, "holm": None, "sidak": None}
        for alpha in (0.01, 0.05, 0.1, 0.2, 0.4):
            current = {
                "bonf": weighted_bonferroni(p, w, alpha).rejected,
                "bh": weighted_bh(p, w, alpha).rejected,
                "holm": weighted_holm(p, w, alpha, part).rejected,
                "sidak": weighted_sidak(p, w, alpha, part).rejected,
            }
            for key, rej in current.items():
                if previous[key] is not None:
                    assert np.all(rej | ~previous[key])
            previous = current

    def test_no_rejection_above_tau(self):
        rng = np.random.default_rng(13)
        p = rng.uniform(0, 1, size=50)
        w = np.ones(50)
        tau = 0.05
        out = weighted_bh(p, w, 0.3, censor_tau=tau)
        assert np.all(p[out.rejected] <= tau)


class TestStoreyPi0:
    def test_direct_evaluation(self):
        assert storey_pi0([0.1, 0.2, 0.6, 0.8], np.ones(4), 0.5) == pytest.approx(1.5)

    def test_all_above_tau_prime(self):
        n = 6
        est = storey_pi0([0.9] * n, np.ones(n), 0.5)
        assert est == pytest.approx((1 + n) / (n * 0.5))

    def test_weighted_evaluation(self):
        est = storey_pi0([0.9, 0.1, 0.7, 0.2], [3.0, 1.0, 0.0, 0.0], 0.5)
        assert est == pytest.approx(3.0)

    def test_invalid_tau_prime(self):
        with pytest.raises(InvalidTauPrime):
            storey_pi0([0.1], [1.0], 1.0)
        with pytest.raises(InvalidTauPrime):
            storey_pi0([0.1], [1.0], 0.0)
