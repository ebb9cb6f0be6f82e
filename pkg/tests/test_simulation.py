import numpy as np
import pytest
from scipy.special import ndtr, ndtri
from scipy.stats import kstest

from ihw.errors import InvalidConfig, InvalidLevel
from ihw.procedures import weighted_bh
from ihw.simulate import (
    Scenario,
    counterexample_analytic_fwer,
    counterexample_naive_weighting,
    counterexample_weight_assignment,
    estimate_error_rates,
    generate_replicate,
    load_scenario,
    make_method,
)


class TestGenerator:
    def test_null_pvalues_uniform(self):
        scenario = Scenario(m=100_000, pi0=(1.0,), name="null")
        table, truth = generate_replicate(scenario, 0)
        assert not truth.any()
        assert kstest(table.pvalues, "uniform").pvalue > 0.01

    def test_alternative_tail_probability(self):
        # mu=2, N=1: P(P <= 0.05 | H=1) = 1 - Phi(Phi^-1(0.95) - 2) ~ 0.639
        scenario = Scenario(m=100_000, pi0=(0.0,), mu=(2.0,))
        table, truth = generate_replicate(scenario, 1)
        assert truth.all()
        expected = 1 - ndtr(ndtri(0.95) - 2.0)
        observed = (table.pvalues <= 0.05).mean()
        se = np.sqrt(expected * (1 - expected) / table.m)
        assert observed == pytest.approx(expected, abs=3 * se)

    def test_sample_size_scales_effect(self):
        scenario = Scenario(m=50_000, pi0=(0.0,), mu=(1.0,), n_obs=(4.0,))
        table, _ = generate_replicate(scenario, 2)
        expected = 1 - ndtr(ndtri(0.95) - 2.0)  # sqrt(4) * 1 = 2
        observed = (table.pvalues <= 0.05).mean()
        assert observed == pytest.approx(expected, abs=0.01)

    def test_deterministic(self):
        scenario = Scenario(m=500, pi0=(0.8,), mu=(2.0,))
        t1, h1 = generate_replicate(scenario, 7)
        t2, h2 = generate_replicate(scenario, 7)
        np.testing.assert_array_equal(t1.pvalues, t2.pvalues)
        np.testing.assert_array_equal(h1, h2)

    def test_piecewise_pi0(self):
        scenario = Scenario(m=200_000, pi0=(0.0, 1.0), name="half")
        table, truth = generate_replicate(scenario, 3)
        low = table.covariates < 0.5
        assert truth[low].mean() > 0.99
        assert truth[~low].mean() < 0.01

    def test_fold_block_dependence(self):
        scenario = Scenario(
            m=40, pi0=(1.0,), dependence="fold_block", rho=0.5, n_blocks=4
        )
        # the shared factor is constant within one replicate, so the
        # correlation must be measured across replicates of fixed pairs
        reps = 500
        same_block = np.empty((reps, 2))
        cross_block = np.empty((reps, 2))
        for r in range(reps):
            table, _ = generate_replicate(scenario, (4, r))
            z = ndtri(1 - table.pvalues)
            same_block[r] = z[0], z[1]  # both in block 1
            cross_block[r] = z[0], z[10]  # blocks 1 and 2
        table, _ = generate_replicate(scenario, 4)
        assert table.fold_labels is not None
        assert np.bincount(table.fold_labels)[1:].tolist() == [10] * 4
        within = np.corrcoef(same_block.T)[0, 1]
        across = np.corrcoef(cross_block.T)[0, 1]
        assert within == pytest.approx(0.5, abs=4 / np.sqrt(reps))
        assert across == pytest.approx(0.0, abs=4 / np.sqrt(reps))

    def test_categorical_covariate(self):
        scenario = Scenario(
            m=1000,
            pi0=(0.5, 1.0),
            covariate="categorical",
            category_probs=(0.5, 0.5),
        )
        table, _ = generate_replicate(scenario, 5)
        assert table.covariate_kind == "categorical"
        assert set(table.covariates.tolist()) == {"c0", "c1"}


class TestEstimateErrorRates:
    def test_never_reject(self):
        scenario = Scenario(m=50, pi0=(0.5,))
        report = estimate_error_rates(
            scenario, lambda table, rep: np.zeros(table.m, dtype=bool), 20, 0.1, seed=0
        )
        assert report.fdr == 0.0
        assert report.fwer == 0.0
        assert report.mean_discoveries == 0.0

    def test_reject_everything_under_global_null(self):
        scenario = Scenario(m=50, pi0=(1.0,))
        report = estimate_error_rates(
            scenario, lambda table, rep: np.ones(table.m, dtype=bool), 20, 0.1, seed=0
        )
        assert report.fdr == 1.0
        assert report.fwer == 1.0

    def test_bh_fdr_near_pi0_alpha(self):
        scenario = Scenario(m=1000, pi0=(0.8,), mu=(2.5,))
        report = estimate_error_rates(
            scenario, make_method("bh", 0.1), 300, 0.1, seed=5, procedure_name="bh"
        )
        assert report.fdr <= 0.8 * 0.1 + 2 * report.fdr_se + 0.005
        assert report.mean_discoveries > 0

    def test_kfwer_counts_k_or_more(self):
        scenario = Scenario(m=100, pi0=(1.0,))
        report = estimate_error_rates(
            scenario,
            lambda table, rep: table.pvalues <= 0.02,
            100,
            0.1,
            seed=1,
            k_fwer=3,
        )
        assert report.kfwer <= report.fwer

    def test_replicates_use_substreams(self):
        scenario = Scenario(m=100, pi0=(0.9,))
        seen = []

        def spy(table, rep):
            seen.append(table.pvalues[:3].copy())
            return np.zeros(table.m, dtype=bool)

        estimate_error_rates(scenario, spy, 3, 0.1, seed=9)
        assert not np.allclose(seen[0], seen[1])
        estimate_error_rates(scenario, spy, 3, 0.1, seed=9)
        np.testing.assert_array_equal(seen[0], seen[3])


class TestGuaranteedProceduresUnderGlobalNull:
    def test_error_rates_within_band(self):
        from ihw.learner import LearnerConfig

        scenario = Scenario(m=300, pi0=(1.0,), name="global-null")
        learner = LearnerConfig(alpha=0.1, n_bins=2, lambda_grid=(np.inf,), k_inner=3)
        for name in ("ihw-bonferroni", "ihw-holm", "ihw-sidak", "ihw-by", "ihwc"):
            method = make_method(name, 0.1, n_folds=3, seed=1, learner=learner)
            report = estimate_error_rates(scenario, method, 120, 0.1, seed=31)
            rate = report.fdr if name in ("ihw-by", "ihwc") else report.fwer
            se = report.fdr_se if name in ("ihw-by", "ihwc") else report.fwer_se
            assert rate <= 0.1 + 3 * se + 1e-12, name


class TestCounterexample:
    def test_analytic_values(self):
        assert counterexample_analytic_fwer(0.2) == pytest.approx(0.208)
        assert counterexample_analytic_fwer(0.05) == pytest.approx(0.05059375)
        assert counterexample_analytic_fwer(0.5) == pytest.approx(0.53125)

    def test_monte_carlo_matches_analytic(self):
        report = counterexample_naive_weighting(0.2, 200_000, seed=3)
        assert report.fwer == pytest.approx(0.208, abs=3 * report.fwer_se)
        assert report.fdr == report.fwer

    def test_vectorized_decision_matches_weighted_bh(self):
        # the closed-form pair decision equals running the real weighted
        # step-up on all four hypotheses with the adversarial weights
        rng = np.random.default_rng(11)
        alpha = 0.2
        for _ in range(2000):
            p = rng.uniform(size=4)
            w = counterexample_weight_assignment(p, alpha)
            outcome = weighted_bh(p, w, alpha)
            first_pair_weighted = alpha / 2 <= p[2] <= alpha
            second_pair_weighted = alpha / 2 <= p[0] <= alpha
            a = p[0] if first_pair_weighted else p[1]
            b = p[2] if second_pair_weighted else p[3]
            low, high = min(a, b), max(a, b)
            expected_any = high <= alpha or low <= alpha / 2
            assert bool(outcome.rejected.any()) == expected_any

    def test_unweighted_bh_controls_fwer_here(self):
        rng = np.random.default_rng(4)
        alpha = 0.2
        hits = 0
        reps = 20_000
        for _ in range(reps):
            p = rng.uniform(size=4)
            if weighted_bh(p, np.ones(4), alpha).rejected.any():
                hits += 1
        fwer = hits / reps
        se = np.sqrt(fwer * (1 - fwer) / reps)
        assert fwer <= alpha + 2 * se

    def test_level_validation(self):
        with pytest.raises(InvalidLevel):
            counterexample_naive_weighting(1.5, 10, 0)


class TestScenarioFile:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "scenario.ini"
        path.write_text(
            "[scenario]\n"
            "m = 1200\n"
            "pi0 = 0.6, 0.8, 1.0\n"
            "mu = 2.5\n"
            "dependence = fold_block\n"
            "rho = 0.25\n"
            "n_blocks = 3\n"
            "name = demo\n"
        )
        scenario = load_scenario(path)
        assert scenario.m == 1200
        assert scenario.pi0 == (0.6, 0.8, 1.0)
        assert scenario.mu == (2.5,)
        assert scenario.dependence == "fold_block"
        assert scenario.rho == 0.25
        assert scenario.n_blocks == 3
        assert scenario.name == "demo"

    def test_unknown_key_named(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[scenario]\nm = 100\nbananas = 3\n")
        with pytest.raises(InvalidConfig, match="bananas"):
            load_scenario(path)

    def test_missing_m(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[scenario]\npi0 = 1.0\n")
        with pytest.raises(InvalidConfig, match="m"):
            load_scenario(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidConfig):
            load_scenario(tmp_path / "nope.ini")

    def test_make_method_unknown_name(self):
        with pytest.raises(InvalidConfig):
            make_method("banana", 0.1)
