import math

import numpy as np
import pytest

from phasesteer.bounds import (
    bound_table,
    conditional_phase_bound,
    conditional_van_trees,
    max_information,
    model_generator_variance,
    prior_averaged_fisher,
    prior_generator_variance,
    prior_score,
    single_parameter_vt,
    symmetric_conditional_van_trees,
    van_trees_matrix,
    van_trees_phase_bound,
    violation_threshold,
    vt_yfg_check,
    yfg_limit,
)
from phasesteer.errors import DegenerateError, DomainError, SingularMatrixError
from phasesteer.bounds import VanTreesMatrix
from phasesteer.priors import JointPrior

PRIOR = JointPrior()


class TestThresholds:
    def test_single(self):
        assert violation_threshold("single") == pytest.approx(1 / math.sqrt(2), abs=1e-9)

    def test_multi(self):
        assert violation_threshold("multi") == pytest.approx(math.sqrt(2 - math.sqrt(2)), abs=1e-9)

    @pytest.mark.parametrize("mode", ["single", "multi"])
    def test_crossing(self, mode):
        t = violation_threshold(mode)
        assert max_information(t, mode) == pytest.approx(model_generator_variance(t), abs=1e-9)
        assert max_information(t + 0.01, mode) > model_generator_variance(t + 0.01)
        assert max_information(t - 0.01, mode) < model_generator_variance(t - 0.01)

    def test_bad_mode(self):
        with pytest.raises(DomainError):
            violation_threshold("both")


class TestVanTrees:
    def test_monotone_in_n(self):
        Ns = [10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000]
        b = [van_trees_phase_bound(van_trees_matrix(PRIOR, n), n) for n in Ns]
        assert all(y <= x for x, y in zip(b, b[1:]))

    def test_large_n_limit(self):
        n = 1e5
        crb = np.linalg.inv(prior_averaged_fisher(PRIOR))[0, 0] / n
        assert van_trees_phase_bound(van_trees_matrix(PRIOR, n), n) == pytest.approx(crb, rel=0.01)

    def test_infinite_n_drops_prior(self):
        V = van_trees_matrix(PRIOR, math.inf)
        np.testing.assert_allclose(V.entries, prior_averaged_fisher(PRIOR))

    def test_score_term(self):
        V = van_trees_matrix(PRIOR, 100)
        np.testing.assert_allclose(V.score_term, prior_score(PRIOR) / 100)
        assert prior_score(PRIOR)[0, 0] == pytest.approx(1 / (math.pi / 16) ** 2, rel=1e-4)

    def test_averaged_fisher_brute_force(self):
        # independent Monte Carlo average of the closed-form matrix over prior draws
        from phasesteer.information import conditional_fisher_matrix

        gen = np.random.default_rng(1)
        phis = gen.normal(math.pi / 4, math.pi / 16, 20000)
        u = gen.uniform(size=20000)
        # inverse CDF of the raised cosine by bisection on a fine table
        grid = np.linspace(0.9, 1.0, 20001)
        cdf = (grid - 0.9) / 0.1 + np.sin(math.pi * (grid - 0.95) / 0.05) / math.pi
        cdf = (cdf - cdf[0]) / (cdf[-1] - cdf[0])
        vs = np.minimum(np.interp(u, cdf, grid), 1 - 1e-9)
        mc = np.mean([conditional_fisher_matrix(p, v).entries for p, v in zip(phis, vs)], axis=0)
        np.testing.assert_allclose(prior_averaged_fisher(PRIOR), mc, rtol=0.02, atol=0.01)

    def test_rejects_small_n(self):
        with pytest.raises(DomainError):
            van_trees_matrix(PRIOR, 0)

    def test_singular_matrix(self):
        V = VanTreesMatrix(np.ones((2, 2)), 1.0, np.ones((2, 2)), np.zeros((2, 2)))
        with pytest.raises(SingularMatrixError):
            V.inverse()


class TestConditionalVanTrees:
    def test_symmetric_split_is_half_resources(self):
        np.testing.assert_allclose(
            symmetric_conditional_van_trees(PRIOR, 1000).entries, van_trees_matrix(PRIOR, 500).entries
        )

    def test_counts_form_matches_symmetric(self):
        counts = np.array([[100, 150], [150, 100], [120, 130], [130, 120]])
        np.testing.assert_allclose(
            conditional_van_trees(counts, PRIOR).entries, symmetric_conditional_van_trees(PRIOR, 1000).entries
        )

    def test_conditional_bound_below_unconditional(self):
        for n in (100, 1000):
            assert conditional_phase_bound(PRIOR, n) < van_trees_phase_bound(van_trees_matrix(PRIOR, n), n)

    def test_empty_outcome(self):
        counts = np.zeros((4, 2))
        counts[:, 0] = 25
        with pytest.warns(UserWarning):
            V = conditional_van_trees(counts, PRIOR)
        np.testing.assert_allclose(V.entries, van_trees_matrix(PRIOR, 100).entries)

    def test_no_events(self):
        with pytest.raises(DegenerateError):
            conditional_van_trees(np.zeros((4, 2)), PRIOR)


class TestYfg:
    def test_terms(self):
        L = yfg_limit(0.06, PRIOR, 1000)
        assert L.generator_term == 0.06
        assert L.score_term == pytest.approx(256 / math.pi**2 / 1000, rel=1e-4)
        assert L.L == pytest.approx(L.generator_term + L.score_term)

    def test_rejects_bad_variance(self):
        with pytest.raises(DomainError):
            yfg_limit(1.2, PRIOR, 10)
        with pytest.raises(DomainError):
            yfg_limit(0.5, PRIOR, 0)

    def test_model_variance(self):
        assert model_generator_variance(0.97) == pytest.approx(0.0591)
        assert prior_generator_variance(PRIOR) == pytest.approx(0.0972, abs=1e-3)

    def test_table_columns_and_monotone(self):
        rows = bound_table(PRIOR, [1, 10, 100, 1000, 10000])
        assert set(rows[0]) == {"N", "bound", "generator_term", "score_term", "lhs", "violated"}
        lhs = [r["lhs"] for r in rows]
        assert all(y <= x for x, y in zip(lhs, lhs[1:]))
        assert rows[-1]["violated"]

    def test_check_uses_inverse(self):
        V = van_trees_matrix(PRIOR, 1000)
        L = yfg_limit(0.06, PRIOR, 1000)
        assert vt_yfg_check(V, L).lhs == pytest.approx(V.inverse()[0, 0] * L.L)

    def test_no_violation_for_low_visibility_prior(self):
        prior = JointPrior.from_values(v0=0.6)
        rows = bound_table(prior, [100, 10000])
        assert not any(r["violated"] for r in rows)


class TestSingleParameter:
    def test_violation_at_high_visibility(self):
        V, V_yfg = single_parameter_vt(PRIOR, 0.97, 1000)
        assert V > V_yfg

    def test_no_violation_below_threshold(self):
        V, V_yfg = single_parameter_vt(PRIOR, 0.6, 1000)
        assert V < V_yfg

    def test_large_n_limit(self):
        V, V_yfg = single_parameter_vt(PRIOR, 0.97, math.inf)
        assert V_yfg == pytest.approx(1 - 0.97**2)
