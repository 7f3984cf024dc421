import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2

from phasesteer.bounds import yfg_limit
from phasesteer.certify import (
    bootstrap_test,
    chi2_lower_quantile,
    critical_value,
    gammainc_inverse,
    null_rejection_rate,
    xi_squared,
)
from phasesteer.errors import DegenerateError, DomainError
from phasesteer.priors import JointPrior
from phasesteer.simulator import CountRecord, ExperimentConfig, simulate

PRIOR = JointPrior()


def mp_critical(p, dof):
    """Bisection on the mpmath regularised lower incomplete gamma, 40 digits."""
    mpmath.mp.dps = 40
    a = mpmath.mpf(dof) / 2
    target = mpmath.mpf(p)
    lo, hi = mpmath.mpf(0), mpmath.mpf(10 * dof + 100)
    for _ in range(200):
        mid = (lo + hi) / 2
        if mpmath.gammainc(a, 0, mid, regularized=True) < target:
            lo = mid
        else:
            hi = mid
    return float(2 * lo / dof)


class TestCriticalValues:
    def test_reference(self):
        assert critical_value(0.05, 9) == pytest.approx(0.369457, abs=1e-6)

    @pytest.mark.parametrize("p", [0.05, 0.01, 0.005])
    @pytest.mark.parametrize("dof", [1, 9, 99, 999, 2999])
    def test_against_mpmath(self, p, dof):
        assert critical_value(p, dof) == pytest.approx(mp_critical(p, dof), rel=1e-10)

    @given(st.floats(0.05, 5e4), st.floats(1e-8, 1 - 1e-8))
    @settings(max_examples=200)
    def test_round_trip(self, a, p):
        from scipy.special import gammainc

        x = gammainc_inverse(a, p)
        assert gammainc(a, x) == pytest.approx(p, rel=1e-8, abs=1e-14)

    @given(st.integers(1, 5000), st.floats(1e-4, 0.49))
    def test_agrees_with_scipy(self, dof, p):
        assert chi2_lower_quantile(p, dof) == pytest.approx(chi2.ppf(p, dof), rel=1e-9)

    def test_large_dof_limit(self):
        assert critical_value(0.05, 10**7) == pytest.approx(1.0, abs=2e-3)

    def test_increases_with_dof(self):
        c = [critical_value(0.05, d) for d in (9, 99, 999, 9999)]
        assert all(a < b for a, b in zip(c, c[1:]))

    def test_increases_with_level(self):
        c = [critical_value(p, 99) for p in (0.005, 0.01, 0.05)]
        assert c[0] < c[1] < c[2] < 1

    @pytest.mark.parametrize("p,dof", [(0.5, 9), (0.0, 9), (0.05, 0), (0.05, 2.5)])
    def test_domain(self, p, dof):
        with pytest.raises(DomainError):
            critical_value(p, dof)

    def test_gamma_domain(self):
        with pytest.raises(DomainError):
            gammainc_inverse(-1.0, 0.5)
        with pytest.raises(DomainError):
            gammainc_inverse(1.0, 1.0)


class TestStatistic:
    def test_product(self):
        assert xi_squared(1000, 0.001, 0.5) == pytest.approx(0.5)

    def test_saturation(self):
        assert xi_squared(400, 1 / (400 * 0.3), 0.3) == pytest.approx(1.0)

    def test_linear_in_limit(self):
        assert xi_squared(400, 2e-3, 0.15) == pytest.approx(xi_squared(400, 2e-3, 0.3) / 2)

    def test_accepts_limit(self):
        L = yfg_limit(0.06, PRIOR, 1000)
        assert xi_squared(1000, 0.001, L) == pytest.approx(L.L)

    def test_positive_inputs(self):
        with pytest.raises(DomainError):
            xi_squared(1000, 0.0, 0.5)

    @pytest.mark.parametrize("p", [0.05, 0.01])
    def test_null_calibration(self, p):
        rate = null_rejection_rate(p, 99, 20000, seed=1)
        assert abs(rate - p) < 4 * math.sqrt(p * (1 - p) / 20000)


@pytest.fixture(scope="module")
def record():
    return simulate(ExperimentConfig(n_z=3000, n_y=495, seed=5))


class TestBootstrap:
    def test_deterministic(self, record):
        a = bootstrap_test(record, 4e-4, PRIOR, 20, seed=3)
        b = bootstrap_test(record, 4e-4, PRIOR, 20, seed=3)
        assert a.bootstrap_xi2 == b.bootstrap_xi2
        assert len(a.bootstrap_xi2) == 20
        assert a.dof == 2999

    def test_verdict_logic(self, record):
        res = bootstrap_test(record, 4e-4, PRIOR, 20, seed=3)
        for p in res.critical:
            below = np.mean(np.asarray(res.bootstrap_xi2) < res.critical[p])
            assert res.fraction_below[p] == pytest.approx(below)
            assert res.verdict[p] == (res.xi2 < res.critical[p] and below >= 0.95)

    @given(st.floats(1e-5, 1e-2))
    @settings(max_examples=25, deadline=None)
    def test_verdict_monotone_in_level(self, var_phi):
        rec = simulate(ExperimentConfig(n_z=300, n_y=200, seed=2))
        v = bootstrap_test(rec, var_phi, PRIOR, 10, seed=1).verdict
        assert v[0.05] >= v[0.01] >= v[0.005]

    def test_perfect_generator_record(self):
        rec = CountRecord(np.full((4, 2), 250), np.array([[0, 200], [300, 0]]))
        res = bootstrap_test(rec, 1e-3, PRIOR, 20, seed=4)
        expected = xi_squared(rec.n_z, 1e-3, yfg_limit(0.0, PRIOR, rec.n_z))
        np.testing.assert_allclose(res.bootstrap_xi2, expected, rtol=1e-12)
        assert res.L.generator_term == 0.0

    def test_steerable_ensemble_mean_below_one(self):
        from phasesteer.estimation import conditional_bayes_estimate, reconstruct_generator

        xi = []
        for i in range(100):
            rec = simulate(ExperimentConfig(v=0.97, n_z=1000, n_y=495, seed=12, index=i))
            var = conditional_bayes_estimate(rec.phase_counts, PRIOR).var_phi
            L = yfg_limit(reconstruct_generator(rec.generator_counts).delta2_Y_cond, PRIOR, 1000)
            xi.append(xi_squared(1000, var, L))
        assert np.mean(xi) < 1

    def test_large_variance_not_certified(self, record):
        res = bootstrap_test(record, 1.0, PRIOR, 10, seed=3)
        assert not any(res.verdict.values())

    def test_csv_rows(self, record):
        rows = bootstrap_test(record, 4e-4, PRIOR, 5, seed=3).csv_rows()
        assert list(rows[0]) == ["trial_index", "xi2_mc", "critical_0.05", "critical_0.01", "critical_0.005", "xi2_observed"]

    def test_to_dict_labels(self, record):
        d = bootstrap_test(record, 4e-4, PRIOR, 5, seed=3).to_dict()
        assert set(d["verdict"].values()) <= {"certified", "not-certified"}

    def test_degenerate_resamples_abort(self):
        rec = CountRecord(np.full((4, 2), 100), np.array([[1, 0], [0, 0]]))
        with pytest.raises(DegenerateError):
            bootstrap_test(rec, 1e-3, PRIOR, 50, seed=0)

    def test_needs_two_events(self):
        rec = CountRecord(np.array([[1, 0], [0, 0], [0, 0], [0, 0]]), np.full((2, 2), 10))
        with pytest.raises(DegenerateError):
            bootstrap_test(rec, 1e-3, PRIOR, 5)
