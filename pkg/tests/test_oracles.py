import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgdlangevin.errors import InvalidArgument, ResourceLimit
from sgdlangevin.oracles import (AffineChainSpec, chain_spec_for, gaussian_chain_law, isotropic_noise_variance,
                                 lmc_chain_spec, scalar_chain_moments, sgd_chain_spec,
                                 subset_estimator_variance_bruteforce, subset_estimator_variance_formula)
from sgdlangevin.potentials import make_isotropic_gaussian_target, make_ridge_target
from sgdlangevin.samplers import run_chains, SamplerConfig


def half_square():
    return make_isotropic_gaussian_target(1, 1, 1.0, [[0.0]])


class TestGaussianChainLaw:
    def test_zero_steps_is_point_mass(self):
        law = gaussian_chain_law(lmc_chain_spec(half_square(), 0.1), [1.0], 0)
        assert law.point_mass
        assert law.mean.tolist() == [1.0]

    def test_one_step(self):
        law = gaussian_chain_law(lmc_chain_spec(half_square(), 0.1), [1.0], 1)
        assert law.mean[0] == pytest.approx(0.9)
        assert law.cov[0, 0] == pytest.approx(0.2)

    def test_stationary_limit(self):
        spec = lmc_chain_spec(half_square(), 0.1)
        assert spec.stationary_law().cov[0, 0] == pytest.approx(0.2 / 0.19)
        assert gaussian_chain_law(spec, [1.0], 2000).cov[0, 0] == pytest.approx(0.2 / 0.19, rel=1e-12)

    def test_negative_k(self):
        with pytest.raises(InvalidArgument):
            gaussian_chain_law(lmc_chain_spec(half_square(), 0.1), [1.0], -1)

    def test_matrix_matches_scalar_path(self):
        target = make_isotropic_gaussian_target(2, 3, 1.0, np.array([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]]))
        scalar = lmc_chain_spec(target, 0.05)
        matrix = AffineChainSpec(float(scalar.contraction) * np.eye(2), scalar.drift_target, scalar.noise_var)
        for k in (0, 1, 7, 50):
            a, b = gaussian_chain_law(scalar, [3.0, -1.0], k), gaussian_chain_law(matrix, [3.0, -1.0], k)
            np.testing.assert_allclose(a.mean, b.mean, rtol=1e-12)
            np.testing.assert_allclose(a.cov, b.cov, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(scalar.stationary_law().cov, matrix.stationary_law().cov, rtol=1e-12)

    def test_matrix_stationary_solves_stein_equation(self):
        rng = np.random.default_rng(0)
        target = make_ridge_target(rng.standard_normal((5, 3)), rng.standard_normal(5), lam=1.0)
        spec = lmc_chain_spec(target, 0.5 / target.M)
        S = spec.stationary_law().cov
        C = spec.contraction
        np.testing.assert_allclose(S, C @ S @ C.T + spec.noise_var * np.eye(3), atol=1e-12)
        np.testing.assert_allclose(gaussian_chain_law(spec, np.zeros(3), 3000).cov, S, rtol=1e-8)

    def test_no_stationary_law_when_expanding(self):
        with pytest.raises(InvalidArgument):
            AffineChainSpec(1.5, np.zeros(1), 1.0).stationary_law()

    def test_closed_form_moments_match_recursion(self):
        spec = AffineChainSpec(0.8, np.array([1.0, 2.0]), 0.3)
        means, variances = scalar_chain_moments(spec, [0.0, 0.0], np.arange(30))
        mean, var = np.zeros(2), 0.0
        for k in range(30):
            np.testing.assert_allclose(means[k], mean, rtol=1e-12, atol=1e-15)
            assert variances[k] == pytest.approx(var, rel=1e-12, abs=1e-15)
            mean = spec.drift_target + 0.8 * (mean - spec.drift_target)
            var = 0.64 * var + 0.3

    def test_unit_contraction_variance_grows_linearly(self):
        _, variances = scalar_chain_moments(AffineChainSpec(1.0, np.zeros(1), 0.5), [0.0], np.array([0, 4]))
        assert variances.tolist() == [0.0, 2.0]

    def test_lmc_sgd_noise_equivalence(self):
        target = make_isotropic_gaussian_target(1, 100, 1.0, np.zeros((100, 1)))
        for b in (1, 5, 11, 50):
            h_eff = 2 * b / (100 * (100 - b))
            assert sgd_chain_spec(target, h_eff, b).noise_var == pytest.approx(2 * h_eff, rel=1e-14)

    def test_spec_for_general_quadratic_uses_hessian(self):
        target = make_ridge_target([[1.0, 0.0], [0.0, 2.0]], [1.0, 1.0], lam=1.0)
        spec = chain_spec_for(target, 0.1, 0.2)
        np.testing.assert_allclose(spec.contraction, np.eye(2) - 0.1 * target.hessian())


@pytest.mark.parametrize("k", [1, 10, 100, 1000])
def test_chain_law_against_simulation(k):
    target = make_isotropic_gaussian_target(2, 10, 0.5, np.random.default_rng(1).standard_normal((10, 2)))
    h, b = 0.05, 3
    theta0 = [2.0, -1.0]
    finals, _ = run_chains(SamplerConfig("sgd_idealized", h, b), target, theta0, k, 2000, seed=77)
    law = gaussian_chain_law(sgd_chain_spec(target, h, b), theta0, k)
    var = law.cov[0, 0]
    se_mean = math.sqrt(var / 2000)
    se_var = var * math.sqrt(2 / 1999)
    assert np.all(np.abs(finals.mean(axis=0) - law.mean) < 3 * se_mean)
    assert np.all(np.abs(finals.var(axis=0, ddof=1) - var) < 3 * se_var)


class TestSubsetVariance:
    @pytest.mark.parametrize("a,b,expected", [([1, 1], 1, 0.0), ([1, 2], 1, 1.0), ([1, 2, 3], 2, 1.5)])
    def test_examples(self, a, b, expected):
        assert subset_estimator_variance_formula(a, b) == pytest.approx(expected, abs=1e-15)
        assert subset_estimator_variance_bruteforce(a, b) == pytest.approx(expected, abs=1e-15)

    def test_full_batch_is_zero(self):
        a = np.random.default_rng(0).standard_normal(6)
        assert subset_estimator_variance_bruteforce(a, 6) == 0.0
        assert subset_estimator_variance_formula(a, 6) == pytest.approx(0.0, abs=1e-12)

    def test_constant_vector_zero_variance(self):
        for n in range(2, 9):
            for b in range(1, n + 1):
                assert subset_estimator_variance_formula([1.0] * n, b) == pytest.approx(0.0, abs=1e-12)

    def test_variance_order(self):
        # centered a with sum a_i^2 = n gives V = n^2 (n-b) / (b (n-1)), of order n(n-b)/b
        rng = np.random.default_rng(4)
        for n in (5, 10, 40):
            a = rng.standard_normal(n)
            a = (a - a.mean()) / a.std()
            for b in (1, n // 2, n - 1):
                v = subset_estimator_variance_formula(a, b)
                assert v == pytest.approx(n * n * (n - b) / (b * (n - 1)), rel=1e-10)
                assert v <= 2 * isotropic_noise_variance(n, b)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=9), st.data())
    def test_formula_matches_enumeration(self, a, data):
        b = data.draw(st.integers(1, len(a)))
        exact = subset_estimator_variance_bruteforce(a, b)
        approx = subset_estimator_variance_formula(a, b)
        scale = max(1.0, float(np.sum(np.square(a))))
        assert abs(exact - approx) <= 1e-10 * scale

    def test_enumeration_order_independent(self):
        a = np.array([3.0, -1.0, 2.5, 0.5, 7.0])
        x = [(5 / 2) * sum(a[list(s)]) for s in itertools.combinations(range(5), 2)]
        assert subset_estimator_variance_bruteforce(a, 2) == pytest.approx(np.var(x), rel=1e-14)

    @pytest.mark.parametrize("b", [0, 4, 1.5])
    def test_bad_batch(self, b):
        with pytest.raises(InvalidArgument):
            subset_estimator_variance_formula([1.0, 2.0, 3.0], b)

    def test_single_number_rejected(self):
        with pytest.raises(InvalidArgument):
            subset_estimator_variance_bruteforce([1.0], 1)

    def test_enumeration_guard(self):
        with pytest.raises(ResourceLimit):
            subset_estimator_variance_bruteforce(np.ones(30), 15)


class TestIsotropicNoiseVariance:
    def test_values(self):
        assert isotropic_noise_variance(100, 100) == 0.0
        assert isotropic_noise_variance(100, 50) == 100.0

    @pytest.mark.parametrize("b", [0, 101, -3])
    def test_out_of_range(self, b):
        with pytest.raises(InvalidArgument):
            isotropic_noise_variance(100, b)
