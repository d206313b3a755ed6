import math

import numpy as np
import pytest

from bogo import mvn
from bogo.errors import DimensionMismatch
from bogo.gp import (
    TrainingSet,
    fit,
    log_marginal_likelihood,
    predict,
    predict_joint,
    predict_mean_var,
)
from bogo.kernels import KernelFamily, KernelSpec, MeanSpec, kernel_matrix, mean_vector

from conftest import gauss_inverse, random_se_config


def dense_posterior(xs, ys, kernel, mean, noise, x_star):
    """Direct evaluation of the posterior formulas with an explicit inverse."""
    gram = kernel_matrix(kernel, xs) + noise * np.eye(len(xs))
    inv = gauss_inverse(gram)
    cross = kernel_matrix(kernel, xs, [x_star])[:, 0]
    resid = ys - mean_vector(mean, xs)
    mu = mean_vector(mean, [x_star])[0] + cross @ inv @ resid
    var = kernel.amplitude - cross @ inv @ cross
    return mu, var


class TestFit:
    def test_scalar_case_solve_vector(self):
        kernel = KernelSpec(KernelFamily.SQUARED_EXPONENTIAL, 2.0, (1.0,))
        mean = MeanSpec(constant=0.5)
        post = fit(TrainingSet([[0.3]], [1.7], 0.0), kernel, mean)
        assert post.delta[0] == pytest.approx((1.7 - 0.5) / 2.0, rel=1e-15)

    def test_solve_residual(self, rng):
        xs, ys, kernel, mean, _ = random_se_config(rng, n=5)
        post = fit(TrainingSet(xs, ys, 0.0), kernel, mean)
        gram = kernel_matrix(kernel, xs)
        resid = gram @ post.delta - (ys - mean_vector(mean, xs))
        assert np.max(np.abs(resid)) <= 1e-9

    def test_zero_noise_matches_noise_free_formulas(self, rng):
        for _ in range(5):
            xs, ys, kernel, mean, _ = random_se_config(rng)
            post = fit(TrainingSet(xs, ys, 0.0), kernel, mean)
            x_star = rng.uniform(-1, 1, size=xs.shape[1])
            mu, var = predict(post, x_star)
            # noisy-path formulas at zero noise reduce exactly to the
            # noise-free pair; the dense oracle itself is conditioning-limited
            mu_free, var_free = dense_posterior(xs, ys, kernel, mean, 0.0, x_star)
            gram = kernel_matrix(kernel, xs) + 0.0 * np.eye(len(xs))
            cross = kernel_matrix(kernel, xs, [x_star])[:, 0]
            resid = ys - mean_vector(mean, xs)
            mu_noisy = mean_vector(mean, [x_star])[0] + cross @ gauss_inverse(gram) @ resid
            var_noisy = kernel.amplitude - cross @ gauss_inverse(gram) @ cross
            assert abs(mu_noisy - mu_free) <= 1e-12
            assert abs(var_noisy - var_free) <= 1e-12
            scale = max(1.0, np.linalg.cond(gram) * 1e-15)
            assert abs(mu - mu_free) <= 1e-8 * scale
            assert abs(var - max(var_free, 0.0)) <= 1e-8 * scale

    def test_chol_reconstructs_noisy_gram(self, rng):
        xs, ys, kernel, mean, _ = random_se_config(rng, n=7)
        lam = 0.3
        post = fit(TrainingSet(xs, ys, lam), kernel, mean)
        gram = kernel_matrix(kernel, xs) + lam * np.eye(7)
        err = np.max(np.abs(post.chol.lower @ post.chol.lower.T - gram))
        assert err <= 1e-9 * np.max(np.abs(gram))

    def test_duplicate_noise_free_points_dropped_with_warning(self):
        kernel = KernelSpec(KernelFamily.SQUARED_EXPONENTIAL, 1.0, (1.0,))
        with pytest.warns(UserWarning):
            ts = TrainingSet([[0.1], [0.2], [0.1]], [1.0, 2.0, 1.0], 0.0)
        assert ts.n == 2

    def test_duplicates_kept_with_noise(self):
        ts = TrainingSet([[0.1], [0.1]], [1.0, 1.2], 0.5)
        assert ts.n == 2


class TestPredict:
    def test_interpolates_noise_free_observations(self, rng):
        xs, ys, kernel, mean, _ = random_se_config(rng, n=8)
        post = fit(TrainingSet(xs, ys, 0.0), kernel, mean)
        spread = np.ptp(ys) or 1.0
        for i in range(8):
            mu, var = predict(post, xs[i])
            assert abs(mu - ys[i]) <= 1e-8 * spread
            assert var <= 1e-6 * kernel.amplitude

    def test_far_point_recovers_prior(self):
        kernel = KernelSpec(KernelFamily.SQUARED_EXPONENTIAL, 1.8, (50.0,))
        mean = MeanSpec(constant=0.7)
        post = fit(TrainingSet([[0.0]], [2.0], 0.0), kernel, mean)
        mu, var = predict(post, [10.0])
        assert mu == pytest.approx(0.7, abs=1e-12)
        assert var == pytest.approx(1.8, abs=1e-12)

    def test_single_observation_closed_forms(self, rng):
        kernel = KernelSpec(KernelFamily.SQUARED_EXPONENTIAL, 1.3, (2.0,))
        mean = MeanSpec(constant=-0.2)
        x1, y1 = np.array([0.4]), 0.9
        post = fit(TrainingSet([x1], [y1], 0.0), kernel, mean)
        for _ in range(20):
            x_star = rng.uniform(-2, 2, size=1)
            k_star = kernel.amplitude * math.exp(-2.0 * (x_star[0] - x1[0]) ** 2)
            mu_ref = -0.2 + (k_star / kernel.amplitude) * (y1 - (-0.2))
            var_ref = kernel.amplitude - k_star**2 / kernel.amplitude
            mu, var = predict(post, x_star)
            assert mu == pytest.approx(mu_ref, abs=1e-12)
            assert var == pytest.approx(var_ref, abs=1e-12)

    def test_single_observation_variance_correlation_identity(self, rng):
        kernel = KernelSpec(KernelFamily.SQUARED_EXPONENTIAL, 2.4, (1.0,))
        for _ in range(100):
            x1 = rng.uniform(-1, 1, size=1)
            post = fit(TrainingSet([x1], [rng.normal()], 0.0), kernel, MeanSpec())
            x_star = rng.uniform(-1, 1, size=1)
            _, var = predict(post, x_star)
            corr2 = (
                kernel.amplitude * math.exp(-((x_star[0] - x1[0]) ** 2))
            ) ** 2 / kernel.amplitude**2
            assert abs(var - kernel.amplitude * (1.0 - corr2)) <= 1e-10

    def test_posterior_variance_never_exceeds_prior(self, rng):
        xs, ys, kernel, mean, _ = random_se_config(rng, n=9)
        post = fit(TrainingSet(xs, ys, 0.05), kernel, mean)
        queries = rng.uniform(-1.5, 1.5, size=(200, xs.shape[1]))
        _, variances = predict_mean_var(post, queries)
        assert np.all(variances <= kernel.amplitude + 1e-10)

    def test_appending_observation_never_raises_variance(self, rng):
        xs, ys, kernel, mean, _ = random_se_config(rng, d=1, n=6)
        post_small = fit(TrainingSet(xs, ys, 0.0), kernel, mean)
        new_x = rng.uniform(-1, 1, size=(1, 1))
        xs_big = np.vstack([xs, new_x])
        ys_big = np.append(ys, rng.normal())
        post_big = fit(TrainingSet(xs_big, ys_big, 0.0), kernel, mean)
        queries = rng.uniform(-1.5, 1.5, size=(100, 1))
        _, var_small = predict_mean_var(post_small, queries)
        _, var_big = predict_mean_var(post_big, queries)
        assert np.all(var_big <= var_small + 1e-8)

    def test_dimension_mismatch(self, rng):
        xs, ys, kernel, mean, _ = random_se_config(rng, d=2, n=4)
        post = fit(TrainingSet(xs, ys, 0.0), kernel, mean)
        with pytest.raises(DimensionMismatch):
            predict(post, [0.0])


class TestPredictJoint:
    def test_k1_matches_predict(self, rng):
        xs, ys, kernel, mean, _ = random_se_config(rng, n=6)
        post = fit(TrainingSet(xs, ys, 0.1), kernel, mean)
        x_star = rng.uniform(-1, 1, size=xs.shape[1])
        joint = predict_joint(post, [x_star])
        mu, var = predict(post, x_star)
        assert joint.mean[0] == pytest.approx(mu, abs=1e-12)
        assert joint.covariance[0, 0] == pytest.approx(var, abs=1e-12)

    def test_duplicate_query_rank_deficient(self, rng):
        xs, ys, kernel, mean, _ = random_se_config(rng, d=1, n=5)
        post = fit(TrainingSet(xs, ys, 0.2), kernel, mean)
        x = rng.uniform(-1, 1, size=1)
        joint = predict_joint(post, [x, x])
        assert joint.mean[0] == joint.mean[1]
        flat = joint.covariance.ravel()
        np.testing.assert_allclose(flat, flat[0], atol=1e-12)

    def test_against_mvn_conditioning_oracle(self, rng):
        for _ in range(5):
            xs, ys, kernel, mean, _ = random_se_config(rng, n=6)
            lam = float(rng.uniform(0.01, 0.5))
            post = fit(TrainingSet(xs, ys, lam), kernel, mean)
            stars = rng.uniform(-1, 1, size=(3, xs.shape[1]))
            joint = predict_joint(post, stars)

            all_pts = np.vstack([xs, stars])
            cov = kernel_matrix(kernel, all_pts)
            cov[:6, :6] += lam * np.eye(6)
            prior = mvn.MvnDistribution(mean=mean_vector(mean, all_pts), covariance=cov)
            cond = mvn.condition(prior, list(range(6)), ys)
            assert np.max(np.abs(joint.mean - cond.mean)) <= 1e-9
            assert np.max(np.abs(joint.covariance - cond.covariance)) <= 1e-9

    def test_marginals_match_pointwise_predict(self, rng):
        xs, ys, kernel, mean, _ = random_se_config(rng, n=7)
        post = fit(TrainingSet(xs, ys, 0.05), kernel, mean)
        stars = rng.uniform(-1, 1, size=(4, xs.shape[1]))
        joint = predict_joint(post, stars)
        means, variances = predict_mean_var(post, stars)
        assert np.max(np.abs(joint.mean - means)) <= 1e-10
        assert np.max(np.abs(np.diag(joint.covariance) - variances)) <= 1e-10


class TestLogMarginalLikelihood:
    def test_standard_normal_density_at_zero(self):
        kernel = KernelSpec(KernelFamily.SQUARED_EXPONENTIAL, 0.4, (1.0,))
        post = fit(TrainingSet([[0.0]], [0.0], 0.6), kernel, MeanSpec())
        assert log_marginal_likelihood(post) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-12)

    def test_against_dense_formula(self, rng):
        xs, ys, kernel, mean, _ = random_se_config(rng, n=4)
        lam = 0.2
        post = fit(TrainingSet(xs, ys, lam), kernel, mean)
        gram = kernel_matrix(kernel, xs) + lam * np.eye(4)
        resid = ys - mean_vector(mean, xs)
        ref = (
            -0.5 * resid @ gauss_inverse(gram) @ resid
            - 0.5 * math.log(np.linalg.det(gram))
            - 2.0 * math.log(2 * math.pi)
        )
        assert log_marginal_likelihood(post) == pytest.approx(ref, abs=1e-8)

    def test_noisy_duplicate_changes_value_without_crash(self, rng):
        kernel = KernelSpec(KernelFamily.SQUARED_EXPONENTIAL, 1.0, (1.0,))
        base = fit(TrainingSet([[0.1], [0.5]], [1.0, 2.0], 0.3), kernel, MeanSpec())
        dup = fit(TrainingSet([[0.1], [0.5], [0.1]], [1.0, 2.0, 1.05], 0.3), kernel, MeanSpec())
        assert log_marginal_likelihood(dup) != log_marginal_likelihood(base)
