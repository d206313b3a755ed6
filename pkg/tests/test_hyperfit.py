import math

import numpy as np
import pytest

from bogo.errors import DegenerateResiduals
from bogo.gp import TrainingSet, fit
from bogo.hyperfit import (
    NOISE_FREE_G,
    correlation_matrix,
    fit_hyperparameters,
    mu_hat,
    reduced_lml,
    sigma2_hat,
)
from bogo.kernels import KernelFamily, KernelSpec, kernel_matrix, polynomial_basis
from bogo.mvn import cholesky

from conftest import gauss_inverse, random_spd

SE = KernelFamily.SQUARED_EXPONENTIAL


def full_lml(betas, g, mu, sigma2, xs, ys):
    """Unprofiled log marginal likelihood via dense evaluation."""
    n = len(ys)
    r = correlation_matrix(betas, g, xs, SE)
    cov = sigma2 * r
    resid = np.asarray(ys) - mu
    inv = gauss_inverse(cov)
    sign, logdet = np.linalg.slogdet(cov)
    return float(-0.5 * resid @ inv @ resid - 0.5 * logdet - 0.5 * n * math.log(2 * math.pi))


def sample_gp_data(rng, n=50, d=1, alpha=1.0, beta=5.0, lam2=0.01):
    xs = rng.uniform(0, 1, size=(n, d))
    spec = KernelSpec(SE, alpha, (beta,) * d)
    cov = kernel_matrix(spec, xs) + lam2 * np.eye(n)
    ys = cholesky(cov).lower @ rng.standard_normal(n)
    return xs, ys


def unit_correlation_diag(r):
    return np.all(np.diag(r) == 1.0)


class TestMuHat:
    def test_identity_R_gives_sample_mean(self, rng):
        ys = rng.normal(size=7)
        assert mu_hat(np.eye(7), ys) == pytest.approx(float(np.mean(ys)), rel=1e-14)

    def test_constant_responses(self):
        assert mu_hat(correlation_matrix([1.0], 0.6, [[0.1], [0.4], [0.9]], SE), [2.5] * 3) == pytest.approx(2.5, rel=1e-12)

    def test_against_dense_inverse_oracle(self, rng):
        r = random_spd(rng, 6)
        scale = np.sqrt(np.diag(r))
        r = r / np.outer(scale, scale)
        np.fill_diagonal(r, 1.0)
        ys = rng.normal(size=6)
        inv = gauss_inverse(r)
        expected = float(np.sum(inv @ ys) / np.sum(inv))
        assert abs(mu_hat(r, ys) - expected) <= 1e-9


class TestSigma2Hat:
    def test_degenerate_residuals(self):
        with pytest.raises(DegenerateResiduals):
            sigma2_hat(np.eye(4), np.full(4, 1.3), 1.3)

    def test_identity_R_mean_square_residuals(self, rng):
        ys = rng.normal(size=9)
        mu = float(np.mean(ys))
        assert sigma2_hat(np.eye(9), ys, mu) == pytest.approx(float(np.mean((ys - mu) ** 2)), rel=1e-13)

    def test_against_dense_oracle(self, rng):
        r = random_spd(rng, 5)
        scale = np.sqrt(np.diag(r))
        r = r / np.outer(scale, scale)
        np.fill_diagonal(r, 1.0)
        ys = rng.normal(size=5)
        mu = 0.3
        expected = float((ys - mu) @ gauss_inverse(r) @ (ys - mu)) / 5
        assert abs(sigma2_hat(r, ys, mu) - expected) <= 1e-9

    def test_stationarity_of_profiled_estimates(self, rng):
        xs, ys = sample_gp_data(rng, n=20)
        betas, g = np.array([4.0]), 0.9
        r = correlation_matrix(betas, g, xs, SE)
        mu = mu_hat(r, ys)
        s2 = sigma2_hat(r, ys, mu)
        h = 1e-5
        dmu = (full_lml(betas, g, mu + h, s2, xs, ys) - full_lml(betas, g, mu - h, s2, xs, ys)) / (2 * h)
        ds2 = (full_lml(betas, g, mu, s2 + h, xs, ys) - full_lml(betas, g, mu, s2 - h, xs, ys)) / (2 * h)
        assert abs(dmu) <= 1e-6
        assert abs(ds2) <= 1e-6


class TestReducedLml:
    def test_small_g_limit_is_log_sample_variance(self, rng):
        ys = rng.normal(size=12)
        xs = rng.uniform(size=(12, 2))
        target = -math.log(np.mean((ys - np.mean(ys)) ** 2))
        got = reduced_lml([1.0, 2.0], 1e-9, xs, ys)
        assert got == pytest.approx(target, abs=1e-6)

    def test_joint_permutation_invariance(self, rng):
        xs, ys = sample_gp_data(rng, n=15)
        perm = rng.permutation(15)
        a = reduced_lml([3.0], 0.8, xs, ys)
        b = reduced_lml([3.0], 0.8, xs[perm], ys[perm])
        assert abs(a - b) <= 1e-12

    def test_affine_relation_to_full_lml(self, rng):
        # full = (n/2) * reduced + constant; the constant is grid-independent
        xs, ys = sample_gp_data(rng, n=12)
        n = 12
        offsets = []
        for beta in [0.5, 2.0, 8.0]:
            for g in [0.3, 0.9, 0.99]:
                r = correlation_matrix([beta], g, xs, SE)
                mu = mu_hat(r, ys)
                s2 = sigma2_hat(r, ys, mu)
                reduced = reduced_lml([beta], g, xs, ys)
                offsets.append(full_lml([beta], g, mu, s2, xs, ys) - 0.5 * n * reduced)
        assert np.max(offsets) - np.min(offsets) <= 1e-8

    def test_grid_argmax_matches_full_lml_argmax(self, rng):
        xs, ys = sample_gp_data(rng, n=25)
        betas = np.exp(np.linspace(-1, 3, 9))
        gs = 1 / (1 + np.exp(-np.linspace(-2, 6, 9)))
        red = np.empty((9, 9))
        full = np.empty((9, 9))
        for i, b in enumerate(betas):
            for j, g in enumerate(gs):
                red[i, j] = reduced_lml([b], g, xs, ys)
                r = correlation_matrix([b], g, xs, SE)
                mu = mu_hat(r, ys)
                s2 = sigma2_hat(r, ys, mu)
                full[i, j] = full_lml([b], g, mu, s2, xs, ys)
        assert np.unravel_index(np.argmax(red), red.shape) == np.unravel_index(
            np.argmax(full), full.shape
        )

    def test_unit_diagonal(self, rng):
        xs, _ = sample_gp_data(rng, n=8)
        assert unit_correlation_diag(correlation_matrix([2.0], 0.7, xs, SE))


class TestFitHyperparameters:
    def test_beats_true_hyperparameters(self, rng):
        xs, ys = sample_gp_data(rng, n=50, alpha=1.0, beta=5.0, lam2=0.01)
        result = fit_hyperparameters(xs, ys, SE, seeds=16, rng_seed=1)
        true_value = reduced_lml([5.0], 1.0 / 1.01, xs, ys)
        assert result.reduced_lml >= true_value - 1e-6

    def test_reconstruction_invariant(self, rng):
        xs, ys = sample_gp_data(rng, n=30)
        result = fit_hyperparameters(xs, ys, SE, seeds=8, rng_seed=3)
        assert result.kernel.amplitude == pytest.approx(result.g * result.sigma2, rel=1e-12)
        assert result.noise_variance == pytest.approx((1 - result.g) * result.sigma2, rel=1e-9, abs=1e-15)

    def test_result_beats_every_start(self, rng):
        xs, ys = sample_gp_data(rng, n=20)
        result = fit_hyperparameters(xs, ys, SE, seeds=6, rng_seed=5)
        for _, value in result.optimizer_trace:
            assert result.reduced_lml >= value - 1e-12

    def test_constant_responses_surface_degenerate(self, rng):
        xs = rng.uniform(size=(10, 1))
        with pytest.raises(DegenerateResiduals):
            fit_hyperparameters(xs, np.full(10, 3.3), SE)

    def test_coarse_grid_oracle(self, rng):
        xs, ys = sample_gp_data(rng, n=25)
        result = fit_hyperparameters(xs, ys, SE, seeds=16, rng_seed=7)
        best_grid = -np.inf
        for log_b in np.linspace(-4, 6, 12):
            for logit_g in np.linspace(-4, 10, 12):
                g = 1 / (1 + math.exp(-logit_g))
                best_grid = max(best_grid, reduced_lml([math.exp(log_b)], g, xs, ys))
        assert result.reduced_lml >= best_grid - 1e-3

    def test_deterministic_given_seeds(self, rng):
        xs, ys = sample_gp_data(rng, n=18)
        a = fit_hyperparameters(xs, ys, SE, seeds=4, rng_seed=11)
        b = fit_hyperparameters(xs, ys, SE, seeds=4, rng_seed=11)
        assert a.kernel == b.kernel
        assert a.reduced_lml == b.reduced_lml

    def test_noise_free_flag_pins_noise_to_zero(self, rng):
        xs = rng.uniform(0, 1, size=(15, 1))
        ys = np.sin(3 * xs[:, 0])
        result = fit_hyperparameters(xs, ys, SE, seeds=8, noise_free=True, rng_seed=2)
        assert result.noise_variance == 0.0
        assert result.g == 1.0
        # the fitted surrogate interpolates (smooth data leaves the Gram
        # near-singular, so expect jitter-limited rather than exact recovery)
        post = fit(TrainingSet(xs, ys, 0.0), result.kernel, result.mean)
        from bogo.gp import predict

        for i in range(15):
            mu, _ = predict(post, xs[i])
            assert abs(mu - ys[i]) <= 5e-5 * np.ptp(ys)

    def test_noise_free_g_constant_near_one(self):
        assert 0.0 < NOISE_FREE_G < 1.0
        assert 1.0 - NOISE_FREE_G <= 1e-8

    def test_trend_coefficients_recovered(self, rng):
        xs = rng.uniform(-1, 1, size=(40, 1))
        basis = tuple(polynomial_basis(1, 1))
        true_slope = 2.5
        spec = KernelSpec(SE, 0.3, (4.0,))
        cov = kernel_matrix(spec, xs) + 0.01 * np.eye(40)
        ys = true_slope * xs[:, 0] + cholesky(cov).lower @ rng.standard_normal(40)
        result = fit_hyperparameters(xs, ys, SE, seeds=8, basis=basis, rng_seed=13)
        assert result.mean.coefficients[0] == pytest.approx(true_slope, abs=0.5)

    def test_matern_family_fit_runs(self, rng):
        xs, ys = sample_gp_data(rng, n=20)
        result = fit_hyperparameters(xs, ys, KernelFamily.MATERN, seeds=4, nu=2.5, rng_seed=9)
        assert result.kernel.family is KernelFamily.MATERN
        assert result.kernel.nu == 2.5
        assert math.isfinite(result.reduced_lml)
