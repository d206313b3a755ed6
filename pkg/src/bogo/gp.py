"""Gaussian-process surrogate: prior assembly and posterior prediction.

Fitting factors the (optionally noise-inflated) Gram matrix once and caches
the Cholesky factor together with the solve vector, so that predictions at
any number of query points are cheap matrix-vector work.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import mvn
from .errors import DimensionMismatch, NumericalError
from .kernels import KernelSpec, MeanSpec, kernel_matrix, mean_vector

log = logging.getLogger(__name__)

# Predicted variances in [-HARD_FLOOR * amplitude, 0) are rounding residue
# and clamp to zero; anything below that indicates a broken posterior.
VARIANCE_HARD_FLOOR = 1e-6


@dataclass(frozen=True)
class TrainingSet:
    """Design points, responses, and the observation-noise variance.

    With zero noise variance, exact duplicate design points are redundant
    (their responses are pinned), so all but the first occurrence are
    dropped with a warning.  With positive noise, replicates carry real
    information and are kept.
    """

    xs: NDArray[np.float64]
    ys: NDArray[np.float64]
    noise_variance: float = 0.0

    def __post_init__(self):
        xs = np.atleast_2d(np.asarray(self.xs, dtype=float))
        ys = np.atleast_1d(np.asarray(self.ys, dtype=float))
        if xs.shape[0] != ys.shape[0]:
            raise DimensionMismatch(f"{xs.shape[0]} design points but {ys.shape[0]} responses")
        if xs.shape[0] < 1:
            raise DimensionMismatch("training set needs at least one observation")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be nonnegative")
        if self.noise_variance == 0.0:
            seen: dict[tuple, int] = {}
            keep = []
            for i, row in enumerate(xs):
                key = tuple(float(v) for v in row)
                if key in seen:
                    warnings.warn(
                        f"dropping duplicate noise-free design point at index {i}",
                        stacklevel=2,
                    )
                    continue
                seen[key] = i
                keep.append(i)
            if len(keep) != xs.shape[0]:
                xs = xs[keep]
                ys = ys[keep]
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]


@dataclass(frozen=True)
class JointPrediction:
    """Posterior mean vector and covariance matrix at k query points."""

    mean: NDArray[np.float64]
    covariance: NDArray[np.float64]

    def __post_init__(self):
        cov = np.asarray(self.covariance, dtype=float)
        cov = 0.5 * (cov + cov.T)
        diag = np.diag(cov).copy()
        np.fill_diagonal(cov, np.where(diag < 0.0, 0.0, diag))
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=float)))
        object.__setattr__(self, "covariance", cov)


@dataclass(frozen=True)
class GpPosterior:
    """Immutable fitted state answering predictive queries.

    ``chol`` factors the Gram matrix plus noise, and ``delta`` solves
    (Gram + noise * I) delta = ys - prior_mean(xs).
    """

    training: TrainingSet
    kernel: KernelSpec
    mean: MeanSpec
    chol: mvn.CholeskyFactor
    delta: NDArray[np.float64] = field(repr=False)

    @property
    def n(self) -> int:
        return self.training.n


def fit(training: TrainingSet, kernel: KernelSpec, mean: MeanSpec = MeanSpec()) -> GpPosterior:
    """Factor the training Gram matrix and cache the solve vector."""
    if kernel.dim != training.dim:
        raise DimensionMismatch(
            f"kernel dimension {kernel.dim} != training dimension {training.dim}"
        )
    gram = kernel_matrix(kernel, training.xs)
    if training.noise_variance > 0.0:
        gram = gram + training.noise_variance * np.eye(training.n)
    factor = mvn.cholesky(gram)
    residual = training.ys - mean_vector(mean, training.xs)
    delta = mvn.chol_solve(factor, residual)
    return GpPosterior(training=training, kernel=kernel, mean=mean, chol=factor, delta=delta)


def _clamp_variances(
    variances: NDArray[np.float64], amplitude: float, factor: mvn.CholeskyFactor | None = None
) -> NDArray[np.float64]:
    # negative residue that conditioning can explain is clamped; a deficit
    # beyond what the factor's condition estimate allows is a real bug
    floor = VARIANCE_HARD_FLOOR * amplitude
    if factor is not None:
        eps_cond = 50.0 * 2.3e-16 * factor.condition_estimate()
        floor = max(floor, eps_cond * amplitude) + 10.0 * factor.jitter
    low = float(np.min(variances)) if variances.size else 0.0
    if low < -floor:
        raise NumericalError(
            f"predicted variance {low:g} below -{floor:g}; posterior state is inconsistent"
        )
    if low < 0.0:
        log.debug("clamping negative predicted variance %.3e to 0", low)
    return np.maximum(variances, 0.0)


def predict_mean_var(posterior: GpPosterior, xs) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Batched marginal posterior (means, variances) at query points."""
    pts = np.atleast_2d(np.asarray(xs, dtype=float))
    if pts.shape[1] != posterior.training.dim:
        raise DimensionMismatch(
            f"query dimension {pts.shape[1]} != training dimension {posterior.training.dim}"
        )
    cross = kernel_matrix(posterior.kernel, posterior.training.xs, pts)
    means = mean_vector(posterior.mean, pts) + cross.T @ posterior.delta
    v = mvn.solve_triangular(posterior.chol, cross)
    variances = posterior.kernel.amplitude - np.sum(v * v, axis=0)
    return means, _clamp_variances(variances, posterior.kernel.amplitude, posterior.chol)


def predict(posterior: GpPosterior, x_star) -> tuple[float, float]:
    """Posterior mean and variance of the latent function at one point."""
    means, variances = predict_mean_var(posterior, [np.atleast_1d(np.asarray(x_star, dtype=float))])
    return float(means[0]), float(variances[0])


def predict_joint(posterior: GpPosterior, x_stars) -> JointPrediction:
    """Joint posterior over k query points, including cross-covariances."""
    pts = np.atleast_2d(np.asarray(x_stars, dtype=float))
    if pts.shape[0] < 1:
        raise DimensionMismatch("need at least one query point")
    cross = kernel_matrix(posterior.kernel, posterior.training.xs, pts)
    means = mean_vector(posterior.mean, pts) + cross.T @ posterior.delta
    v = mvn.solve_triangular(posterior.chol, cross)
    cov = kernel_matrix(posterior.kernel, pts) - v.T @ v
    return JointPrediction(mean=means, covariance=cov)


def log_marginal_likelihood(posterior: GpPosterior) -> float:
    """Log probability of the responses under the prior, from the cached factor."""
    residual = posterior.training.ys - mean_vector(posterior.mean, posterior.training.xs)
    n = posterior.n
    return float(
        -0.5 * residual @ posterior.delta
        - np.sum(np.log(np.diag(posterior.chol.lower)))
        - 0.5 * n * math.log(2.0 * math.pi)
    )
