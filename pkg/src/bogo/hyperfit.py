"""Empirical-Bayes hyperparameter estimation.

The constant mean and the total variance are profiled out analytically,
leaving a reduced objective over the per-dimension beta parameters and the
signal fraction g = amplitude / (amplitude + noise_variance).  That reduced
objective is maximized by multistart quasi-Newton ascent in an unconstrained
reparameterization (log beta, logit g) with central finite-difference
gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
from numpy.typing import NDArray
from scipy.stats import qmc

from . import mvn
from .errors import AllStartsFailed, DegenerateResiduals, NotPositiveDefinite
from .kernels import KernelFamily, KernelSpec, MeanSpec, matern_eval, scaled_sq_dist

LOG_BETA_BOUNDS = (-10.0, 10.0)
LOGIT_G_BOUNDS = (-12.0, 12.0)
# g used when fitting with the noise-free flag: close enough to 1 that the
# noise share is negligible, far enough that R stays well conditioned.
NOISE_FREE_G = 1.0 - 1e-9

_FAILED_OBJECTIVE = 1e10
_FD_STEP = 1e-6


@dataclass(frozen=True)
class ProfiledState:
    """Correlation-form quantities at one (betas, g) iterate."""

    g: float
    betas: NDArray[np.float64]
    R: NDArray[np.float64] = field(repr=False)
    mu_hat: float = 0.0
    sigma2_hat: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.g < 1.0:
            raise ValueError("g must lie strictly inside (0, 1)")
        if self.sigma2_hat <= 0.0:
            raise ValueError("sigma2_hat must be positive")


@dataclass(frozen=True)
class FitResult:
    """Estimated kernel, mean, and noise, with the multistart trace."""

    kernel: KernelSpec
    mean: MeanSpec
    noise_variance: float
    reduced_lml: float
    g: float
    sigma2: float
    optimizer_trace: list[tuple[NDArray[np.float64], float]] = field(repr=False)


class _Dataset:
    """Caches data-dependent pieces reused across the optimizer's R rebuilds."""

    def __init__(self, xs, ys, family: KernelFamily, nu: float | None):
        self.xs = np.atleast_2d(np.asarray(xs, dtype=float))
        self.ys = np.atleast_1d(np.asarray(ys, dtype=float))
        self.family = family
        self.nu = nu
        self.profile_rhs = np.column_stack([self.ys, np.ones(self.ys.shape[0])])

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def correlation(self, betas: NDArray[np.float64]) -> NDArray[np.float64]:
        """Unit-amplitude kernel matrix for the current betas."""
        if self.family is KernelFamily.SQUARED_EXPONENTIAL:
            c = np.exp(-scaled_sq_dist(self.xs, self.xs, np.sqrt(betas)))
        else:
            unit = KernelSpec(KernelFamily.MATERN, 1.0, tuple(betas), nu=self.nu)
            r = np.sqrt(scaled_sq_dist(self.xs, self.xs, 1.0 / betas))
            c = np.asarray(matern_eval(unit, r.ravel())).reshape(self.n, self.n)
        np.fill_diagonal(c, 1.0)
        return c


def correlation_matrix(betas, g: float, xs, family: KernelFamily, nu: float | None = None):
    """R with unit diagonal and off-diagonal entries g * correlation(x_i, x_j)."""
    betas = np.asarray(betas, dtype=float)
    ds = _Dataset(xs, np.zeros(np.atleast_2d(np.asarray(xs)).shape[0]), family, nu)
    r = g * ds.correlation(betas)
    np.fill_diagonal(r, 1.0)
    return r


def mu_hat(R, ys) -> float:
    """Constant mean maximizing the marginal likelihood at fixed R."""
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    factor = mvn.cholesky(np.asarray(R, dtype=float))
    w = mvn.chol_solve(factor, ys)
    s = mvn.chol_solve(factor, np.ones_like(ys))
    return float(np.sum(w) / np.sum(s))


def sigma2_hat(R, ys, mu: float) -> float:
    """Total-variance estimate (1/n) (y - mu)' R^-1 (y - mu)."""
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    factor = mvn.cholesky(np.asarray(R, dtype=float))
    resid = ys - mu
    value = float(resid @ mvn.chol_solve(factor, resid)) / ys.shape[0]
    if value < 1e-300:
        raise DegenerateResiduals("residual variance collapsed; responses are constant")
    return value


def _profile(dataset: _Dataset, betas: NDArray[np.float64], g: float) -> tuple[ProfiledState, float]:
    r = g * dataset.correlation(betas)
    np.fill_diagonal(r, 1.0)
    factor = mvn.cholesky(r)
    sol = mvn.chol_solve(factor, dataset.profile_rhs)
    w, s = sol[:, 0], sol[:, 1]
    mu = float(np.sum(w) / np.sum(s))
    # R^-1 (y - mu) = w - mu * s, so no third solve is needed
    sigma2 = float((dataset.ys - mu) @ (w - mu * s)) / dataset.n
    if sigma2 < 1e-300:
        raise DegenerateResiduals("residual variance collapsed; responses are constant")
    value = -(factor.log_det() / dataset.n + math.log(sigma2))
    state = ProfiledState(g=g, betas=betas, R=r, mu_hat=mu, sigma2_hat=sigma2)
    return state, value


def reduced_lml(betas, g: float, xs, ys, family: KernelFamily = KernelFamily.SQUARED_EXPONENTIAL,
                nu: float | None = None) -> float:
    """Profiled log marginal likelihood, -log(|R|^(1/n) * sigma2_hat).

    Maximizers agree with the full log marginal likelihood; the two differ
    by a positive affine rescaling that depends only on n.
    """
    dataset = _Dataset(xs, ys, family, nu)
    betas = np.atleast_1d(np.asarray(betas, dtype=float))
    if betas.shape[0] != dataset.dim:
        raise ValueError(f"expected {dataset.dim} betas, got {betas.shape[0]}")
    if not 0.0 < g < 1.0:
        raise ValueError("g must lie strictly inside (0, 1)")
    return _profile(dataset, betas, g)[1]


def _sigmoid(t: float) -> float:
    return 1.0 / (1.0 + math.exp(-t)) if t >= 0 else math.exp(t) / (1.0 + math.exp(t))


def _central_fd_grad(fn, x: NDArray[np.float64]) -> NDArray[np.float64]:
    grad = np.empty_like(x)
    for i in range(x.shape[0]):
        h = _FD_STEP * max(1.0, abs(x[i]))
        up = x.copy()
        dn = x.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (fn(up) - fn(dn)) / (2.0 * h)
    return grad


def fit_hyperparameters(
    xs,
    ys,
    family: KernelFamily = KernelFamily.SQUARED_EXPONENTIAL,
    seeds: int = 16,
    *,
    nu: float = 2.5,
    noise_free: bool = False,
    basis=(),
    rng_seed: int = 0,
) -> FitResult:
    """Maximize the reduced log marginal likelihood by multistart ascent.

    ``seeds`` is the number of multistart initial points, drawn from a
    scrambled Sobol sequence over the search bounds; the run is
    deterministic given (data, seeds, rng_seed).  With ``noise_free`` the
    signal fraction is pinned just below one and the returned noise
    variance is exactly zero.  Trend coefficients for ``basis`` functions,
    when given, are appended to the numeric search vector.
    """
    if seeds < 1:
        raise ValueError("seeds must be >= 1")
    dataset = _Dataset(xs, ys, family, nu if family is KernelFamily.MATERN else None)
    if dataset.n < 3:
        raise ValueError("hyperparameter fitting needs at least 3 observations")
    if float(np.ptp(dataset.ys)) == 0.0:
        raise DegenerateResiduals("responses are constant; no variance to attribute")
    d = dataset.dim
    basis = tuple(basis)
    n_trend = len(basis)
    design = (
        np.array([[float(fn(p)) for fn in basis] for p in dataset.xs])
        if n_trend
        else np.zeros((dataset.n, 0))
    )

    n_free = d + (0 if noise_free else 1) + n_trend

    def unpack(vec: NDArray[np.float64]):
        betas = np.exp(vec[:d])
        g = NOISE_FREE_G if noise_free else _sigmoid(vec[d])
        gammas = vec[d + (0 if noise_free else 1):]
        return betas, g, gammas

    def objective(vec: NDArray[np.float64]) -> float:
        betas, g, gammas = unpack(vec)
        ys_work = dataset.ys - design @ gammas if n_trend else dataset.ys
        work = _Dataset(dataset.xs, ys_work, dataset.family, dataset.nu) if n_trend else dataset
        try:
            return -_profile(work, betas, g)[1]
        except (NotPositiveDefinite, DegenerateResiduals):
            return _FAILED_OBJECTIVE

    lo = [LOG_BETA_BOUNDS[0]] * d + ([] if noise_free else [LOGIT_G_BOUNDS[0]]) + [-10.0] * n_trend
    hi = [LOG_BETA_BOUNDS[1]] * d + ([] if noise_free else [LOGIT_G_BOUNDS[1]]) + [10.0] * n_trend
    sampler = qmc.Sobol(d=n_free, scramble=True, seed=rng_seed)
    pool = sampler.random(1 << math.ceil(math.log2(max(seeds, 1))) if seeds > 1 else 1)
    starts = qmc.scale(pool[:seeds], lo, hi)

    trace: list[tuple[NDArray[np.float64], float]] = []
    best_vec: NDArray[np.float64] | None = None
    best_val = math.inf
    for x0 in starts:
        res = scipy.optimize.minimize(
            objective,
            x0,
            jac=lambda v: _central_fd_grad(objective, v),
            method="L-BFGS-B",
            bounds=list(zip(lo, hi)),
        )
        trace.append((np.asarray(res.x), -float(res.fun)))
        if res.fun < best_val:
            best_val = float(res.fun)
            best_vec = np.asarray(res.x)
    if best_vec is None or best_val >= _FAILED_OBJECTIVE:
        raise AllStartsFailed("no multistart point produced a usable likelihood value")

    betas, g, gammas = unpack(best_vec)
    ys_work = dataset.ys - design @ gammas if n_trend else dataset.ys
    work = _Dataset(dataset.xs, ys_work, dataset.family, dataset.nu) if n_trend else dataset
    state, value = _profile(work, betas, g)
    if noise_free:
        amplitude, noise = state.sigma2_hat, 0.0
        g_out = 1.0
    else:
        amplitude = g * state.sigma2_hat
        noise = (1.0 - g) * state.sigma2_hat
        g_out = g
    kernel = KernelSpec(
        family=family,
        amplitude=amplitude,
        beta=tuple(betas),
        nu=nu if family is KernelFamily.MATERN else None,
    )
    mean = MeanSpec(constant=state.mu_hat, basis=basis, coefficients=tuple(gammas))
    return FitResult(
        kernel=kernel,
        mean=mean,
        noise_variance=noise,
        reduced_lml=value,
        g=g_out,
        sigma2=state.sigma2_hat,
        optimizer_trace=trace,
    )
