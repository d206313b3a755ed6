"""Value-of-information acquisition functions and their maximization.

Expected improvement is evaluated in closed form from the marginal
posterior.  The knowledge-gradient factor reduces to the expectation of the
maximum of finitely many linear functions of one standard normal variable;
that expectation is computed exactly from the upper envelope of the lines.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.special
from numpy.typing import NDArray
from scipy.stats import qmc

from . import mvn
from .domains import Box, Domain, FiniteSet
from .errors import EmptyCandidateSet, NoisyPosterior
from .gp import GpPosterior, predict_mean_var
from .kernels import kernel_matrix

SIGMA_FLOOR = 1e-12
N_PROBE = 1024
N_STARTS = 32
MAX_ASCENT_ITERATIONS = 200

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class Policy(enum.Enum):
    EI = "ei"
    KG = "kg"
    AKG = "akg"


@dataclass(frozen=True)
class Acquisition:
    """A sampling policy plus its candidate-set strategy.

    ``candidates`` holds an explicit full candidate grid for the
    knowledge-gradient policy; when omitted, candidate sets are built from
    the sampled history (the proposed point is always included on the
    next-stage side).  ``plugin_fstar`` opts into the max-observed-response
    plug-in that lets expected improvement run on noisy posteriors for
    comparison studies; it is off by default because that substitution has
    no optimality justification.
    """

    policy: Policy
    candidates: NDArray[np.float64] | None = None
    plugin_fstar: bool = False

    def __post_init__(self):
        if self.candidates is not None:
            cand = np.atleast_2d(np.asarray(self.candidates, dtype=float))
            if cand.shape[0] < 1:
                raise EmptyCandidateSet("candidate grid is empty")
            if self.policy is Policy.EI:
                raise ValueError("expected improvement does not use a candidate grid")
            object.__setattr__(self, "candidates", cand)


@dataclass(frozen=True)
class LinearEnsemble:
    """Lines a_i + b_i * Z of a scalar standard normal Z."""

    intercepts: NDArray[np.float64]
    slopes: NDArray[np.float64]

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.intercepts, dtype=float))
        b = np.atleast_1d(np.asarray(self.slopes, dtype=float))
        if a.shape != b.shape or a.ndim != 1 or a.shape[0] < 1:
            raise ValueError("intercepts and slopes must be equal-length nonempty vectors")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("ensemble entries must be finite")
        object.__setattr__(self, "intercepts", a)
        object.__setattr__(self, "slopes", b)


def _phi(z):
    # pdf and cdf are exactly 0/1 in doubles beyond |z| ~ 39
    return np.exp(-0.5 * np.square(np.clip(z, -40.0, 40.0))) / _SQRT_2PI


def _cdf(z):
    return scipy.special.ndtr(np.clip(z, -40.0, 40.0))


def expected_improvement(mu_n, sigma_n, f_star: float):
    """E[(value - f_star)^+] for value ~ Normal(mu_n, sigma_n^2).

    Vectorizes over (mu_n, sigma_n).  Standard deviations below 1e-12 are
    treated as exactly zero, returning max(mu_n - f_star, 0).
    """
    mu = np.asarray(mu_n, dtype=float)
    sigma = np.asarray(sigma_n, dtype=float)
    if np.any(sigma < 0):
        raise ValueError("sigma_n must be nonnegative")
    scalar = mu.ndim == 0 and sigma.ndim == 0
    mu, sigma = np.atleast_1d(mu), np.atleast_1d(sigma)
    delta = mu - f_star
    degenerate = sigma < SIGMA_FLOOR
    safe_sigma = np.where(degenerate, 1.0, sigma)
    u = delta / safe_sigma
    out = np.where(degenerate, np.maximum(delta, 0.0), delta * _cdf(u) + sigma * _phi(u))
    return float(out[0]) if scalar else out


def ei_values(posterior: GpPosterior, xs, plugin_fstar: bool = False) -> NDArray[np.float64]:
    """Expected improvement over the best observed response, batched."""
    if posterior.training.noise_variance > 0.0 and not plugin_fstar:
        raise NoisyPosterior(
            "expected improvement needs a noise-free posterior; "
            "pass plugin_fstar=True to force the max-response plug-in"
        )
    f_star = float(np.max(posterior.training.ys))
    means, variances = predict_mean_var(posterior, xs)
    return expected_improvement(means, np.sqrt(variances), f_star)


def ei_over_posterior(posterior: GpPosterior, x, plugin_fstar: bool = False) -> float:
    return float(ei_values(posterior, [np.atleast_1d(np.asarray(x, dtype=float))], plugin_fstar)[0])


def _envelope(a: NDArray[np.float64], b: NDArray[np.float64]):
    """Surviving (a, b) of the upper envelope, sorted by ascending slope."""
    pairs = np.unique(np.column_stack([b, a]), axis=0)  # sorts by slope, then intercept
    b_sorted, a_sorted = pairs[:, 0], pairs[:, 1]
    # among equal slopes only the largest intercept can win
    keep_last = np.append(b_sorted[1:] != b_sorted[:-1], True)
    b_sorted, a_sorted = b_sorted[keep_last], a_sorted[keep_last]

    stack: list[int] = []
    for j in range(b_sorted.shape[0]):
        while len(stack) >= 2:
            l, m = stack[-2], stack[-1]
            c_lj = (a_sorted[l] - a_sorted[j]) / (b_sorted[j] - b_sorted[l])
            c_lm = (a_sorted[l] - a_sorted[m]) / (b_sorted[m] - b_sorted[l])
            if c_lj <= c_lm:
                stack.pop()
            else:
                break
        stack.append(j)
    idx = np.asarray(stack)
    return a_sorted[idx], b_sorted[idx]


def expected_max_linear(ensemble: LinearEnsemble) -> float:
    """E[max_i (a_i + b_i Z)] - max_i a_i for standard normal Z.

    Exact: duplicate and dominated lines are discarded, and each breakpoint
    c between neighbors on the upper envelope contributes
    (b_next - b_prev) * f(-|c|) with f(z) = pdf(z) + z * cdf(z).
    """
    a, b = _envelope(ensemble.intercepts, ensemble.slopes)
    if a.shape[0] <= 1:
        return 0.0
    c = (a[:-1] - a[1:]) / (b[1:] - b[:-1])
    z = -np.abs(c)
    return float(np.sum((b[1:] - b[:-1]) * (_phi(z) + z * _cdf(z))))


def _posterior_cross(posterior: GpPosterior, pts: NDArray[np.float64]):
    """Whitened cross-covariance block, L \\ K0(train, pts)."""
    cross = kernel_matrix(posterior.kernel, posterior.training.xs, pts)
    return mvn.solve_triangular(posterior.chol, cross)


def sigma_tilde_values(posterior: GpPosterior, xs, x_next) -> NDArray[np.float64]:
    """Slope of the posterior-mean update at each x for a sample at x_next.

    This is Cov_n(x, x_next) / sqrt(Var_n(x_next) + noise); the posterior
    mean after observing at x_next moves by this slope times a standard
    normal draw.
    """
    pts = np.atleast_2d(np.asarray(xs, dtype=float))
    nxt = np.atleast_2d(np.asarray(x_next, dtype=float))
    v_pts = _posterior_cross(posterior, pts)
    v_nxt = _posterior_cross(posterior, nxt)
    cov = kernel_matrix(posterior.kernel, pts, nxt)[:, 0] - v_pts.T @ v_nxt[:, 0]
    var_next = posterior.kernel.amplitude - float(v_nxt[:, 0] @ v_nxt[:, 0])
    denom_sq = var_next + posterior.training.noise_variance
    if denom_sq <= 0.0:
        return np.zeros(pts.shape[0])
    return cov / math.sqrt(denom_sq)


def sigma_tilde(posterior: GpPosterior, x, x_next) -> float:
    return float(sigma_tilde_values(posterior, [np.atleast_1d(np.asarray(x, dtype=float))], x_next)[0])


def knowledge_gradient(posterior: GpPosterior, x_next, a_n, a_next) -> float:
    """One-step expected gain in the best implementable posterior mean.

    ``a_n`` and ``a_next`` are the finite candidate sets from which the
    final recommendation would be drawn before and after the sample at
    ``x_next``.  When the two sets coincide the trailing correction term
    vanishes and the value is nonnegative.
    """
    a_n = np.atleast_2d(np.asarray(a_n, dtype=float))
    a_next_pts = np.atleast_2d(np.asarray(a_next, dtype=float))
    if a_n.shape[0] < 1 or a_next_pts.shape[0] < 1:
        raise EmptyCandidateSet("candidate sets must be nonempty")
    means_next, _ = predict_mean_var(posterior, a_next_pts)
    means_now, _ = predict_mean_var(posterior, a_n)
    slopes = sigma_tilde_values(posterior, a_next_pts, x_next)
    h = expected_max_linear(LinearEnsemble(means_next, slopes))
    return h + float(np.max(means_next) - np.max(means_now))


def acquisition_values(posterior: GpPosterior, acquisition: Acquisition, xs) -> NDArray[np.float64]:
    """Evaluate the acquisition at each of the given points."""
    pts = np.atleast_2d(np.asarray(xs, dtype=float))
    if acquisition.policy is Policy.EI:
        return ei_values(posterior, pts, plugin_fstar=acquisition.plugin_fstar)

    history = posterior.training.xs
    values = np.empty(pts.shape[0])
    if acquisition.policy is Policy.KG and acquisition.candidates is not None:
        cand = acquisition.candidates
        means_cand, _ = predict_mean_var(posterior, cand)
        v_cand = _posterior_cross(posterior, cand)
        prior_cross = kernel_matrix(posterior.kernel, cand, pts)
        v_pts = _posterior_cross(posterior, pts)
        lam = posterior.training.noise_variance
        for i in range(pts.shape[0]):
            var_next = posterior.kernel.amplitude - float(v_pts[:, i] @ v_pts[:, i])
            denom_sq = var_next + lam
            if denom_sq <= 0.0:
                values[i] = 0.0
                continue
            cov = prior_cross[:, i] - v_cand.T @ v_pts[:, i]
            slopes = cov / math.sqrt(denom_sq)
            values[i] = expected_max_linear(LinearEnsemble(means_cand, slopes))
        return values

    for i in range(pts.shape[0]):
        x = pts[i]
        joined = np.vstack([history, x[None, :]])
        if acquisition.policy is Policy.AKG:
            values[i] = knowledge_gradient(posterior, x, joined, joined)
        else:  # KG over the sampled history
            values[i] = knowledge_gradient(posterior, x, history, joined)
    return values


def _ascend(batch_eval, box: Box, starts: NDArray[np.float64], max_iter: int):
    """Projected gradient ascent with step halving, batched over starts."""
    widths = box.widths
    x = box.clip(starts.copy())
    fx = batch_eval(x)
    step = np.full(x.shape[0], 0.1)
    fd = 1e-6 * widths
    for _ in range(max_iter):
        live = step > 1e-10
        if not np.any(live):
            break
        grad = np.zeros_like(x)
        for i in range(box.dim):
            shift = np.zeros(box.dim)
            shift[i] = fd[i]
            grad[:, i] = (batch_eval(x + shift) - batch_eval(x - shift)) / (2.0 * fd[i])
        norms = np.linalg.norm(grad, axis=1)
        moving = live & (norms > 0)
        if not np.any(moving):
            break
        direction = np.zeros_like(grad)
        direction[moving] = grad[moving] / norms[moving, None]
        candidate = box.clip(x + (step[:, None] * direction) * widths[None, :])
        fc = batch_eval(candidate)
        improved = moving & (fc > fx)
        x[improved] = candidate[improved]
        fx[improved] = fc[improved]
        step[improved] = np.minimum(step[improved] * 1.3, 0.5)
        step[~improved & live] *= 0.5
        step[live & ~moving] = 0.0
    return x, fx


def maximize_acquisition(
    posterior: GpPosterior,
    acquisition: Acquisition,
    domain: Domain,
    seed: int = 0,
) -> tuple[NDArray[np.float64], float]:
    """Best point of the domain under the acquisition.

    Finite domains are enumerated exactly (first index wins ties).  Box
    domains take the best of a 1024-point scrambled quasi-random probe and
    projected-gradient ascent launched from the 32 best probe points; the
    returned value is never below the best probe value.
    """

    def batch_eval(points):
        return acquisition_values(posterior, acquisition, points)

    if isinstance(domain, FiniteSet):
        values = batch_eval(domain.points)
        idx = int(np.argmax(values))
        return domain.points[idx].copy(), float(values[idx])

    sampler = qmc.Sobol(d=domain.dim, scramble=True, seed=seed)
    probe = qmc.scale(sampler.random(N_PROBE), domain.lo, domain.hi)
    probe_vals = batch_eval(probe)
    order = np.argsort(-probe_vals, kind="stable")[:N_STARTS]
    starts = probe[order]
    xs, fs = _ascend(batch_eval, domain, starts, MAX_ASCENT_ITERATIONS)

    best = int(np.argmax(fs))
    best_x, best_f = xs[best], float(fs[best])
    top_probe = int(order[0])
    if best_f <= probe_vals[top_probe]:
        return probe[top_probe].copy(), float(probe_vals[top_probe])
    return best_x.copy(), best_f
