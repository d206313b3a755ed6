"""Multivariate-normal conditioning and the shared linear-algebra substrate.

Everything downstream (surrogate fitting, prediction, acquisition values)
reduces to factor-and-solve operations on symmetric positive-definite
matrices, so the jitter policy and the triangular solves live here in one
place.  Conditioning never forms an explicit matrix inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import get_lapack_funcs

from .errors import DimensionMismatch, NotPositiveDefinite, SingularBlock

# cached float64 LAPACK handles; scipy.linalg.solve_triangular adds
# ~10us of per-call validation, which dominates at our matrix sizes
_TRTRS = get_lapack_funcs(("trtrs",), (np.empty((1, 1)), np.empty(1)))[0]
_TRCON = get_lapack_funcs(("trcon",), (np.empty((1, 1)),))[0]

# Jitter escalation: diagonal += JITTER_START * mean(diag), growing by x10
# per retry until JITTER_MAX * mean(diag); beyond that the matrix is treated
# as genuinely degenerate.
JITTER_START = 1e-10
JITTER_MAX = 1e-6

SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor L with ``L @ L.T`` equal to the input matrix.

    ``jitter`` records the diagonal inflation (absolute) that was required
    to make the factorization succeed; 0.0 for a cleanly positive-definite
    input.  ``rcond`` is LAPACK's reciprocal 1-norm condition estimate of
    L, letting consumers judge how much accuracy survives a solve.
    """

    lower: NDArray[np.float64]
    jitter: float = 0.0
    rcond: float = 1.0

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def condition_estimate(self) -> float:
        """Rough condition number of the factored matrix, (1/rcond)^2."""
        return (1.0 / max(self.rcond, 1e-150)) ** 2

    def log_det(self) -> float:
        """log-determinant of the factored matrix, 2 * sum(log L_ii)."""
        return 2.0 * float(np.sum(np.log(np.diag(self.lower))))


@dataclass(frozen=True)
class MvnDistribution:
    """A k-variate normal given by its mean vector and covariance matrix."""

    mean: NDArray[np.float64]
    covariance: NDArray[np.float64]

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.covariance, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise DimensionMismatch(f"covariance must be square, got {cov.shape}")
        if mean.shape[0] != cov.shape[0]:
            raise DimensionMismatch(
                f"mean length {mean.shape[0]} != covariance dim {cov.shape[0]}"
            )
        scale = np.max(np.abs(cov)) or 1.0
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_RTOL * scale:
            raise DimensionMismatch("covariance is not symmetric")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def cholesky(matrix: NDArray[np.float64]) -> CholeskyFactor:
    """Factor a symmetric PSD matrix as L @ L.T with escalating jitter.

    A failed (or relatively negligible) pivot triggers a restart with
    ``diag += 1e-10 * mean(diag)``, escalating tenfold per retry up to
    ``1e-6 * mean(diag)``.

    Raises
    ------
    NotPositiveDefinite
        If a pivot is still non-positive at the maximum jitter.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    mean_diag = float(np.mean(np.diag(a)))
    jitter = 0.0
    level = JITTER_START
    while True:
        try:
            lower = np.linalg.cholesky(a if jitter == 0.0 else a + jitter * np.eye(a.shape[0]))
            rcond, info = _TRCON(lower, norm="1", uplo="L", diag="N")
            return CholeskyFactor(
                lower=lower, jitter=jitter, rcond=float(rcond) if info == 0 else 0.0
            )
        except np.linalg.LinAlgError:
            if level > JITTER_MAX:
                raise NotPositiveDefinite(
                    f"matrix not positive definite after jitter up to "
                    f"{JITTER_MAX:g} * mean(diag)"
                ) from None
            jitter = level * mean_diag
            level *= 10.0


def solve_triangular(
    factor: CholeskyFactor,
    rhs: NDArray[np.float64],
    transposed: bool = False,
) -> NDArray[np.float64]:
    """Solve L x = rhs, or L.T x = rhs when ``transposed`` is set."""
    b = np.asarray(rhs, dtype=float)
    if b.shape[0] != factor.dim:
        raise DimensionMismatch(
            f"rhs has leading dim {b.shape[0]}, factor is {factor.dim}x{factor.dim}"
        )
    x, info = _TRTRS(factor.lower, b, lower=1, trans=1 if transposed else 0)
    if info != 0:  # pragma: no cover - factor diagonals are checked positive
        raise NotPositiveDefinite(f"triangular solve failed with LAPACK code {info}")
    return x


def chol_solve(factor: CholeskyFactor, rhs: NDArray[np.float64]) -> NDArray[np.float64]:
    """Solve (L L.T) x = rhs by two triangular solves."""
    return solve_triangular(factor, solve_triangular(factor, rhs), transposed=True)


def condition(
    joint: MvnDistribution,
    observed_indices,
    observed_values,
) -> MvnDistribution:
    """Condition a joint normal on exact values of some of its components.

    The returned distribution is over the unobserved components, kept in
    their original index order.  ``observed_indices`` may come in any order;
    ``observed_values`` aligns with it.  Implemented via Cholesky solves on
    the observed block, never an explicit inverse.

    Conditioning on an empty index set returns ``joint`` unchanged.
    """
    idx = np.asarray(observed_indices, dtype=int)
    u = np.atleast_1d(np.asarray(observed_values, dtype=float))
    if idx.size == 0:
        return joint
    if idx.size != u.shape[0]:
        raise DimensionMismatch("observed_indices and observed_values lengths differ")
    k = joint.dim
    if np.any(idx < 0) or np.any(idx >= k) or len(set(idx.tolist())) != idx.size:
        raise DimensionMismatch("observed indices must be distinct and in range")

    rest = np.setdiff1d(np.arange(k), idx)
    cov = joint.covariance
    s11 = cov[np.ix_(idx, idx)]
    s21 = cov[np.ix_(rest, idx)]
    s22 = cov[np.ix_(rest, rest)]

    factor = cholesky(s11)
    innovation = u - joint.mean[idx]
    mean = joint.mean[rest] + s21 @ chol_solve(factor, innovation)
    # S22 - S21 S11^-1 S12 = S22 - V.T V with V = L \ S12
    v = solve_triangular(factor, s21.T)
    cov_out = s22 - v.T @ v
    cov_out = 0.5 * (cov_out + cov_out.T)
    return MvnDistribution(mean=mean, covariance=cov_out)


def block_inverse(
    a: NDArray[np.float64],
    b: NDArray[np.float64],
    c: NDArray[np.float64],
    d: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Invert the block matrix [[A, B], [C, D]] via the Schur-complement identity.

    Test oracle for :func:`condition`; production code should use the
    factor-and-solve path instead.

    Raises
    ------
    SingularBlock
        If A, D, or either Schur complement is singular.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    c = np.atleast_2d(np.asarray(c, dtype=float))
    d = np.atleast_2d(np.asarray(d, dtype=float))
    if a.shape[0] != a.shape[1] or d.shape[0] != d.shape[1]:
        raise DimensionMismatch("A and D must be square")
    if b.shape != (a.shape[0], d.shape[1]) or c.shape != (d.shape[0], a.shape[1]):
        raise DimensionMismatch("off-diagonal block shapes do not match A and D")
    try:
        a_inv = np.linalg.inv(a)
        d_inv = np.linalg.inv(d)
        schur_a = np.linalg.inv(a - b @ d_inv @ c)
        schur_d = np.linalg.inv(d - c @ a_inv @ b)
    except np.linalg.LinAlgError as exc:
        raise SingularBlock(str(exc)) from None
    top = np.hstack([schur_a, -schur_a @ b @ d_inv])
    bottom = np.hstack([-schur_d @ c @ a_inv, schur_d])
    return np.vstack([top, bottom])
