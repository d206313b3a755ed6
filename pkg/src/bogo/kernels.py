"""Covariance kernels and prior mean functions.

Two stationary families are provided: the squared-exponential kernel

    amplitude * exp(-sum_i beta_i * (x_i - x'_i)^2)

and the Matern kernel, defined through the scaled distance

    r = sqrt(sum_i ((x_i - x'_i) / beta_i)^2)

as ``amplitude * 2^(1-nu)/Gamma(nu) * (sqrt(2 nu) r)^nu * K_nu(sqrt(2 nu) r)``.

Note the deliberate asymmetry: the squared-exponential treats ``beta`` as
inverse-square coefficients while the Matern treats it as per-dimension
length-scale divisors.  Both conventions are kept as-is; no implicit
conversion between them is applied anywhere in the package.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .bessel import log_bessel_k
from .errors import DimensionMismatch, UnsupportedOrder


class KernelFamily(enum.Enum):
    SQUARED_EXPONENTIAL = "squared_exponential"
    MATERN = "matern"


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family plus its hyperparameters.

    ``beta`` holds one positive value per input dimension; its meaning is
    family-dependent (see module docstring).  ``nu`` is the Matern
    smoothness and must be provided for that family.
    """

    family: KernelFamily
    amplitude: float
    beta: tuple[float, ...]
    nu: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if any(b <= 0 for b in self.beta):
            raise ValueError("all beta entries must be positive")
        if self.family is KernelFamily.MATERN:
            if self.nu is None or self.nu <= 0:
                raise ValueError("Matern kernel requires nu > 0")

    @property
    def dim(self) -> int:
        return len(self.beta)

    def to_dict(self) -> dict:
        out = {"family": self.family.value, "amplitude": self.amplitude, "beta": list(self.beta)}
        if self.nu is not None:
            out["nu"] = self.nu
        return out

    @staticmethod
    def from_dict(data: dict) -> "KernelSpec":
        return KernelSpec(
            family=KernelFamily(data["family"]),
            amplitude=float(data["amplitude"]),
            beta=tuple(data["beta"]),
            nu=float(data["nu"]) if data.get("nu") is not None else None,
        )


@dataclass(frozen=True)
class MeanSpec:
    """Constant prior mean plus an optional weighted basis-function trend."""

    constant: float = 0.0
    basis: tuple[Callable[[NDArray[np.float64]], float], ...] = ()
    coefficients: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if len(self.basis) != len(self.coefficients):
            raise DimensionMismatch("basis and coefficients must have equal length")

    @property
    def n_terms(self) -> int:
        return len(self.basis)


def _pairwise_sq_diffs(xs: NDArray, xs2: NDArray) -> NDArray:
    """(d, n, m) tensor of squared per-dimension differences."""
    diff = xs[:, None, :] - xs2[None, :, :]
    return np.moveaxis(diff * diff, -1, 0)


def scaled_sq_dist(xs: NDArray, xs2: NDArray, coord_scales: NDArray) -> NDArray:
    """Pairwise squared distances after per-coordinate rescaling.

    Uses the norm-plus-inner-product expansion (three BLAS calls); tiny
    negative residue on near-coincident pairs is clamped to zero.
    """
    u = xs * coord_scales
    v = xs2 * coord_scales
    d2 = (
        np.sum(u * u, axis=1)[:, None]
        + np.sum(v * v, axis=1)[None, :]
        - 2.0 * (u @ v.T)
    )
    return np.maximum(d2, 0.0, out=d2)


def _as_points(xs, dim: int) -> NDArray[np.float64]:
    arr = np.atleast_2d(np.asarray(xs, dtype=float))
    if arr.shape[1] != dim:
        raise DimensionMismatch(f"points have dimension {arr.shape[1]}, kernel expects {dim}")
    return arr


_SQRT3 = math.sqrt(3.0)
_SQRT5 = math.sqrt(5.0)


def matern_eval(spec: KernelSpec, r) -> float | NDArray[np.float64]:
    """Matern kernel value at scaled distance(s) ``r >= 0``.

    Half-integer smoothness 1/2, 3/2, 5/2 uses the closed forms; any other
    nu goes through the in-repo Bessel evaluation.  The r = 0 limit is the
    amplitude for every nu.
    """
    if spec.family is not KernelFamily.MATERN:
        raise ValueError("matern_eval requires a Matern KernelSpec")
    nu = float(spec.nu)
    alpha = spec.amplitude
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("scaled distance must be nonnegative")
    scalar = r_arr.ndim == 0
    r_arr = np.atleast_1d(r_arr)

    if abs(nu - 0.5) < 1e-12:
        out = alpha * np.exp(-r_arr)
    elif abs(nu - 1.5) < 1e-12:
        z = _SQRT3 * r_arr
        out = alpha * (1.0 + z) * np.exp(-z)
    elif abs(nu - 2.5) < 1e-12:
        z = _SQRT5 * r_arr
        out = alpha * (1.0 + z + z * z / 3.0) * np.exp(-z)
    else:
        log_front = (1.0 - nu) * math.log(2.0) - math.lgamma(nu)
        out = np.empty_like(r_arr)
        for i, ri in enumerate(r_arr):
            if ri == 0.0:
                out[i] = alpha
                continue
            z = math.sqrt(2.0 * nu) * ri
            log_val = log_front + nu * math.log(z) + log_bessel_k(nu, z)
            out[i] = alpha * math.exp(log_val)
    return float(out[0]) if scalar else out


def matern_scaled_distance(spec: KernelSpec, xs, xs2) -> NDArray[np.float64]:
    """Per-dimension length-scaled Euclidean distance matrix."""
    a = _as_points(xs, spec.dim)
    b = _as_points(xs2, spec.dim)
    return np.sqrt(scaled_sq_dist(a, b, 1.0 / np.asarray(spec.beta, dtype=float)))


def kernel_matrix(spec: KernelSpec, xs, xs2=None) -> NDArray[np.float64]:
    """Covariance matrix between two point lists (Gram matrix when xs2 is None)."""
    a = _as_points(xs, spec.dim)
    b = a if xs2 is None else _as_points(xs2, spec.dim)
    if spec.family is KernelFamily.SQUARED_EXPONENTIAL:
        d2 = scaled_sq_dist(a, b, np.sqrt(np.asarray(spec.beta, dtype=float)))
        out = spec.amplitude * np.exp(-d2)
    else:
        out = np.asarray(matern_eval(spec, matern_scaled_distance(spec, a, b).ravel())).reshape(
            a.shape[0], b.shape[0]
        )
    if xs2 is None:
        out = 0.5 * (out + out.T)
    return out


def kernel_eval(spec: KernelSpec, x, x2) -> float:
    """Covariance between the function values at two design points."""
    return float(kernel_matrix(spec, [np.asarray(x, dtype=float)], [np.asarray(x2, dtype=float)])[0, 0])


def mean_eval(spec: MeanSpec, x) -> float:
    """Prior mean at a design point: constant plus the weighted basis terms."""
    point = np.atleast_1d(np.asarray(x, dtype=float))
    total = spec.constant
    for coeff, fn in zip(spec.coefficients, spec.basis):
        total += coeff * float(fn(point))
    return total


def mean_vector(spec: MeanSpec, xs) -> NDArray[np.float64]:
    pts = np.atleast_2d(np.asarray(xs, dtype=float))
    if spec.n_terms == 0:
        return np.full(pts.shape[0], spec.constant)
    return np.array([mean_eval(spec, p) for p in pts])


def _monomial(power: tuple[int, ...]) -> Callable[[NDArray[np.float64]], float]:
    def fn(x: NDArray[np.float64]) -> float:
        return float(np.prod(np.asarray(x, dtype=float) ** np.asarray(power)))

    fn.powers = power  # type: ignore[attr-defined]
    return fn


def polynomial_basis(d: int, order: int) -> list[Callable[[NDArray[np.float64]], float]]:
    """Monomial trend basis up to the given order (1 or 2, constant excluded).

    Order 2 lists the d linear terms, then the d squares, then the
    cross-products x_i * x_j for i < j in lexicographic order: for d = 2
    that is [x1, x2, x1^2, x2^2, x1*x2].
    """
    if d < 1:
        raise DimensionMismatch("dimension must be >= 1")
    if order not in (1, 2):
        raise UnsupportedOrder(f"polynomial basis supports order 1 or 2, got {order}")
    powers: list[tuple[int, ...]] = [tuple(1 if j == i else 0 for j in range(d)) for i in range(d)]
    if order == 2:
        powers += [tuple(2 if j == i else 0 for j in range(d)) for i in range(d)]
        for i in range(d):
            for j in range(i + 1, d):
                powers.append(tuple(1 if k in (i, j) else 0 for k in range(d)))
    return [_monomial(p) for p in powers]
