"""Design domains: axis-aligned boxes and explicit finite point sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidConfig


@dataclass(frozen=True)
class Box:
    """Axis-aligned box with per-dimension (lo, hi) bounds."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or len(lo) < 1:
            raise InvalidConfig("box bounds must pair one (lo, hi) per dimension")
        if any(a >= b for a, b in zip(lo, hi)):
            raise InvalidConfig("every lower bound must be strictly below its upper bound")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def widths(self) -> NDArray[np.float64]:
        return np.asarray(self.hi) - np.asarray(self.lo)

    def contains(self, x) -> bool:
        p = np.atleast_1d(np.asarray(x, dtype=float))
        return p.shape[0] == self.dim and bool(
            np.all(p >= np.asarray(self.lo)) and np.all(p <= np.asarray(self.hi))
        )

    def clip(self, xs: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.clip(xs, np.asarray(self.lo), np.asarray(self.hi))

    def grid(self, max_points: int) -> NDArray[np.float64]:
        """Tensor grid with per-dimension density floor(max_points^(1/d))."""
        per_dim = max(2, int(max_points ** (1.0 / self.dim)))
        axes = [np.linspace(a, b, per_dim) for a, b in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True)
class FiniteSet:
    """Explicit finite collection of feasible design points."""

    points: NDArray[np.float64]

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] < 1:
            raise InvalidConfig("finite domain must contain at least one point")
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def contains(self, x) -> bool:
        p = np.atleast_1d(np.asarray(x, dtype=float))
        if p.shape[0] != self.dim:
            return False
        return bool(np.any(np.all(self.points == p[None, :], axis=1)))


Domain = Box | FiniteSet
