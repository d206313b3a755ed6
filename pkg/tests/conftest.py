import numpy as np
import pytest

from bogo.kernels import KernelFamily, KernelSpec, MeanSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_spd(rng, n, jitter=1.0):
    m = rng.normal(size=(n, n))
    return m @ m.T + jitter * np.eye(n)


def gauss_inverse(matrix):
    """Dense inverse by Gauss-Jordan elimination with partial pivoting.

    Independent of every solve path in the package; used only as an oracle.
    """
    a = np.asarray(matrix, dtype=float).copy()
    n = a.shape[0]
    inv = np.eye(n)
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if a[pivot, col] == 0.0:
            raise ZeroDivisionError("singular matrix")
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            inv[[col, pivot]] = inv[[pivot, col]]
        scale = a[col, col]
        a[col] /= scale
        inv[col] /= scale
        for row in range(n):
            if row != col and a[row, col] != 0.0:
                factor = a[row, col]
                a[row] -= factor * a[col]
                inv[row] -= factor * inv[col]
    return inv


def random_se_config(rng, d=None, n=None, noise=0.0, amplitude=None):
    """A random squared-exponential data set + spec for posterior tests."""
    d = d or int(rng.integers(1, 4))
    n = n or int(rng.integers(4, 12))
    xs = rng.uniform(-1.0, 1.0, size=(n, d))
    amplitude = amplitude or float(rng.uniform(0.5, 3.0))
    beta = tuple(float(b) for b in rng.uniform(0.5, 4.0, size=d))
    kernel = KernelSpec(KernelFamily.SQUARED_EXPONENTIAL, amplitude, beta)
    mean = MeanSpec(constant=float(rng.normal()))
    ys = rng.normal(size=n)
    return xs, ys, kernel, mean, noise
