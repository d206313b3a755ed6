"""Modified Bessel function of the second kind, K_nu, evaluated in log space.

Branch structure:

* half-integer order (nu = m + 1/2, m <= 29): exact finite sum,
* large order (nu >= 30): uniform large-order asymptotic expansion with
  Debye polynomials generated exactly from their recursion,
* otherwise: reduction to order mu in [-1/2, 1/2] via stable upward
  recurrence, with the order-mu seed from a power series (x < 2) or a
  Steed continued fraction (x >= 2).

Working in log space keeps the order-10^4 regime used by the
squared-exponential limit of the Matern kernel inside double range.
"""

from __future__ import annotations

import math
from fractions import Fraction

_EPS = 1e-16
_MAXIT = 10000
_LOG_RESCALE = math.log(1e250)

# Order threshold for the uniform asymptotic branch.  With Debye
# polynomials through u_6 the truncation error there is ~|u_7|/nu^7,
# below 1e-9 at nu = 30.
NU_UNIFORM = 30.0
_N_DEBYE = 7


def _debye_polynomials(count: int) -> list[dict[int, float]]:
    """First ``count`` Debye polynomials u_k(t), exact-rational recursion.

    u_0 = 1;  u_{k+1}(t) = t^2 (1 - t^2) u_k'(t) / 2
                           + (1/8) * integral_0^t (1 - 5 s^2) u_k(s) ds.
    """
    polys: list[dict[int, Fraction]] = [{0: Fraction(1)}]
    for _ in range(count - 1):
        u = polys[-1]
        nxt: dict[int, Fraction] = {}

        def add(power: int, coeff: Fraction) -> None:
            if coeff:
                nxt[power] = nxt.get(power, Fraction(0)) + coeff

        for p, c in u.items():
            if p > 0:
                # t^2 (1 - t^2) u' / 2
                add(p + 1, Fraction(p, 2) * c)
                add(p + 3, -Fraction(p, 2) * c)
            # (1/8) * integral of (1 - 5 s^2) u
            add(p + 1, c / (8 * (p + 1)))
            add(p + 3, -5 * c / (8 * (p + 3)))
        polys.append(nxt)
    return [{p: float(c) for p, c in poly.items()} for poly in polys]


_DEBYE = _debye_polynomials(_N_DEBYE)


def _poly_eval(poly: dict[int, float], t: float) -> float:
    return sum(c * t**p for p, c in poly.items())


def _log_k_uniform(nu: float, x: float) -> float:
    """Uniform large-order expansion of log K_nu(nu * z) for nu >= ~30."""
    z = x / nu
    root = math.sqrt(1.0 + z * z)
    eta = root + math.log(z / (1.0 + root))
    t = 1.0 / root
    series = 0.0
    sign = 1.0
    for k in range(_N_DEBYE):
        series += sign * _poly_eval(_DEBYE[k], t) / nu**k
        sign = -sign
    return 0.5 * math.log(math.pi / (2.0 * nu)) - nu * eta - 0.5 * math.log(root) + math.log(series)


def _log_k_half_integer(m: int, x: float) -> float:
    """log K_{m+1/2}(x) from the exact finite sum, stable via logsumexp."""
    logs = [
        math.lgamma(m + j + 1) - math.lgamma(j + 1) - math.lgamma(m - j + 1) - j * math.log(2.0 * x)
        for j in range(m + 1)
    ]
    top = max(logs)
    lse = top + math.log(sum(math.exp(v - top) for v in logs))
    return 0.5 * math.log(math.pi / (2.0 * x)) - x + lse


def _gammas(mu: float) -> tuple[float, float, float, float]:
    """Helpers for the Temme series at order |mu| <= 1/2.

    Returns (gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu)) with
    gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu) continued through mu=0.
    """
    gampl = 1.0 / math.gamma(1.0 + mu)
    gammi = 1.0 / math.gamma(1.0 - mu)
    if abs(mu) >= 1e-5:
        gam1 = (gammi - gampl) / (2.0 * mu)
    else:
        # even Taylor expansion around mu = 0
        euler = 0.5772156649015329
        zeta2 = math.pi**2 / 6.0
        zeta3 = 1.2020569031595943
        c3 = zeta3 / 3.0 - euler * zeta2 / 2.0 + euler**3 / 6.0
        gam1 = -euler - c3 * mu * mu
    gam2 = 0.5 * (gammi + gampl)
    return gam1, gam2, gampl, gammi


def _k_seed_series(mu: float, x: float) -> tuple[float, float]:
    """(K_mu, K_{mu+1}) for x < 2 via the Temme power series."""
    x2 = 0.5 * x
    pimu = math.pi * mu
    fact = pimu / math.sin(pimu) if abs(pimu) > _EPS else 1.0
    d = -math.log(x2)
    e = mu * d
    fact2 = math.sinh(e) / e if abs(e) > _EPS else 1.0
    gam1, gam2, gampl, gammi = _gammas(mu)
    ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
    total = ff
    e = math.exp(e)
    p = 0.5 * e / gampl
    q = 0.5 / (e * gammi)
    c = 1.0
    d2 = x2 * x2
    total1 = p
    for i in range(1, _MAXIT + 1):
        ff = (i * ff + p + q) / (i * i - mu * mu)
        c *= d2 / i
        p /= i - mu
        q /= i + mu
        delta = c * ff
        total += delta
        total1 += c * (p - i * ff)
        if abs(delta) < abs(total) * _EPS:
            break
    return total, total1 * (2.0 / x)


def _k_seed_cf(mu: float, x: float) -> tuple[float, float]:
    """(K_mu * e^x, K_{mu+1} * e^x) for x >= 2 via Steed's continued fraction."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25 - mu * mu
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT + 1):
        a -= 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    h = a1 * h
    k_mu = math.sqrt(math.pi / (2.0 * x)) / s
    k_mu1 = k_mu * (mu + x + 0.5 - h) / x
    return k_mu, k_mu1


def log_bessel_k(nu: float, x: float) -> float:
    """Natural log of K_nu(x) for nu >= 0, x > 0."""
    if x <= 0.0:
        raise ValueError("x must be positive")
    nu = abs(float(nu))
    if nu >= NU_UNIFORM:
        return _log_k_uniform(nu, x)
    half = nu - 0.5
    if abs(half - round(half)) < 1e-12 and half >= -1e-12:
        return _log_k_half_integer(int(round(half)), x)

    n_steps = int(nu + 0.5)
    mu = nu - n_steps
    if x < 2.0:
        k_lo, k_hi = _k_seed_series(mu, x)
        log_scale = 0.0
    else:
        k_lo, k_hi = _k_seed_cf(mu, x)
        log_scale = -x
    # stable upward recurrence K_{m+1} = K_{m-1} + 2 m / x * K_m
    two_over_x = 2.0 / x
    for i in range(1, n_steps + 1):
        k_lo, k_hi = k_hi, (mu + i) * two_over_x * k_hi + k_lo
        if k_hi > 1e250:
            k_lo /= 1e250
            k_hi /= 1e250
            log_scale += _LOG_RESCALE
    return math.log(k_lo) + log_scale


def bessel_k(nu: float, x: float) -> float:
    """K_nu(x); underflows to 0.0 for very large x."""
    try:
        return math.exp(log_bessel_k(nu, x))
    except OverflowError:
        return math.inf
