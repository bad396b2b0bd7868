"""
Scalar special functions: log-gamma, digamma, trigamma, the regularized
upper incomplete gamma function and the error function.

These are the reference kernels used in parameter-level formulas (moments,
likelihood equations, relaxation estimates, local slopes). Array-heavy
density and CDF evaluation in :mod:`gigavol.dist` goes through
``scipy.special``; the test-suite checks the two agree.
"""

import math

from .errors import DomainError

__all__ = ["lgamma", "digamma", "trigamma", "reg_gamma_q", "erf"]

_EPS = 1e-16
_FPMIN = 1e-300
_MAX_ITER = 10_000

# Bernoulli-number coefficients B_2k / (2k) for the digamma series and
# B_2k for the trigamma series, k = 1..7.
_DIGAMMA_COEF = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)
_TRIGAMMA_COEF = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)
_ASYMPTOTIC_FROM = 12.0


def _check_positive(x: float, name: str) -> float:
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise DomainError(f"{name} requires a finite positive argument, got {x!r}")
    return x


def lgamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    return math.lgamma(_check_positive(x, "lgamma"))


def digamma(x: float) -> float:
    """Digamma function psi(x) for ``x > 0``.

    Shifts the argument upward with psi(x) = psi(x + 1) - 1/x and then
    applies the Stirling-type asymptotic series.
    """
    x = _check_positive(x, "digamma")
    acc = 0.0
    while x < _ASYMPTOTIC_FROM:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for c in _DIGAMMA_COEF:
        series += c * power
        power *= inv2
    return acc + math.log(x) - 0.5 / x - series


def trigamma(x: float) -> float:
    """Trigamma function psi'(x) for ``x > 0``."""
    x = _check_positive(x, "trigamma")
    acc = 0.0
    while x < _ASYMPTOTIC_FROM:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    power = inv2 * inv
    for c in _TRIGAMMA_COEF:
        series += c * power
        power *= inv2
    return acc + inv + 0.5 * inv2 + series


def _lower_series(s: float, x: float) -> float:
    # P(s, x) by the power series; converges quickly for x < s + 1.
    term = 1.0 / s
    total = term
    a = s
    for _ in range(_MAX_ITER):
        a += 1.0
        term *= x / a
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + s * math.log(x) - math.lgamma(s))


def _upper_fraction(s: float, x: float) -> float:
    # Q(s, x) by the Legendre continued fraction, modified Lentz evaluation.
    b = x + 1.0 - s
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + s * math.log(x) - math.lgamma(s)) * h


def reg_gamma_q(s: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(s, x) = Gamma(s, x) / Gamma(s)."""
    s = _check_positive(s, "reg_gamma_q (shape)")
    x = float(x)
    if x < 0.0 or math.isnan(x):
        raise DomainError(f"reg_gamma_q requires x >= 0, got {x!r}")
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < s + 1.0:
        return min(1.0, max(0.0, 1.0 - _lower_series(s, x)))
    return min(1.0, max(0.0, _upper_fraction(s, x)))


def erf(x: float) -> float:
    """Error function."""
    return math.erf(x)
