"""Real-argument Hurwitz/Riemann zeta functions, their s-derivatives, and Gamma.

The zeta functions use Euler-Maclaurin summation for ``s >= 0``: ``N = 16`` terms
are summed directly and the tail is replaced by the integral, the half
end-point term and the Bernoulli corrections through ``B_30``.  The first
omitted correction gives the truncation bound reported by
:func:`hurwitz_zeta_bounded`.

For ``s < 0`` the direct sum grows like ``N^{1-s}`` while the result stays of
order one, so the cancellation would cost many digits.  There the Hermite
integral representation is used instead, except for values at negative
integers, where the Euler-Maclaurin series with ``N = 0`` terminates and gives
the Bernoulli-polynomial value exactly.
"""

from __future__ import annotations

import math
from fractions import Fraction
import warnings
from functools import lru_cache

from scipy.integrate import IntegrationWarning, quad

from .errors import PoleError, ZetaPoleError

EM_TERMS = 16
EM_ORDER = 15  # corrections B_2 ... B_30


@lru_cache(maxsize=None)
def bernoulli_numbers(n_max: int = 2 * EM_ORDER + 2) -> tuple[Fraction, ...]:
    """Exact ``B_0 .. B_n_max`` (convention ``B_1 = -1/2``)."""
    b = [Fraction(0)] * (n_max + 1)
    b[0] = Fraction(1)
    for m in range(1, n_max + 1):
        b[m] = -sum(math.comb(m + 1, k) * b[k] for k in range(m)) / (m + 1)
    return tuple(b)


@lru_cache(maxsize=None)
def _em_coefficients() -> tuple[float, ...]:
    """``B_2k / (2k)!`` for ``k = 1 .. EM_ORDER + 1`` (the last one bounds the error)."""
    b = bernoulli_numbers()
    return tuple(float(b[2 * k] / math.factorial(2 * k)) for k in range(1, EM_ORDER + 2))


def _check(s: float, a: float) -> tuple[float, float]:
    s = float(s)
    a = float(a)
    if not (0.0 < a <= 1.0):
        raise ValueError(f"Hurwitz offset must lie in (0, 1], got {a}")
    if not math.isfinite(s):
        raise ValueError(f"s must be finite, got {s}")
    if s == 1.0:
        raise ZetaPoleError("zeta has a pole at s = 1", s=s, a=a)
    return s, a


def _em(s: float, a: float, derivative: bool, n_terms: int = EM_TERMS) -> tuple[float, float]:
    """Value (or s-derivative) and truncation bound of the Euler-Maclaurin sum."""
    coeffs = _em_coefficients()
    x = n_terms + a
    logx = math.log(x)
    xs = x ** (-s)
    if derivative:
        head = math.fsum(-math.log(n + a) * (n + a) ** (-s) for n in range(n_terms))
        tail = -logx * x * xs / (s - 1.0) - x * xs / (s - 1.0) ** 2 - 0.5 * logx * xs
    else:
        head = math.fsum((n + a) ** (-s) for n in range(n_terms))
        tail = x * xs / (s - 1.0) + 0.5 * xs
    terms = []
    # P_k(s) = prod_{j=0}^{2k-2} (s + j); its derivative via leave-one-out products
    poch = 1.0
    dpoch = 0.0
    factors: list[float] = []
    last = 0.0
    for k in range(1, EM_ORDER + 2):
        for j in range(len(factors), 2 * k - 1):
            f = s + j
            dpoch = dpoch * f + poch
            poch = poch * f
            factors.append(f)
        power = x ** (-s - 2 * k + 1)
        if derivative:
            term = coeffs[k - 1] * (dpoch - logx * poch) * power
        else:
            term = coeffs[k - 1] * poch * power
        if k <= EM_ORDER:
            terms.append(term)
        else:
            last = term
    value = head + tail + math.fsum(terms)
    bound = abs(last) + 4.0 * math.ulp(max(abs(value), abs(head), 1e-300)) * (n_terms + 1)
    return value, bound


_HERMITE_PANELS = ((0.0, 1.0), (1.0, 4.0), (4.0, 12.0), (12.0, 40.0))


def _hermite(s: float, a: float, derivative: bool) -> tuple[float, float]:
    """Hermite's integral ``a^-s/2 + a^(1-s)/(s-1) + 2 int_0^inf ...``."""
    two_pi = 2.0 * math.pi

    def integrand(t):
        if t == 0.0:
            return 0.0
        theta = math.atan2(t, a)
        log_r = 0.5 * math.log(a * a + t * t)
        weight = math.exp(-s * log_r - two_pi * t) / -math.expm1(-two_pi * t)
        if derivative:
            return (theta * math.cos(s * theta) - log_r * math.sin(s * theta)) * weight
        return math.sin(s * theta) * weight

    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        for lo, hi in _HERMITE_PANELS:
            val, e = quad(integrand, lo, hi, epsabs=1e-300, epsrel=1e-13, limit=200)
            total += val
            err += e
    log_a = math.log(a)
    if derivative:
        head = (-0.5 * log_a * a ** (-s) - log_a * a ** (1.0 - s) / (s - 1.0)
                - a ** (1.0 - s) / (s - 1.0) ** 2)
    else:
        head = 0.5 * a ** (-s) + a ** (1.0 - s) / (s - 1.0)
    return head + 2.0 * total, 2.0 * err


def _dispatch(s: float, a: float, derivative: bool) -> tuple[float, float]:
    if s >= 0.0:
        return _em(s, a, derivative)
    if not derivative and s == math.floor(s) and s >= -2 * EM_ORDER + 1:
        return _em(s, a, False, n_terms=0)
    return _hermite(s, a, derivative)


def hurwitz_zeta_bounded(s: float, a: float, derivative: bool = False) -> tuple[float, float]:
    """Return ``(value, bound)`` where ``bound`` estimates the absolute error."""
    s, a = _check(s, a)
    return _dispatch(s, a, derivative)


def hurwitz_zeta(s: float, a: float) -> float:
    """Hurwitz zeta ``sum_{n>=0} (n + a)^{-s}`` continued to real ``s != 1``.

    Parameters
    ----------
    s : float
        Real argument.
    a : float
        Offset in ``(0, 1]``.

    Raises
    ------
    ZetaPoleError
        At ``s = 1``.
    """
    return hurwitz_zeta_bounded(s, a)[0]


def hurwitz_zeta_ds(s: float, a: float) -> float:
    """Partial derivative of :func:`hurwitz_zeta` with respect to ``s``."""
    return hurwitz_zeta_bounded(s, a, derivative=True)[0]


def riemann_zeta(s: float) -> float:
    return hurwitz_zeta(s, 1.0)


def riemann_zeta_ds(s: float) -> float:
    return hurwitz_zeta_ds(s, 1.0)


def gamma(s: float) -> float:
    """Euler Gamma function on the real line.

    Raises
    ------
    PoleError
        At zero and the negative integers.
    """
    s = float(s)
    if s <= 0 and s == math.floor(s):
        raise PoleError("Gamma has a pole at non-positive integers", s=s)
    return math.gamma(s)
