"""Spectral zeta function of a quantum graph from its secular function.

Let ``f^(t) = f(it)`` and let ``r`` be its order at ``t = 0`` (``r > 0`` for
zero modes, ``r = -1`` for the sum form with Dirichlet nodes).  The reduced
function ``F = f^ / t^r`` is even, analytic and non-zero near the origin, and
``F ~ C t^p`` as ``t -> inf`` up to a series in ``1/t``.  Contour deformation
of ``sum_j k_j^{-2s}`` onto the imaginary axis gives, for every real ``s``
away from the poles,

    zeta(s) = zeta_P(s)
              + sin(pi s)/pi * [ int_0^1 t^{-2s} (log F)' dt
                                 + int_1^inf t^{-2s} ((log F)' - p/t) dt ]
              + (p/2) sinc(s)

where ``zeta_P(s) = sum_b (pi/L_b)^{-2s} zeta_H(2s, a_b)`` removes the poles of
``f`` on the lattices ``(m + a_b) pi / L_b``.  The integrals are evaluated on
``[t_s, T]`` by quadrature; on ``[0, t_s]`` the Taylor series of ``log F`` and
on ``[T, inf)`` the large-``t`` log-series are integrated term by term, which
continues the formula analytically outside ``-1/2 < s < 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import (
    DegenerateExpansionError,
    UnsupportedConditionsError,
    ZeroModeError,
    ZetaPoleError,
)
from .secular import (
    SecularPair,
    asymptotic_polynomial,
    dlog_fhat_dt,
    fhat,
    require_real,
    sum_reduced,
)
from .specfun import hurwitz_zeta, hurwitz_zeta_ds

CAUCHY_POINTS = 64
LOG_SERIES_ORDER = 40
SMALL_T_ORDER = 30
QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-12, limit=200)


# ---------------------------------------------------------------------------
# large-t expansion


def log_series(coeffs, order: int) -> np.ndarray:
    """Coefficients ``b_1..b_order`` of ``log(1 + sum_{l>=1} q_l u^l)``.

    ``coeffs`` holds ``q_0 = 1, q_1, q_2, ...``; uses
    ``n b_n = n q_n - sum_{k=1}^{n-1} k b_k q_{n-k}``.
    """
    q = np.zeros(order + 1, dtype=np.result_type(np.asarray(coeffs), float))
    c = np.asarray(coeffs)[: order + 1]
    q[: len(c)] = c
    b = np.zeros(order + 1, dtype=q.dtype)
    for n in range(1, order + 1):
        acc = n * q[n]
        for k in range(1, n):
            acc -= k * b[k] * q[n - k]
        b[n] = acc / n
    return b[1:]


@dataclass(frozen=True)
class AsymptoticExpansion:
    """Large-``t`` behaviour ``f^(t) ~ c_N t^power exp(sum_n b_n t^-n)``.

    Attributes
    ----------
    poly_coeffs : ndarray
        ``c_0..c_N`` of ``det(A - tB)`` (center block for the star form).
    leading_index : int
        ``N``, the degree of that polynomial.
    leading_coeff : float or complex
        ``c_N``.
    power : int
        Exponent of ``t`` in the leading behaviour of ``f^`` (``N`` for the
        general form, ``N - B`` for the star form, 0 for the sum form).
    log_coeffs : ndarray
        ``b_1..b_K``.
    """

    poly_coeffs: np.ndarray
    leading_index: int
    leading_coeff: complex
    power: int
    log_coeffs: np.ndarray

    @property
    def root_radius(self) -> float:
        """Largest modulus of a root of the polynomial (0 for a constant)."""
        if self.leading_index == 0:
            return 0.0
        return float(np.max(np.abs(np.roots(self.poly_coeffs[::-1]))))

    @property
    def decay_coeffs(self) -> dict[int, complex]:
        """``a_n`` of ``f^ ~ sum_n a_n t^-n`` for decaying (star) forms."""
        if self.power > 0:
            return {}
        shift = self.leading_index - self.power
        return {shift - j: self.poly_coeffs[j] for j in range(len(self.poly_coeffs))
                if self.poly_coeffs[j] != 0}


def asymptotic_expansion(pair: SecularPair, order: int = 12) -> AsymptoticExpansion:
    """Polynomial asymptote of ``f^`` and the log-series ``b_1..b_order``.

    Raises
    ------
    DegenerateExpansionError
        If ``det(A - tB)`` vanishes identically.
    """
    try:
        poly = asymptotic_polynomial(pair)
    except Exception as exc:  # singular pencil
        raise DegenerateExpansionError("det(A - tB) vanishes identically") from exc
    if np.max(np.abs(poly)) < 1e-12:
        raise DegenerateExpansionError("all coefficients of det(A - tB) are below 1e-12")
    n = len(poly) - 1
    cn = poly[n]
    rev = poly[::-1] / cn
    if pair.form == "star-center-det":
        power = n - pair.bond_count
    elif pair.form == "neumann-star-sum":
        power = 0
    else:
        power = n
    b = log_series(rev, order)
    if not np.iscomplexobj(poly):
        b = b.real
    return AsymptoticExpansion(poly, n, cn, power, b)


# ---------------------------------------------------------------------------
# reduced secular function


@dataclass
class ReducedSecular:
    """``F = f^ / (phase t^r)`` with everything the zeta representation needs."""

    pair: SecularPair
    order: int  # r
    phase: complex
    f0: float  # F(0)
    leading: float  # C with F ~ C t^p_eff
    p_eff: int
    log_taylor: np.ndarray  # l_0..l_M of log F (odd ones zero)
    t_small: float
    t_large: float
    b: np.ndarray  # b_1..b_K
    b_scale: float
    expansion: AsymptoticExpansion
    radius: float

    def dlog(self, t):
        """``(log F)'`` for real ``t > 0``."""
        t = np.asarray(t, dtype=float)
        if self.pair.form == "neumann-star-sum":
            return sum_reduced(self.pair, t, "t") / sum_reduced(self.pair, t)
        return np.real(dlog_fhat_dt(self.pair, t)) - self.order / t


def _analytic_radius(pair: SecularPair) -> float:
    lengths = pair.lengths
    if pair.form == "star-center-det":
        return math.pi / (2 * float(np.max(lengths)))
    if pair.form == "neumann-star-sum":
        mask = pair.neumann_mask
        rad = [math.pi / (2 * L) for L in lengths[mask]] + [math.pi / L for L in lengths[~mask]]
        return min(rad)
    return math.pi / float(np.max(lengths))


def _taylor(fun, rho: float, m: int = CAUCHY_POINTS) -> np.ndarray:
    z = rho * np.exp(2j * np.pi * (np.arange(m) + 0.5) / m)
    vals = fun(z)
    # shifted nodes: coefficient n picks up exp(-i pi n / m)
    coef = np.fft.fft(vals) / m
    n = np.arange(m)
    coef = coef * np.exp(-1j * np.pi * n / m) / rho ** n
    return coef[: m // 2]


def reduce_secular(pair: SecularPair) -> ReducedSecular:
    """Analyse ``f^``: order at 0, phase, Taylor and large-``t`` data.

    Raises
    ------
    UnsupportedConditionsError
        ``f^`` not a constant multiple of a real function of constant sign.

    Notes
    -----
    Cancelled lattice poles need no special treatment: ``f`` equals
    ``det M(k) / prod sin(k L_b)`` (or the star analogue) exactly, so a
    missing pole is always an eigenvalue on the lattice and the pole part
    still accounts for it.
    """
    cached = pair._cache.get("reduced")
    if cached is not None:
        return cached
    phase = require_real(pair)
    radius = _analytic_radius(pair)
    rho = 0.5 * radius
    expansion = asymptotic_expansion(pair, LOG_SERIES_ORDER)
    if pair.form == "neumann-star-sum":
        order = -1 if np.any(~pair.neumann_mask) else 1
        coef = _taylor(lambda z: sum_reduced(pair, z), rho)
        f0 = float(sum_reduced(pair, np.array(0.0)))
        leading = float(pair.bond_count)
        p_eff = -order
    else:
        raw = _taylor(lambda z: fhat(pair, z), rho) / phase
        scale = np.abs(raw) * rho ** np.arange(len(raw))
        significant = np.nonzero(scale > 1e-9 * scale.max())[0]
        order = int(significant[0])
        if order % 2:
            raise UnsupportedConditionsError("odd vanishing order of f^ at t = 0", order=order)
        coef = raw[order:]
        f0 = float(np.real(fhat(pair, 0.0) / phase)) if order == 0 else float(coef[0].real)
        leading = float(np.real(expansion.leading_coeff / phase))
        p_eff = expansion.power - order
    coef = np.real(coef)
    coef[0] = f0
    coef[1::2] = 0.0
    nmax = min(SMALL_T_ORDER, len(coef) - 1)
    g = coef[: nmax + 1] / f0
    ell = np.zeros(nmax + 1)
    ell[0] = math.log(abs(f0))
    ell[1:] = log_series(g, nmax)
    ell[1::2] = 0.0
    b = np.real(expansion.log_coeffs)
    lmin = float(np.min(pair.lengths))
    t_large = max(1.0, 40.0 / lmin, 3.0 * expansion.root_radius)
    red = ReducedSecular(pair, order, phase, f0, leading, p_eff, ell, 0.0, t_large, b,
                         max(expansion.root_radius, 1e-300), expansion, radius)
    red.t_small = _choose_t_small(red, 0.5 * rho)
    pair._cache["reduced"] = red
    return red


def _small_series_dlog(ell, t):
    n = np.arange(len(ell))
    return float(np.sum(n[1:] * ell[1:] * t ** (n[1:] - 1)))


def _choose_t_small(red: ReducedSecular, start: float) -> float:
    ts = min(start, 1.0)
    for _ in range(40):
        direct = float(red.dlog(ts))
        series = _small_series_dlog(red.log_taylor, ts)
        if abs(direct - series) <= 1e-10 * (1.0 + abs(direct)):
            return ts
        ts *= 0.5
    raise DegenerateExpansionError("small-t series of log F does not match the direct value")


# ---------------------------------------------------------------------------
# zeta


@dataclass(frozen=True)
class ZetaValue:
    s: float
    value: float
    parts: dict = field(default_factory=dict)
    est_error: float = 0.0

    def to_dict(self) -> dict:
        return {"s": self.s, "value": self.value, "parts": dict(self.parts),
                "est_error": self.est_error}


def pole_part(pair: SecularPair, s: float) -> float:
    """``zeta_P(s) = sum_b (pi/L_b)^{-2s} zeta_H(2s, a_b)``."""
    total = 0.0
    for length, a in zip(pair.lengths, pair.lattice_offsets):
        total += (math.pi / length) ** (-2 * s) * hurwitz_zeta(2 * s, float(a))
    return total


def pole_part_ds_zero(pair: SecularPair) -> float:
    """``d zeta_P / ds`` at ``s = 0``."""
    total = 0.0
    for length, a in zip(pair.lengths, pair.lattice_offsets):
        a = float(a)
        total += 2 * hurwitz_zeta_ds(0.0, a) - 2 * math.log(math.pi / length) * hurwitz_zeta(0.0, a)
    return total


def _quad(fun, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        return quad(fun, a, b, **QUAD_OPTS)


def _panels(a: float, b: float):
    edges = [a]
    while edges[-1] * 2 < b:
        edges.append(edges[-1] * 2)
    edges.append(b)
    return zip(edges[:-1], edges[1:])


def zeta(pair: SecularPair, s: float) -> ZetaValue:
    """Spectral zeta function ``sum'_j k_j^{-2s}`` at real ``s``.

    Raises
    ------
    ZetaPoleError
        At ``s = 1/2`` and at ``s = -n/2`` (odd ``n``) when ``b_n != 0``.
    """
    s = float(s)
    red = reduce_secular(pair)
    if abs(s - 0.5) < 1e-12:
        raise ZetaPoleError("zeta has a pole at s = 1/2", s=s)
    sinpi = math.sin(math.pi * s) / math.pi
    ts, tl, p = red.t_small, red.t_large, red.p_eff

    def f_low(t):
        return t ** (-2 * s) * float(red.dlog(t))

    def f_high(t):
        return t ** (-2 * s) * (float(red.dlog(t)) - p / t)

    err = 0.0
    i01 = 0.0
    if sinpi != 0.0:
        lo, hi = (ts, 1.0) if ts <= 1.0 else (1.0, ts)
        for a, b in _panels(lo, hi):
            v, e = _quad(f_low, a, b)
            i01 += v
            err += e
        if ts > 1.0:
            i01 = -i01
        i1inf = 0.0
        for a, b in _panels(1.0, tl):
            v, e = _quad(f_high, a, b)
            i1inf += v
            err += e
    else:
        i1inf = 0.0
    # series pieces (written with sinc so that integer s needs no special case)
    small = 0.0
    ell = red.log_taylor
    for n in range(2, len(ell), 2):
        u = s - n / 2
        small += -((-1) ** (n // 2)) * (n * ell[n] / 2) * np.sinc(u) * ts ** (-2 * u)
    last_small = abs(len(ell) * ell[-2] * ts ** (len(ell) - 2 - 2 * s)) if len(ell) > 2 else 0.0
    large = 0.0
    for n, bn in enumerate(red.b, start=1):
        if abs(bn) <= 1e-10 * red.b_scale ** n:
            continue
        if n % 2 == 0:
            u = s + n / 2
            large += -((-1) ** (n // 2)) * (n * bn / 2) * np.sinc(u) * tl ** (-2 * u)
        else:
            if abs(2 * s + n) < 1e-12:
                raise ZetaPoleError("zeta has a pole here: the log-series term is non-zero",
                                    s=s, n=n, b_n=float(bn))
            large += -sinpi * n * bn * tl ** (-2 * s - n) / (2 * s + n)
    boundary = 0.5 * p * float(np.sinc(s))
    zp = pole_part(pair, s)
    parts = {
        "pole_part": zp,
        "integral_0_1": sinpi * i01 + small,
        "integral_1_inf": sinpi * i1inf + large,
        "boundary_terms": boundary,
    }
    value = math.fsum(parts.values())
    est = abs(sinpi) * (err + last_small) + 1e-14 * sum(abs(x) for x in parts.values())
    return ZetaValue(s, value, parts, est)


def zeta_zero(pair: SecularPair) -> float:
    """``zeta(0) = zeta_P(0) + p/2`` exactly."""
    red = reduce_secular(pair)
    return pole_part(pair, 0.0) + 0.5 * red.p_eff


def zeta_prime_zero(pair: SecularPair, allow_zero_modes: bool = True) -> float:
    """``zeta'(0) = zeta_P'(0) + log(C / F(0))``.

    For the general determinant this is ``-log(2^B prod L_b f^(0) / c_N)``.

    Raises
    ------
    ZeroModeError
        If ``f^(0) = 0`` and ``allow_zero_modes`` is False.
    """
    red = reduce_secular(pair)
    if red.order > 0 and not allow_zero_modes:
        raise ZeroModeError("f^(0) = 0: zero mode present; allow zero modes to get the "
                            "primed determinant", order=red.order)
    return pole_part_ds_zero(pair) + math.log(red.leading / red.f0)
