"""Secular functions of a quantum graph in several equivalent formulations.

Forms
-----
``general-det``
    ``f(k) = det(A - k B [[cot kL, -csc kL], [-csc kL, cot kL]])`` with the
    2x2 blocks placed on the columns ``(b, B+b)`` of each bond.  On the
    imaginary axis ``f^(t) = f(it) = det(A - B D(t))`` with ``D`` built from
    ``t coth tL`` and ``t csch tL``.
``star-center-det``
    Star graphs with Dirichlet nodes: ``f(k) = det(A_c diag(tan kL / k) - B_c)``
    and ``f^(t) = det(A_c diag(tanh tL / t) - B_c)``.
``neumann-star-sum``
    Stars with a Neumann center: ``f(k) = sum tan kL_n - sum cot kL_d`` over
    Neumann (n) and Dirichlet (d) nodes, and ``f^(t) = sum tanh tL_n +
    sum coth tL_d`` (the constant phase ``i`` of ``f(it)`` is dropped).
``kottos-smilansky``
    ``det(I - S(k) T(k))`` with the vertex scattering matrix ``S`` and the
    bond propagator ``T``; on the imaginary axis it delegates to
    ``general-det``.

All bond functions are written in terms of ``x = tL`` through the even, entire
near the origin, combinations ``G = x coth x``, ``H = x csch x`` and
``T = tanh(x) / x``, which are evaluated by their Taylor series for small
``|x|`` and with ``exp(-2x)`` otherwise, so large ``t`` never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    GraphSpecError,
    NonGenericError,
    PoleError,
    SingularMatrixError,
    UnsupportedConditionsError,
)
from .graph import QuantumGraph
from .specfun import bernoulli_numbers

FORMS = ("general-det", "star-center-det", "neumann-star-sum", "kottos-smilansky")
POLE_TOL = 1e-8
SERIES_RADIUS = 0.5
_N_SERIES = 16


# ---------------------------------------------------------------------------
# bond functions


def _series_coefficients():
    b = bernoulli_numbers()
    fact = math.factorial
    g = [float(2 ** (2 * n) * b[2 * n] / fact(2 * n)) for n in range(_N_SERIES)]
    h = [float((2 - 2 ** (2 * n)) * b[2 * n] / fact(2 * n)) for n in range(_N_SERIES)]
    tt = [float(2 ** (2 * n) * (2 ** (2 * n) - 1) * b[2 * n] / fact(2 * n))
          for n in range(1, _N_SERIES + 1)]
    return np.array(g), np.array(h), np.array(tt)


_G_COEF, _H_COEF, _T_COEF = _series_coefficients()


def _even_series(coef, x):
    """``sum c_n x^{2n}`` and its derivative."""
    x2 = x * x
    val = np.zeros_like(x)
    der = np.zeros_like(x)
    for n in range(len(coef) - 1, -1, -1):
        val = val * x2 + coef[n]
        if n > 0:
            der = der * x2 + 2 * n * coef[n]
    # der currently holds sum 2n c_n x^{2n-2}
    return val, der * x


def bond_functions(x, derivatives: bool = True):
    """Return ``G, H, T`` (and ``G', H', T'``) of ``x``; accepts real or complex arrays.

    ``G = x coth x``, ``H = x csch x``, ``T = tanh(x)/x``.
    """
    x = np.asarray(x)
    cplx = np.iscomplexobj(x)
    dtype = complex if cplx else float
    x = x.astype(dtype)
    sign = np.where(x.real < 0, -1.0, 1.0)
    w = x * sign
    small = np.abs(w) < SERIES_RADIUS
    out = [np.empty_like(w) for _ in range(6)]
    if np.any(small):
        ws = w[small]
        for k, coef in enumerate((_G_COEF, _H_COEF, _T_COEF)):
            v, d = _even_series(coef, ws)
            out[k][small] = v
            out[k + 3][small] = d
    big = ~small
    if np.any(big):
        wb = w[big]
        q = np.exp(-2.0 * wb)
        em = np.exp(-wb)
        one_m_q = -np.expm1(-2.0 * wb)
        g = wb * (1.0 + q) / one_m_q
        h = 2.0 * wb * em / one_m_q
        tnh = one_m_q / (1.0 + q)
        out[0][big] = g
        out[1][big] = h
        out[2][big] = tnh / wb
        out[3][big] = (1.0 + q) / one_m_q - wb * 4.0 * q / one_m_q ** 2
        out[4][big] = 2.0 * em / one_m_q * (1.0 - g)
        out[5][big] = (wb * 4.0 * q / (1.0 + q) ** 2 - tnh) / wb ** 2
    for k in (3, 4, 5):
        out[k] = out[k] * sign
    if derivatives:
        return tuple(out)
    return tuple(out[:3])


def sech2(x):
    """``sech^2 x`` for real ``x`` without overflow."""
    q = np.exp(-2.0 * np.abs(np.asarray(x, dtype=float)))
    return 4.0 * q / (1.0 + q) ** 2


# ---------------------------------------------------------------------------
# secular pair


@dataclass(frozen=True, eq=False)
class SecularPair:
    """A quantum graph together with the formulation of its secular function."""

    graph: QuantumGraph
    form: str = "general-det"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.form not in FORMS:
            raise GraphSpecError(f"unknown secular form {self.form!r}", known=list(FORMS))
        star = self.graph.star
        if self.form == "star-center-det" and (star is None or not star.all_dirichlet):
            raise GraphSpecError("star-center-det needs a star graph with Dirichlet nodes")
        if self.form == "neumann-star-sum" and (star is None or not star.neumann_center):
            raise GraphSpecError("neumann-star-sum needs a star graph with a Neumann center")

    @property
    def lengths(self) -> np.ndarray:
        return self.graph.lengths

    @property
    def bond_count(self) -> int:
        return self.graph.bond_count

    @property
    def is_real(self) -> bool:
        return self.graph.conditions.is_real

    def with_lengths(self, lengths) -> "SecularPair":
        return SecularPair(self.graph.with_lengths(lengths), self.form)

    @cached_property
    def neumann_mask(self) -> np.ndarray:
        """For the sum form: True for bonds ending in a Neumann node."""
        star = self.graph.star
        return np.array([k == "neumann-node" for k in star.node_kinds]) if star else None

    # -- pole lattice -------------------------------------------------------
    @cached_property
    def lattice_offsets(self) -> np.ndarray:
        """Poles of ``f`` on the positive axis sit at ``(m + a_b) pi / L_b``, m >= 0.

        ``a_b = 1`` for cot/csc lattices and ``1/2`` for tan lattices.
        """
        n = self.bond_count
        if self.form == "star-center-det":
            return np.full(n, 0.5)
        if self.form == "neumann-star-sum":
            return np.where(self.neumann_mask, 0.5, 1.0)
        return np.ones(n)

    def nearest_pole(self, k: float) -> float:
        lengths = self.lengths
        a = self.lattice_offsets
        m = np.maximum(np.round(k * lengths / np.pi - a), 0)
        poles = (m + a) * np.pi / lengths
        return float(poles[np.argmin(np.abs(poles - k))])

    def _check_pole(self, k: float) -> None:
        pole = self.nearest_pole(k)
        if abs(k - pole) < POLE_TOL * max(1.0, pole):
            raise PoleError("secular function evaluated at a pole", k=k, nearest_pole=pole)


def make_pair(graph: QuantumGraph, form: str = "auto") -> SecularPair:
    """Choose the natural form: sum for Neumann-center stars, star-center for
    Dirichlet-node stars, general determinant otherwise."""
    if form != "auto":
        return SecularPair(graph, form)
    star = graph.star
    if star is not None and star.neumann_center:
        return SecularPair(graph, "neumann-star-sum")
    if star is not None and star.all_dirichlet:
        return SecularPair(graph, "star-center-det")
    return SecularPair(graph, "general-det")


# ---------------------------------------------------------------------------
# real axis


def _bond_block_matrix(lengths, diag, off):
    """2B x 2B matrix with ``diag`` on (b,b),(B+b,B+b) and ``off`` on the cross entries.

    ``diag`` and ``off`` have a leading batch shape ``(..., B)``.
    """
    n = len(lengths)
    diag = np.asarray(diag)
    off = np.asarray(off)
    shape = diag.shape[:-1] + (2 * n, 2 * n)
    out = np.zeros(shape, dtype=np.result_type(diag, off))
    idx = np.arange(n)
    out[..., idx, idx] = diag
    out[..., n + idx, n + idx] = diag
    out[..., idx, n + idx] = off
    out[..., n + idx, idx] = off
    return out


def f_real(pair: SecularPair, k: float):
    """Secular function on the real axis; zeros are spectral points.

    Raises
    ------
    PoleError
        Within ``1e-8`` of a pole of the chosen form.
    """
    k = float(k)
    if not k > 0:
        raise ValueError("k must be positive")
    if pair.form == "kottos-smilansky":
        return ks_secular(pair, k)
    pair._check_pole(k)
    lengths = pair.lengths
    kl = k * lengths
    if pair.form == "neumann-star-sum":
        mask = pair.neumann_mask
        return float(np.sum(np.tan(kl[mask])) - np.sum(1.0 / np.tan(kl[~mask])))
    cond = pair.graph.conditions
    if pair.form == "star-center-det":
        star = pair.graph.star
        m = star.center_a * (np.tan(kl) / k)[None, :] - star.center_b
        val = np.linalg.det(m)
    else:
        cot = 1.0 / np.tan(kl)
        csc = 1.0 / np.sin(kl)
        d = _bond_block_matrix(lengths, k * cot, -k * csc)
        val = np.linalg.det(cond.a_matrix - cond.b_matrix @ d)
    return float(val.real) if pair.is_real else complex(val)


def entire_matrix(conditions, lengths, k):
    """Pole-free matrix ``A [[0, I], [S, C]] + k B [[I, 0], [-C, S]]`` (batched in ``k``).

    Its determinant is ``f(k) * prod sin(k L_b)`` up to sign, so it has the same
    zeros as the general secular function but no poles.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    n = len(lengths)
    kl = k[:, None] * lengths[None, :]
    s = np.sin(kl)
    c = np.cos(kl)
    nk = len(k)
    left = np.zeros((nk, 2 * n, 2 * n))
    right = np.zeros((nk, 2 * n, 2 * n))
    idx = np.arange(n)
    left[:, idx, n + idx] = 1.0
    left[:, n + idx, idx] = s
    left[:, n + idx, n + idx] = c
    right[:, idx, idx] = k[:, None]
    right[:, n + idx, idx] = -(k[:, None] * c)
    right[:, n + idx, n + idx] = k[:, None] * s
    return conditions.a_matrix @ left + conditions.b_matrix @ right


# ---------------------------------------------------------------------------
# imaginary axis


def _general_matrices(pair: SecularPair, t, want: str | None = None, beta: int | None = None):
    """``M(t) = A - B D(t)`` and optionally ``dM/dt`` or ``dM/dL_beta``."""
    cond = pair.graph.conditions
    lengths = pair.lengths
    t = np.asarray(t)
    x = t[..., None] * lengths
    g, h, _, gp, hp, _ = bond_functions(x)
    d = _bond_block_matrix(lengths, g / lengths, -h / lengths)
    m = cond.a_matrix - cond.b_matrix @ d
    if want is None:
        return m, None
    if want == "t":
        dd = _bond_block_matrix(lengths, gp, -hp)
    else:
        diag = np.zeros_like(g)
        off = np.zeros_like(g)
        lb = lengths[beta]
        diag[..., beta] = -h[..., beta] ** 2 / lb ** 2
        off[..., beta] = h[..., beta] * g[..., beta] / lb ** 2
        dd = _bond_block_matrix(lengths, diag, off)
    return m, -(cond.b_matrix @ dd)


def _star_matrices(pair: SecularPair, t, want: str | None = None, beta: int | None = None):
    star = pair.graph.star
    lengths = pair.lengths
    t = np.asarray(t)
    x = t[..., None] * lengths
    _, _, tt, _, _, ttp = bond_functions(x)
    tau = lengths * tt
    m = star.center_a * tau[..., None, :] - star.center_b
    if want is None:
        return m, None
    if want == "t":
        dtau = lengths ** 2 * ttp
    else:
        dtau = np.zeros_like(tau)
        if np.iscomplexobj(x):
            dtau[..., beta] = 1.0 / np.cosh(x[..., beta]) ** 2
        else:
            dtau[..., beta] = sech2(x[..., beta])
    return m, star.center_a * dtau[..., None, :]


def _jacobi(m, dm):
    try:
        sol = np.linalg.solve(m, dm)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("secular matrix is singular",
                                  condition=float(np.max(np.linalg.cond(m)))) from exc
    return np.trace(sol, axis1=-2, axis2=-1)


def fhat(pair: SecularPair, t):
    """``f^(t) = f(it)`` (sum form: with the constant phase removed).

    Accepts scalars or arrays, real or complex.  ``t = 0`` uses the analytic
    limit of the bond functions; for the sum form with Dirichlet nodes
    ``f^`` has a pole at 0 and ``inf`` is returned there.
    """
    scalar = np.ndim(t) == 0
    t = np.asarray(t)
    if pair.form == "neumann-star-sum":
        val = _sum_fhat(pair, t)
    else:
        mats = _star_matrices if pair.form == "star-center-det" else _general_matrices
        val = np.linalg.det(mats(pair, t)[0])
    if pair.is_real and not np.iscomplexobj(t):
        val = np.real(val)
    return val[()] if scalar else val


def _sum_fhat(pair, t):
    lengths = pair.lengths
    mask = pair.neumann_mask
    x = t[..., None] * lengths
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sum(np.tanh(x[..., mask]), axis=-1)
        if np.any(~mask):
            val = val + np.sum(1.0 / np.tanh(x[..., ~mask]), axis=-1)
    return val


def dlog_fhat_dt(pair: SecularPair, t):
    """``d/dt log f^(t)`` by Jacobi's formula ``tr(M^-1 M')``.

    Raises
    ------
    SingularMatrixError
        If ``M(t)`` is singular.
    """
    scalar = np.ndim(t) == 0
    t = np.asarray(t)
    if pair.form == "neumann-star-sum":
        val = _sum_dlog(pair, t, "t") + _sum_order(pair) / t
    else:
        mats = _star_matrices if pair.form == "star-center-det" else _general_matrices
        val = _jacobi(*mats(pair, t, "t"))
    if pair.is_real and not np.iscomplexobj(t):
        val = np.real(val)
    return val[()] if scalar else val


def dlog_fhat_dlength(pair: SecularPair, t, beta: int):
    """``d/dL_beta log f^(t)`` at fixed ``t``."""
    scalar = np.ndim(t) == 0
    t = np.asarray(t)
    if pair.form == "neumann-star-sum":
        val = _sum_dlog(pair, t, "L", beta)
    else:
        mats = _star_matrices if pair.form == "star-center-det" else _general_matrices
        val = _jacobi(*mats(pair, t, "L", beta))
    if pair.is_real and not np.iscomplexobj(t):
        val = np.real(val)
    return val[()] if scalar else val


# -- sum form in reduced variables -----------------------------------------


def _sum_order(pair: SecularPair) -> int:
    """Order of ``f^`` at ``t = 0`` for the sum form: -1 with Dirichlet nodes, else +1."""
    return -1 if np.any(~pair.neumann_mask) else 1


def sum_reduced(pair: SecularPair, t, want: str | None = None, beta: int | None = None):
    """``F = f^ / t^r`` for the sum form and its derivative in ``t`` or ``L_beta``.

    With Dirichlet nodes ``F = sum t tanh(tL_n) + sum G(tL_d)/L_d``, otherwise
    ``F = sum L_n T(tL_n)``; both are even and analytic near ``t = 0``.
    """
    lengths = pair.lengths
    mask = pair.neumann_mask
    t = np.asarray(t)
    x = t[..., None] * lengths
    g, h, tt, gp, _, ttp = bond_functions(x)
    tn = x * tt  # tanh(x)
    sch = (1.0 - tn) * (1.0 + tn)
    if _sum_order(pair) == -1:
        if want is None:
            return np.sum(np.where(mask, t[..., None] * tn, g / lengths), axis=-1)
        if want == "t":
            return np.sum(np.where(mask, tn + x * sch, gp), axis=-1)
        if mask[beta]:
            return t * t * sch[..., beta]
        return -h[..., beta] ** 2 / lengths[beta] ** 2
    if want is None:
        return np.sum(lengths * tt, axis=-1)
    if want == "t":
        return np.sum(lengths ** 2 * ttp, axis=-1)
    return sch[..., beta]


def _sum_dlog(pair, t, want, beta=None):
    return sum_reduced(pair, t, want, beta) / sum_reduced(pair, t)


# ---------------------------------------------------------------------------
# large-t polynomial


def asymptotic_polynomial(pair: SecularPair) -> np.ndarray:
    """Coefficients ``c_0..c_n`` of ``det(A - tB)`` (center block for star forms).

    ``f^(t)`` approaches ``det(A - tB)`` (general) or ``t^-B det(A_c - t B_c)``
    (star-center) up to exponentially small terms.  Coefficients are obtained
    by sampling on a circle and an FFT.
    """
    if pair.form == "neumann-star-sum":
        return np.array([float(pair.bond_count)])
    if pair.form == "star-center-det":
        a, b = pair.graph.star.center_a, pair.graph.star.center_b
    else:
        a, b = pair.graph.conditions.a_matrix, pair.graph.conditions.b_matrix
    n = a.shape[0]
    if not np.any(b):
        val = np.linalg.det(a)
        return np.array([val.real if pair.is_real else val])
    scale = max(1.0, np.abs(a).max()) / np.abs(b).max()
    nodes = n + 1
    m = 2 * nodes
    z = scale * np.exp(2j * np.pi * np.arange(m) / m)
    vals = np.linalg.det(a[None] - z[:, None, None] * b[None])
    coef = np.fft.fft(vals)[: nodes] / m / scale ** np.arange(nodes)
    tol = 1e-11 * np.max(np.abs(coef)) if np.any(coef) else 0.0
    coef[np.abs(coef) <= tol] = 0.0
    if pair.is_real:
        coef = coef.real
    nz = np.nonzero(coef)[0]
    if nz.size == 0:
        raise SingularMatrixError("det(A - tB) vanishes identically")
    return coef[: nz[-1] + 1]


# ---------------------------------------------------------------------------
# scattering formulation


def scattering_matrix(conditions, k: float) -> np.ndarray:
    """Vertex scattering matrix ``S(k) = -(A + ikB)^-1 (A - ikB)``."""
    a = conditions.a_matrix
    b = conditions.b_matrix
    plus = a + 1j * k * b
    if np.linalg.cond(plus) > 1e13:
        raise SingularMatrixError("A + ikB is singular", k=k)
    return -np.linalg.solve(plus, a - 1j * k * b)


def ks_secular(pair: SecularPair, k: float) -> complex:
    """``det(I - S(k) T(k))`` with ``T = [[0, E], [E, 0]]``, ``E = diag exp(ikL)``."""
    lengths = pair.lengths
    n = len(lengths)
    s = scattering_matrix(pair.graph.conditions, k)
    e = np.exp(1j * k * lengths)
    t = _bond_block_matrix(lengths, np.zeros(n, dtype=complex), e)
    return complex(np.linalg.det(np.eye(2 * n) - s @ t))


# ---------------------------------------------------------------------------
# genericity


def check_generic(pair: SecularPair, n_poles: int = 3) -> None:
    """Verify that poles of ``f`` on the first lattice points have full order.

    Near a pole of order ``m`` the ratio ``|f(k0 + d)| / |f(k0 + 10 d)|`` is
    about ``10^m``; a ratio far below that signals cancelled poles, in which
    case the pole term of the zeta representation would be wrong.

    Raises
    ------
    NonGenericError
    """
    if pair.form in ("neumann-star-sum",):
        return  # residues of tan and -cot never cancel
    lengths = pair.lengths
    offsets = pair.lattice_offsets
    probe = SecularPair(pair.graph, "general-det" if pair.form == "kottos-smilansky" else pair.form)
    for b, (length, a) in enumerate(zip(lengths, offsets)):
        for m in range(n_poles):
            k0 = (m + a) * np.pi / length
            rel = (k0 * lengths / np.pi - offsets)
            order = int(np.sum(np.abs(rel - np.round(rel)) < 1e-9))
            delta = 1e-6 * np.pi / np.max(lengths)
            try:
                near = abs(_unchecked_f(probe, k0 + delta))
                far = abs(_unchecked_f(probe, k0 + 10 * delta))
            except np.linalg.LinAlgError:
                continue
            if not (near > 10.0 ** order / 3.0 * far):
                raise NonGenericError(
                    "pole of the secular function is cancelled; perturb the bond lengths",
                    bond=b, pole=float(k0), ratio=float(near / far) if far else float("inf"),
                    expected=10.0 ** order)


def _unchecked_f(pair, k):
    kl = k * pair.lengths
    if pair.form == "star-center-det":
        star = pair.graph.star
        return np.linalg.det(star.center_a * (np.tan(kl) / k)[None, :] - star.center_b)
    cond = pair.graph.conditions
    d = _bond_block_matrix(pair.lengths, k / np.tan(kl), -k / np.sin(kl))
    return np.linalg.det(cond.a_matrix - cond.b_matrix @ d)


def require_real(pair: SecularPair, samples=None) -> complex:
    """Return the constant phase of ``f^`` on ``(0, inf)``.

    Raises
    ------
    UnsupportedConditionsError
        If ``f^`` is not a constant complex multiple of a real function of
        constant sign.
    """
    if samples is None:
        lmin = float(np.min(pair.lengths))
        samples = np.geomspace(1e-3, 60.0, 400) / lmin
    vals = np.atleast_1d(fhat(pair, np.asarray(samples, dtype=float)))
    if pair.form == "neumann-star-sum":
        return 1.0
    ref = vals[np.argmax(np.abs(vals))]
    phase = ref / abs(ref)
    norm = vals / phase
    scale = np.abs(vals).max()
    if np.any(np.abs(norm.imag) > 1e-8 * np.maximum(np.abs(norm), 1e-300) + 1e-14 * scale):
        raise UnsupportedConditionsError("f^ is not real on the imaginary axis")
    re = norm.real
    nonzero = np.abs(re) > 1e-12 * scale
    if np.any(re[nonzero] < 0):
        raise UnsupportedConditionsError("f^ changes sign on the imaginary axis")
    return phase
