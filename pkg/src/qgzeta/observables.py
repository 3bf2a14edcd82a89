"""Spectral determinant, vacuum energy, Casimir force and heat-trace asymptotics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import erfc

from .errors import CutoffError, ZetaPoleError
from .graph import piston_graph
from .secular import (
    SecularPair,
    bond_functions,
    dlog_fhat_dlength,
    make_pair,
    sech2,
    sum_reduced,
)
from .specfun import gamma, hurwitz_zeta
from .spectrum import Spectrum
from .zeta import reduce_secular, zeta, zeta_prime_zero, zeta_zero

QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-12, limit=400)


def _quad(fun, a, b):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        return quad(fun, a, b, **QUAD_OPTS)


def _integrate_0_inf(fun, scale: float, decay_units: float = 40.0) -> tuple[float, float]:
    """Integrate an exponentially decaying integrand on geometric panels up to
    ``decay_units / scale``."""
    edges = [0.0, 0.125 / scale]
    while edges[-1] < decay_units / scale:
        edges.append(edges[-1] * 2)
    total = err = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = _quad(fun, a, b)
        total += v
        err += e
    return total, err


# ---------------------------------------------------------------------------
# spectral determinant


def spectral_determinant(pair: SecularPair, allow_zero_modes: bool = True) -> float:
    """``det'(-Laplacian) = exp(-zeta'(0))``."""
    return math.exp(-zeta_prime_zero(pair, allow_zero_modes))


# ---------------------------------------------------------------------------
# vacuum energy and Casimir force


def vacuum_energy(pair: SecularPair) -> float:
    """``E_c = zeta(-1/2) / 2``.

    Raises
    ------
    ZetaPoleError
        If ``b_1 != 0``: the vacuum energy diverges (only the force is finite).
    """
    return 0.5 * zeta(pair, -0.5).value


def vacuum_energy_mixed_star(neumann_lengths, dirichlet_lengths) -> float:
    """Vacuum energy of a star with a Neumann center.

    Parameters
    ----------
    neumann_lengths, dirichlet_lengths : sequence of float
        Bonds ending in Neumann and in Dirichlet nodes.

    Returns
    -------
    float
        ``(pi/48)(sum 1/L_n - 2 sum 1/L_d) - (1/2pi) int_0^inf t N(t)/D(t) dt``
        with ``N = sum L_n sech^2 tL_n - sum L_d csch^2 tL_d`` and
        ``D = sum tanh tL_n + sum coth tL_d``.
    """
    ln = np.asarray(neumann_lengths, dtype=float)
    ld = np.asarray(dirichlet_lengths, dtype=float)
    if ln.size + ld.size == 0:
        raise ValueError("at least one bond is required")
    lattice = math.pi / 48 * (np.sum(1 / ln) - 2 * np.sum(1 / ld))

    def integrand(t):
        xn = t * ln
        xd = t * ld
        _, _, tn_over_x = bond_functions(xn, derivatives=False) if ln.size else (0, 0, np.zeros(0))
        g, h, _ = bond_functions(xd, derivatives=False) if ld.size else (np.zeros(0),) * 3
        if ld.size:
            # multiply numerator and denominator by t: both stay finite at t = 0
            num = np.sum(t * t * ln * sech2(xn)) - np.sum(h * h / ld)
            den = np.sum(t * np.tanh(xn)) + np.sum(g / ld)
        else:
            num = np.sum(ln * sech2(xn))
            den = np.sum(ln * tn_over_x)
        return num / den

    lmin = float(np.min(np.concatenate([ln, ld])))
    integral, _ = _integrate_0_inf(integrand, lmin)
    return float(lattice - integral / (2 * math.pi))


@dataclass(frozen=True)
class CasimirResult:
    bond_index: int
    force: float
    energy_finite: float | None = None
    divergence_note: str | None = None
    est_error: float = 0.0
    parts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"bond_index": self.bond_index, "force": self.force,
                "energy_finite": self.energy_finite, "divergence_note": self.divergence_note,
                "est_error": self.est_error, "parts": dict(self.parts)}


def _dlog_dlength(pair: SecularPair, beta: int):
    if pair.form == "neumann-star-sum":
        return lambda t: float(sum_reduced(pair, np.asarray(t), "L", beta)
                               / sum_reduced(pair, np.asarray(t)))
    return lambda t: float(np.real(dlog_fhat_dlength(pair, t, beta)))


def casimir_force_free(pair: SecularPair, beta: int) -> tuple[float, float, dict]:
    """``-dE_c/dL_beta`` with all other lengths fixed.

    ``F = pi zeta_H(-1, a_beta) / (2 L_beta^2) - (1/2pi) int_0^inf d/dL_beta log f^ dt``;
    the lattice term is ``+pi/(48 L^2)`` for a tan lattice and ``-pi/(24 L^2)``
    for a cot lattice.
    """
    lengths = pair.lengths
    lb = float(lengths[beta])
    a = float(pair.lattice_offsets[beta])
    lattice = math.pi * hurwitz_zeta(-1.0, a) / (2 * lb * lb)
    integral, err = _integrate_0_inf(_dlog_dlength(pair, beta), float(np.min(lengths)))
    parts = {"lattice": lattice, "integral": -integral / (2 * math.pi)}
    return lattice - integral / (2 * math.pi), err / (2 * math.pi), parts


def casimir_force(pair: SecularPair, beta: int, constraint: str = "free",
                  partner: int | None = None) -> CasimirResult:
    """Casimir force on bond ``beta``, defined as ``-dE_c/dL_beta``.

    Parameters
    ----------
    constraint : {"free", "fixed-total-length"}
        With a fixed total length the ``partner`` bond (default: the next
        bond) absorbs ``-dL_beta``, so the force is ``F_beta - F_partner``.
    """
    n = pair.bond_count
    if not 0 <= beta < n:
        raise ValueError(f"bond index {beta} out of range")
    force, err, parts = casimir_force_free(pair, beta)
    if constraint == "fixed-total-length":
        if partner is None:
            partner = (beta + 1) % n
        if partner == beta or not 0 <= partner < n:
            raise ValueError("fixed-total-length needs a distinct partner bond")
        f2, e2, p2 = casimir_force_free(pair, partner)
        force -= f2
        err += e2
        parts = {"bond": parts, "partner": p2}
    elif constraint != "free":
        raise ValueError(f"unknown constraint {constraint!r}")
    red = reduce_secular(pair)
    energy = None
    note = None
    if red.b.size and abs(red.b[0]) > 1e-10 * red.b_scale:
        note = "zeta(-1/2) diverges (b_1 != 0); only the force is finite"
    else:
        try:
            energy = vacuum_energy(pair)
        except ZetaPoleError:
            note = "zeta(-1/2) diverges"
    return CasimirResult(beta, float(force), energy, note, float(err), parts)


def piston_force(length: float, total: float, coupling: float) -> float:
    """Force on the left chamber of a piston at fixed total length."""
    pair = make_pair(piston_graph(length, total, coupling))
    return casimir_force(pair, 0, "fixed-total-length", 1).force


def piston_sweep(total: float, couplings, grid: int) -> tuple[np.ndarray, np.ndarray]:
    """Forces on ``L_i = total * i / (grid + 1)``, ``i = 1..grid``, for each coupling.

    Returns ``(L, F)`` with ``F`` of shape ``(grid, len(couplings))``.
    """
    ls = total * np.arange(1, grid + 1) / (grid + 1)
    forces = np.array([[piston_force(L, total, lam) for lam in couplings] for L in ls])
    return ls, forces


# ---------------------------------------------------------------------------
# heat trace


@dataclass(frozen=True)
class HeatTraceExpansion:
    """``K(t) ~ sum_l eps_l t^{l - 1/2}`` over the non-zero spectrum."""

    coefficients: dict
    order: int

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return sum(c * t ** (ell - 0.5) for ell, c in self.coefficients.items())


def heat_trace_asymptotic(pair: SecularPair, order: int = 2) -> HeatTraceExpansion:
    """Small-``t`` expansion through ``t^order``.

    ``K(t) ~ L_tot / sqrt(4 pi t) + zeta(0) - sum_{n=1}^{2 order} b_n / Gamma(n/2) t^{n/2}``,
    where ``zeta(0) = zeta_P(0) + p/2`` includes the contribution of the pole lattice.
    """
    red = reduce_secular(pair)
    total = float(np.sum(pair.lengths))
    coeffs = {0.0: total / (2 * math.sqrt(math.pi)), 0.5: float(zeta_zero(pair))}
    b = red.b
    for n in range(1, 2 * order + 1):
        bn = float(b[n - 1]) if n - 1 < len(b) else 0.0
        coeffs[(n + 1) / 2] = -bn / gamma(n / 2)
    return HeatTraceExpansion(coeffs, order)


def heat_trace_direct(spectrum: Spectrum, t: float, tol: float = 1e-8) -> float:
    """``sum_j exp(-k_j^2 t)`` plus the Weyl tail above ``k_max``.

    Raises
    ------
    CutoffError
        If ``exp(-k_max^2 t) > tol``; the error reports the required ``k_max``.
    """
    k_max = spectrum.k_max
    if math.exp(-k_max * k_max * t) > tol:
        need = math.sqrt(-math.log(tol) / t)
        raise CutoffError("spectrum cutoff too small for this t", k_max=k_max, required=need, t=t)
    k = spectrum.points
    body = math.fsum(spectrum.multiplicities * np.exp(-k * k * t))
    tail = spectrum.total_length / math.pi * 0.5 * math.sqrt(math.pi / t) * erfc(k_max * math.sqrt(t))
    return body + tail


# ---------------------------------------------------------------------------
# integral identity


def verify_new_integral(a: float, b: float) -> dict:
    """Quadrature of ``int_0^inf x (a sech^2 x - b csch^2 x)/(a tanh x + b coth x) dx``
    against ``s (s - pi) + pi^2/8`` with ``s = arcsin sqrt(b/(a+b))``."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")

    def integrand(x):
        th = math.tanh(x)
        # multiply through by tanh x; 2x/sinh 2x = H(2x) is regular at 0
        h2 = float(bond_functions(np.array([2 * x]), derivatives=False)[1][0])
        return (a * x * float(sech2(x)) * th - b * h2) / (a * th * th + b)

    lhs, _ = _integrate_0_inf(integrand, 1.0)
    s = math.asin(math.sqrt(b / (a + b)))
    rhs = s * (s - math.pi) + math.pi ** 2 / 8
    return {"lhs_quadrature": lhs, "rhs_closed_form": rhs, "abs_err": abs(lhs - rhs)}
