"""Positive k-spectrum of a quantum graph.

Roots are located with the pole-free matrix

    M(k) = A [[0, I], [S, C]] + k B [[I, 0], [-C, S]],   S = diag sin kL, C = diag cos kL,

which maps the amplitudes ``(beta_b, alpha_b)`` of ``psi_b = alpha_b cos kx +
beta_b sin kx`` to the left-hand side of the matching conditions.  ``k > 0``
is an eigenvalue exactly when ``M(k)`` is singular and the nullity is its
multiplicity, so no pole handling is needed.  The root search combines sign
changes of ``det M`` (odd multiplicities) with local minima of the smallest
singular value (which also catches even multiplicities and complex
conditions).
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import CutoffError, PoleError
from .secular import SecularPair, entire_matrix, f_real, ks_secular

GRID_PER_SPACING = 40
NULLITY_TOL = 1e-8
SIGMA_ACCEPT = 1e-9
CLUSTER_TOL = 1e-6
_GRID_OFFSET = 0.5371  # keeps rational eigenvalues of equal-length graphs off the grid


@dataclass(frozen=True)
class Spectrum:
    """Distinct eigenvalues ``points`` (ascending) with their multiplicities."""

    points: np.ndarray
    multiplicities: np.ndarray
    k_max: float
    total_length: float
    bond_count: int

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues repeated according to multiplicity."""
        return np.repeat(self.points, self.multiplicities)

    @property
    def count(self) -> int:
        return int(np.sum(self.multiplicities))

    @property
    def weyl_estimate(self) -> float:
        return self.total_length * self.k_max / math.pi

    @property
    def weyl_ok(self) -> bool:
        return abs(self.count - self.weyl_estimate) <= 2 * self.bond_count + 2

    def counting_function(self, k) -> np.ndarray:
        """Number of eigenvalues ``<= k`` (with multiplicity)."""
        cum = np.concatenate([[0], np.cumsum(self.multiplicities)])
        return cum[np.searchsorted(self.points, np.asarray(k), side="right")]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            write_csv(self, fh)


def write_csv(spec: Spectrum, fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(["k", "multiplicity"])
    for k, m in zip(spec.points, spec.multiplicities):
        writer.writerow([f"{k:.15g}", int(m)])


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("QGZETA_THREADS", "1")))
    except ValueError:
        return 1


def _nullity(conditions, lengths, k) -> int:
    sv = np.linalg.svd(entire_matrix(conditions, lengths, k)[0], compute_uv=False)
    return int(np.sum(sv < NULLITY_TOL * sv[0]))


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_minimize(fun, a: float, b: float, rel_width: float = 2e-16) -> tuple[float, float]:
    """Golden-section search; works for the V-shaped minima of ``|det|`` and
    ``sigma_min`` where parabolic steps stall at ``sqrt(eps)`` precision."""
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > rel_width * max(1.0, abs(a)) * 4:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


REFINE_POINTS = 32
REFINE_DEPTH = 3


def _search(evaluate, xs, depth: int, accept: float, out: list) -> None:
    """Roots of a function sampled on the grid ``xs``.

    ``evaluate(xs)`` returns ``(signed, magnitude)``: ``signed`` is a real
    function changing sign at odd-multiplicity roots (or None), ``magnitude``
    a non-negative function vanishing at every root.  Sign changes are
    bisected; each interior local minimum of the magnitude is re-gridded
    ``REFINE_POINTS`` times finer (this separates close pairs of roots that
    share a grid cell) and, at the last level, golden-section minimized and
    accepted when below ``accept`` (the magnitude should be normalized).
    """
    signed, mag = evaluate(xs)
    if signed is not None:
        fun = lambda x: float(evaluate(np.array([x]))[0][0])
        ok = np.isfinite(signed)
        for i in np.nonzero((np.sign(signed[:-1]) * np.sign(signed[1:]) < 0)
                            & ok[:-1] & ok[1:])[0]:
            # flat functions at higher multiplicity stall at roundoff; keep the estimate
            root, _ = brentq(fun, xs[i], xs[i + 1], xtol=1e-14, rtol=1e-15,
                             maxiter=200, full_output=True, disp=False)
            out.append(root)
    finite = np.where(np.isfinite(mag), mag, np.inf)
    mid, left, right = finite[1:-1], finite[:-2], finite[2:]
    # strict on one side, so that flat stretches (a constant function) yield no minima
    minima = np.nonzero((mid <= left) & (mid <= right) & ((mid < left) | (mid < right))
                        & np.isfinite(mid))[0] + 1
    for i in minima:
        if depth > 0:
            # +-2 cells: a second root may sit one cell beyond the sampled minimum
            lo, hi = xs[max(i - 2, 0)], xs[min(i + 2, len(xs) - 1)]
            _search(evaluate, np.linspace(lo, hi, REFINE_POINTS + 1), depth - 1, accept, out)
        else:
            x, val = golden_minimize(lambda k: float(evaluate(np.array([k]))[1][0]),
                                     xs[i - 1], xs[i + 1])
            if val < accept:
                out.append(x)


def _cluster(roots, tol):
    roots = sorted(roots)
    groups = []
    i = 0
    while i < len(roots):
        j = i
        while j + 1 < len(roots) and roots[j + 1] - roots[i] < tol:
            j += 1
        groups.append(float(np.median(roots[i:j + 1])))
        i = j + 1
    return groups


def find_spectrum(pair_or_graph, k_max: float) -> Spectrum:
    """All eigenvalues ``0 < k <= k_max`` with multiplicities.

    Parameters
    ----------
    pair_or_graph : SecularPair or QuantumGraph
        Only the graph and its matching conditions are used; every secular
        form has the same zero set.
    k_max : float
        Cutoff.
    """
    graph = getattr(pair_or_graph, "graph", pair_or_graph)
    if not k_max > 0:
        raise CutoffError("k_max must be positive", k_max=k_max)
    conditions = graph.conditions
    lengths = graph.lengths
    total = graph.total_length
    real = conditions.is_real

    def evaluate(ks):
        m = entire_matrix(conditions, lengths, ks)
        sv = np.linalg.svd(m, compute_uv=False)
        rel = sv[:, -1] / sv[:, 0]
        return (np.linalg.det(m).real if real else None), rel

    h = math.pi / (GRID_PER_SPACING * total)
    n = int(math.ceil(k_max / h)) + 2
    grid = (np.arange(n) + _GRID_OFFSET) * h
    # overlapping chunks so that no local minimum is lost at a seam
    n_chunks = max(1, min(_threads(), n // 256 + 1))
    bounds = np.linspace(0, n - 1, n_chunks + 1).astype(int)
    pieces = [grid[max(lo - 1, 0):hi + 2] for lo, hi in zip(bounds[:-1], bounds[1:])]

    def run(piece):
        found: list[float] = []
        _search(evaluate, piece, REFINE_DEPTH, SIGMA_ACCEPT, found)
        return found

    if len(pieces) > 1:
        with ThreadPoolExecutor(len(pieces)) as pool:
            found = [r for part in pool.map(run, pieces) for r in part]
    else:
        found = run(pieces[0])
    roots = [r for r in found if 0 < r <= k_max]
    points = _cluster(roots, CLUSTER_TOL * math.pi / total)
    mults = [max(_nullity(conditions, lengths, k), 1) for k in points]
    return Spectrum(np.array(points), np.array(mults, dtype=int), float(k_max),
                    total, graph.bond_count)


def equal_star_closed_form(bonds: int, dirichlet: int, length: float, k_max: float) -> Spectrum:
    """Exact spectrum of the equal-length star with a Neumann center.

    ``bonds - dirichlet`` nodes are Neumann, ``dirichlet`` are Dirichlet; the
    secular equation reduces to ``B_N sin^2 kL - B_D cos^2 kL = 0`` together
    with the eigenvalues trapped at the poles.
    """
    if not 0 <= dirichlet <= bonds or bonds < 1:
        raise ValueError("need 0 <= B_D <= B and B >= 1")
    b_n = bonds - dirichlet
    alpha = math.asin(math.sqrt(dirichlet / bonds)) / math.pi
    unit = math.pi / length
    m_max = int(k_max / unit) + 2
    acc: dict[float, int] = {}

    def add(x, m):
        if 0 < x * unit <= k_max * (1 + 1e-14):
            key = round(x, 12)
            acc[key] = acc.get(key, 0) + m

    for m in range(m_max + 1):
        add(m + alpha, 1)
        if m >= 1:
            add(m - alpha, 1)
            add(float(m), dirichlet - 1)
        add(m + 0.5, b_n - 1)
    keys = sorted(x for x, m in acc.items() if m != 0)
    if any(acc[x] < 0 for x in keys):
        raise AssertionError("negative multiplicity in closed form")
    return Spectrum(np.array([x * unit for x in keys]), np.array([acc[x] for x in keys]),
                    float(k_max), bonds * length, bonds)


def _safe(fun, x):
    try:
        return fun(x)
    except PoleError:
        return np.nan


def form_zeros(pair: SecularPair, k_max: float, k_min: float | None = None) -> np.ndarray:
    """Zeros of one particular secular form on ``(k_min, k_max]``.

    Real forms are searched between consecutive poles (sign changes plus
    refined minima of ``|f|``).  The scattering form is complex, so only the
    minima of ``|det(I - ST)|`` are used.  Intended for comparing
    formulations with each other.
    """
    lengths = pair.lengths
    total = float(np.sum(lengths))
    h = math.pi / (GRID_PER_SPACING * total)
    if k_min is None:
        k_min = _GRID_OFFSET * h
    out: list[float] = []
    if pair.form == "kottos-smilansky":
        def evaluate(ks):
            return None, np.array([abs(ks_secular(pair, k)) for k in ks])

        grid = np.arange(k_min, k_max + h, h)
        _search(evaluate, grid, REFINE_DEPTH, 1e-8, out)
        return np.array(_cluster([r for r in out if k_min < r <= k_max],
                                 CLUSTER_TOL * math.pi / total))

    scale = [1.0]

    def evaluate(ks):
        vals = np.array([_safe(lambda k: float(np.real(f_real(pair, k))), k) for k in ks])
        return vals, np.abs(vals) / scale[0]

    poles = []
    for length, a in zip(lengths, pair.lattice_offsets):
        m = np.arange(0, int(k_max * length / math.pi) + 2)
        poles.extend((m + a) * math.pi / length)
    edges = np.unique(np.concatenate([[k_min], [p for p in poles if k_min < p < k_max], [k_max]]))
    for lo, hi in zip(edges[:-1], edges[1:]):
        eps = 1e-7 * max(1.0, hi)
        a, b = lo + (eps if lo != k_min else 0.0), hi - (eps if hi != k_max else 0.0)
        if b <= a:
            continue
        n = max(8, int(math.ceil((b - a) / h)))
        xs = np.linspace(a, b, n + 1)
        scale[0] = 1.0
        typical = np.nanmedian(evaluate(xs)[1])
        scale[0] = typical if np.isfinite(typical) and typical > 0 else 1.0
        _search(evaluate, xs, REFINE_DEPTH, 1e-9, out)
    return np.array(_cluster([r for r in out if k_min < r <= k_max],
                             CLUSTER_TOL * math.pi / total))
