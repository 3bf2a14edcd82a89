import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catalog import preset_graphs, random_graphs
from oracles import central_difference
from qgzeta.errors import GraphSpecError, PoleError, UnsupportedConditionsError
from qgzeta.graph import VertexPreset, piston_graph, raw_graph, star_graph
from qgzeta.secular import (
    FORMS,
    asymptotic_polynomial,
    bond_functions,
    dlog_fhat_dlength,
    dlog_fhat_dt,
    f_real,
    fhat,
    ks_secular,
    make_pair,
    require_real,
    scattering_matrix,
    sech2,
)


def _pairs(graph):
    for form in FORMS:
        try:
            yield make_pair(graph, form)
        except GraphSpecError:
            pass


@settings(max_examples=80, deadline=None)
@given(st.floats(1e-8, 400.0))
def test_bond_functions_match_mpmath(x):
    g, h, t = bond_functions(np.array([x]), derivatives=False)
    mx = mpmath.mpf(x)
    assert g[0] == pytest.approx(float(mx * mpmath.coth(mx)), rel=1e-13)
    assert h[0] == pytest.approx(float(mx * mpmath.csch(mx)), rel=1e-13, abs=1e-300)
    assert t[0] == pytest.approx(float(mpmath.tanh(mx) / mx), rel=1e-13)


def test_bond_function_derivatives():
    x = np.array([0.01, 0.3, 0.49, 0.51, 2.0, 15.0])
    h = 1e-6
    vals = bond_functions(x)
    plus = bond_functions(x + h, derivatives=False)
    minus = bond_functions(x - h, derivatives=False)
    for i in range(3):
        assert np.allclose(vals[3 + i], (plus[i] - minus[i]) / (2 * h), rtol=1e-7, atol=1e-9)


def test_bond_functions_at_zero_and_no_overflow():
    g, h, t = bond_functions(np.array([0.0, 1e4]), derivatives=False)
    assert g[0] == 1.0 and h[0] == 1.0 and t[0] == 1.0
    assert np.isfinite(g[1]) and h[1] == pytest.approx(0.0) and t[1] == pytest.approx(1e-4)
    assert sech2(800.0) == 0.0


def test_piston_fhat_closed_form():
    length, total, lam = 0.3, 1.0, 2.5
    pair = make_pair(piston_graph(length, total, lam))
    for t in (0.0, 0.4, 3.0, 25.0):
        # tanh(tL)/t for both chambers, with its limit L at t = 0
        tl = [math.tanh(t * x) / t if t else x for x in (length, total - length)]
        direct = -(tl[0] + tl[1]) - lam * tl[0] * tl[1]
        assert fhat(pair, t) == pytest.approx(direct, rel=1e-13)


def test_neumann_center_star_limits():
    pair = make_pair(star_graph([1.0, 2.0, 3.0], "dirichlet-node"), "star-center-det")
    assert fhat(pair, 0.0) == pytest.approx(-11.0, rel=1e-14)
    assert fhat(pair, 60.0) * 60.0 ** 2 == pytest.approx(-3.0, rel=1e-12)


@pytest.mark.parametrize("name", sorted(preset_graphs()))
def test_jacobi_derivatives_match_finite_differences(name):
    graph = preset_graphs()[name]
    for pair in _pairs(graph):
        if pair.form == "kottos-smilansky":
            continue
        for t in (0.3, 1.7, 6.0):
            h = 1e-5 * t
            fd = central_difference(lambda x: math.log(abs(fhat(pair, x))), t, h)
            assert dlog_fhat_dt(pair, t) == pytest.approx(fd, rel=1e-7, abs=1e-8)
            for beta in range(pair.bond_count):
                def shifted(dl, beta=beta):
                    lengths = pair.lengths.copy()
                    lengths[beta] += dl
                    return math.log(abs(fhat(pair.with_lengths(lengths), t)))
                fd_l = central_difference(shifted, 0.0, 1e-6)
                assert dlog_fhat_dlength(pair, t, beta) == pytest.approx(fd_l, rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("graph", list(preset_graphs().values()) + random_graphs(10),
                         ids=lambda g: str(g.bond_count))
def test_scattering_matrix_unitary(graph):
    for k in (0.1, 1.0, 13.7, 250.0):
        s = scattering_matrix(graph.conditions, k)
        assert np.allclose(s.conj().T @ s, np.eye(len(s)), atol=1e-10)


def test_ks_vanishes_at_dirichlet_interval_eigenvalues():
    from qgzeta.graph import interval_graph
    pair = make_pair(interval_graph(2.0), "kottos-smilansky")
    for m in (1, 2, 5):
        assert abs(ks_secular(pair, m * math.pi / 2.0)) < 1e-12
    assert abs(ks_secular(pair, 1.0)) > 1e-3


def test_pole_error():
    pair = make_pair(star_graph([1.0, 2.0], "dirichlet-node"), "general-det")
    with pytest.raises(PoleError):
        f_real(pair, math.pi)


def test_asymptotic_polynomial():
    pair = make_pair(star_graph([1.0, 2.0, 3.0], "dirichlet-node"), "star-center-det")
    poly = asymptotic_polynomial(pair)
    # det(A_c - t B_c) for the Neumann center is -B t
    assert np.allclose(poly, [0.0, -3.0])
    delta = make_pair(piston_graph(0.3, 1.0, 2.0))
    assert np.allclose(asymptotic_polynomial(delta), [-2.0, -2.0])


def test_sign_changing_fhat_rejected():
    # a strongly attractive delta coupling creates a negative eigenvalue
    pair = make_pair(piston_graph(0.4, 1.0, -20.0))
    with pytest.raises(UnsupportedConditionsError):
        require_real(pair)


def test_flux_ring_is_complex_but_supported():
    ph = np.exp(0.7j)
    a = np.array([[1, -ph], [0, 0]], dtype=complex)
    b = np.array([[0, 0], [1, ph]], dtype=complex)
    pair = make_pair(raw_graph([1.3], a, b))
    assert not pair.is_real
    phase = require_real(pair)
    assert abs(phase) == pytest.approx(1.0)


def test_require_real_accepts_real_conditions():
    for graph in preset_graphs().values():
        pair = make_pair(graph, "general-det")
        assert abs(require_real(pair)) == pytest.approx(1.0)


def test_forms_need_matching_topology():
    with pytest.raises(GraphSpecError):
        make_pair(star_graph([1.0, 2.0], "neumann-node",
                             VertexPreset("delta-center", 1.0)), "neumann-star-sum")
    with pytest.raises(GraphSpecError):
        make_pair(star_graph([1.0, 2.0], "neumann-node"), "star-center-det")
    with pytest.raises(GraphSpecError):
        make_pair(piston_graph(0.3, 1.0, 1.0), "bogus")
