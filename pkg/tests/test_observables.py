import math

import numpy as np
import pytest

from oracles import central_difference, equal_star_energy, piston_dirichlet_force
from qgzeta.errors import CutoffError, ZetaPoleError
from qgzeta.graph import interval_graph, piston_graph, star_graph
from qgzeta.observables import (
    casimir_force,
    heat_trace_asymptotic,
    heat_trace_direct,
    piston_force,
    piston_sweep,
    spectral_determinant,
    vacuum_energy,
    vacuum_energy_mixed_star,
    verify_new_integral,
)
from qgzeta.secular import make_pair
from qgzeta.spectrum import find_spectrum


def _mixed(ln, ld):
    return star_graph(list(ln) + list(ld), ["neumann-node"] * len(ln) + ["dirichlet-node"] * len(ld))


def test_determinant_of_equal_neumann_star():
    assert spectral_determinant(make_pair(star_graph([2.0] * 3, "neumann-node"))) == \
        pytest.approx(16.0, rel=1e-12)


def test_determinant_independent_of_form():
    graph = star_graph([1.0, 1.41, 0.77], "dirichlet-node")
    dets = [spectral_determinant(make_pair(graph, f))
            for f in ("general-det", "star-center-det", "neumann-star-sum")]
    assert np.allclose(dets, dets[0], rtol=1e-11)


@pytest.mark.parametrize("ln,ld", [([1.0, 1.7], [0.6]), ([0.8], [1.1, 1.9]),
                                   ([], [1.0, 1.3, 2.1]), ([0.9, 1.4, 2.2], [])])
def test_mixed_star_energy_two_routes(ln, ld):
    via_zeta = vacuum_energy(make_pair(_mixed(ln, ld)))
    assert vacuum_energy_mixed_star(ln, ld) == pytest.approx(via_zeta, rel=1e-9, abs=1e-12)


def test_equal_star_energy():
    for bonds, n_d in ((3, 0), (4, 1), (3, 2), (2, 2), (5, 3), (1, 1)):
        e = vacuum_energy_mixed_star([0.9] * (bonds - n_d), [0.9] * n_d)
        assert e == pytest.approx(equal_star_energy(bonds, n_d, 0.9), abs=1e-12)


@pytest.mark.parametrize("form", ["general-det", "star-center-det", "neumann-star-sum"])
def test_force_is_minus_energy_derivative(form):
    lengths = np.array([1.0, 1.41, 0.77])
    pair = make_pair(star_graph(list(lengths), "dirichlet-node"), form)

    def energy(x):
        new = lengths.copy()
        new[1] = x
        return vacuum_energy(pair.with_lengths(new))

    fd = -central_difference(energy, lengths[1], 1e-4)
    result = casimir_force(pair, 1)
    assert result.force == pytest.approx(fd, rel=1e-7)
    assert result.divergence_note is None and result.energy_finite is not None


def test_fixed_total_length_force():
    lengths = np.array([1.0, 1.41, 0.77])
    pair = make_pair(star_graph(list(lengths), "neumann-node"))

    def energy(x):
        new = lengths.copy()
        new[0] += x
        new[2] -= x
        return vacuum_energy(pair.with_lengths(new))

    fd = -central_difference(energy, 0.0, 1e-4)
    assert casimir_force(pair, 0, "fixed-total-length", 2).force == pytest.approx(fd, rel=1e-7)


def test_piston_energy_diverges_but_force_is_finite():
    pair = make_pair(piston_graph(0.3, 1.0, 2.0))
    with pytest.raises(ZetaPoleError):
        vacuum_energy(pair)
    result = casimir_force(pair, 0, "fixed-total-length", 1)
    assert math.isfinite(result.force) and result.energy_finite is None
    assert "diverges" in result.divergence_note


def test_piston_dirichlet_limit_and_large_coupling():
    for length in (0.15, 0.35, 0.8):
        exact = piston_dirichlet_force(length, 1.0)
        assert piston_force(length, 1.0, math.inf) == pytest.approx(exact, rel=1e-10)
        assert abs(piston_force(length, 1.0, 1e6)) == pytest.approx(abs(exact), rel=1e-3)


def test_piston_sweep_shape_and_symmetry():
    ls, forces = piston_sweep(2.0, [0.0, 5.0], 9)
    assert forces.shape == (9, 2)
    assert np.allclose(ls, 2.0 * np.arange(1, 10) / 10)
    assert np.allclose(forces, -forces[::-1], atol=1e-10)
    assert np.allclose(forces[:, 0], 0.0, atol=1e-12)  # lambda = 0: no piston at all


def test_casimir_argument_checks():
    pair = make_pair(star_graph([1.0, 2.0], "neumann-node"))
    with pytest.raises(ValueError):
        casimir_force(pair, 5)
    with pytest.raises(ValueError):
        casimir_force(pair, 0, "fixed-total-length", 0)
    with pytest.raises(ValueError):
        casimir_force(pair, 0, "sideways")


def test_heat_trace_constant_terms():
    assert heat_trace_asymptotic(make_pair(star_graph([1.0, 1.7, 2.3], "neumann-node"))) \
        .coefficients[0.5] == pytest.approx(-0.5, abs=1e-14)
    assert heat_trace_asymptotic(make_pair(interval_graph(1.0))).coefficients[0.5] == \
        pytest.approx(-0.5, abs=1e-14)


def test_heat_trace_direct_matches_asymptotic_for_neumann_star():
    # all b_n vanish for the Neumann star; what remains are periodic-orbit terms
    # of order exp(-(2 L_min)^2 / 4t), negligible for t <= 0.03
    pair = make_pair(star_graph([1.0, 1.7, 2.3], "neumann-node"))
    spec = find_spectrum(pair, 60.0)
    exp = heat_trace_asymptotic(pair, order=3)
    for t in (0.01, 0.02, 0.03):
        assert heat_trace_direct(spec, t) == pytest.approx(float(exp(t)), abs=1e-9)


def test_heat_trace_cutoff_error():
    spec = find_spectrum(interval_graph(1.0), 5.0)
    with pytest.raises(CutoffError) as info:
        heat_trace_direct(spec, 0.01)
    assert info.value.details["required"] > 5.0


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (0.3, 4.0), (7.0, 0.2)])
def test_integral_identity(a, b):
    out = verify_new_integral(a, b)
    assert out["abs_err"] < 1e-12
    if a == b:
        assert out["rhs_closed_form"] == pytest.approx(-math.pi ** 2 / 16, rel=1e-15)
    with pytest.raises(ValueError):
        verify_new_integral(-a, b)


def test_zero_mode_can_be_refused():
    from qgzeta.errors import ZeroModeError
    pair = make_pair(star_graph([1.0, 2.0], "neumann-node"))
    with pytest.raises(ZeroModeError):
        spectral_determinant(pair, allow_zero_modes=False)
    assert spectral_determinant(pair) == pytest.approx(6.0, rel=1e-12)


def test_dirichlet_neumann_interval_energy():
    # one bond, Dirichlet node, Neumann center: E_c = pi / (48 L)
    assert vacuum_energy(make_pair(_mixed([], [1.3]))) == pytest.approx(math.pi / 48 / 1.3,
                                                                        rel=1e-12)
