import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catalog import preset_graphs, random_graphs
from qgzeta.errors import DimensionError, GraphSpecError, ValidationError
from qgzeta.graph import (
    MetricGraph,
    VertexPreset,
    build_preset_graph,
    dump_graph,
    graph_to_dict,
    load_graph,
    piston_graph,
    raw_graph,
    star_graph,
    validate_self_adjoint,
)

lengths_strategy = st.lists(st.floats(0.1, 10.0), min_size=1, max_size=6)


@pytest.mark.parametrize("name", sorted(preset_graphs()))
def test_presets_are_self_adjoint(name):
    c = preset_graphs()[name].conditions
    assert validate_self_adjoint(c.a_matrix, c.b_matrix).ok


def test_random_graphs_are_self_adjoint():
    for g in random_graphs(20):
        c = g.conditions
        assert validate_self_adjoint(c.a_matrix, c.b_matrix).ok


@settings(max_examples=40, deadline=None)
@given(lengths_strategy, st.floats(-20, 20))
def test_delta_star_self_adjoint_for_any_coupling(lengths, coupling):
    g = star_graph(lengths, "neumann-node", VertexPreset("delta-center", coupling))
    report = validate_self_adjoint(g.conditions.a_matrix, g.conditions.b_matrix)
    assert report.ok and report.rank == 2 * len(lengths)


def test_rank_deficient_conditions_rejected():
    a = np.zeros((2, 2))
    b = np.zeros((2, 2))
    b[0, 0] = 1.0
    report = validate_self_adjoint(a, b)
    assert not report.rank_ok
    with pytest.raises(ValidationError) as info:
        raw_graph([1.0], a, b)
    assert info.value.exit_code == 3


def test_non_hermitian_conditions_rejected():
    a = np.eye(2)
    b = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert validate_self_adjoint(a, b).hermiticity_defect > 0.5
    with pytest.raises(ValidationError):
        raw_graph([1.0], a, b)


def test_validation_is_scale_invariant():
    g = star_graph([1.0, 2.0], "neumann-node", VertexPreset("delta-center", 3.0))
    a, b = g.conditions.a_matrix, g.conditions.b_matrix
    for c in (1e-3, 1.0, 1e3):
        assert validate_self_adjoint(c * a, c * b).ok


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        validate_self_adjoint(np.eye(2), np.eye(3))
    with pytest.raises(DimensionError):
        raw_graph([1.0, 2.0], np.eye(2), np.zeros((2, 2)))


@pytest.mark.parametrize("bad", [[0.0], [-1.0], [math.inf], []])
def test_bad_lengths(bad):
    with pytest.raises(GraphSpecError):
        MetricGraph(tuple(bad))


def test_unknown_preset_and_bad_coupling():
    with pytest.raises(GraphSpecError):
        VertexPreset("robin-node")
    with pytest.raises(GraphSpecError):
        VertexPreset("delta-center")
    with pytest.raises(GraphSpecError):
        VertexPreset("neumann-node", 1.0)


def test_infinite_coupling_is_dirichlet():
    g = piston_graph(0.3, 1.0, math.inf)
    a = g.conditions.a_matrix
    b = g.conditions.b_matrix
    assert np.all(b == 0)
    assert np.linalg.matrix_rank(a) == 4


def test_piston_geometry():
    g = piston_graph(0.3, 1.0, 2.0)
    assert np.allclose(g.lengths, [0.3, 0.7])
    with pytest.raises(GraphSpecError):
        piston_graph(1.5, 1.0, 2.0)


def test_arrays_are_immutable():
    g = star_graph([1.0, 2.0], "neumann-node")
    with pytest.raises(ValueError):
        g.conditions.a_matrix[0, 0] = 5.0


@pytest.mark.parametrize("name", sorted(preset_graphs()))
def test_json_round_trip_bit_exact(name, tmp_path):
    g = preset_graphs()[name]
    for raw in (False, True):
        path = tmp_path / f"{name}-{raw}.json"
        dump_graph(g, path, raw=raw)
        back = load_graph(path)
        assert np.array_equal(back.conditions.a_matrix, g.conditions.a_matrix)
        assert np.array_equal(back.conditions.b_matrix, g.conditions.b_matrix)
        assert np.array_equal(back.lengths, g.lengths)


@settings(max_examples=30, deadline=None)
@given(lengths_strategy)
def test_star_round_trip_arbitrary_lengths(lengths):
    spec = {"bonds": [{"length": x} for x in lengths],
            "vertices": [{"preset": "dirichlet-node"}] * len(lengths)
            + [{"preset": "delta-center", "lambda": 0.7}]}
    g = build_preset_graph(spec)
    back = build_preset_graph(json.loads(json.dumps(graph_to_dict(g, raw=True))))
    assert np.array_equal(back.conditions.a_matrix, g.conditions.a_matrix)
    assert back.lengths.tolist() == [float(x) for x in lengths]


def test_complex_raw_matrices_round_trip(tmp_path):
    # a magnetic-flux-like vertex: psi(0) = e^{i theta} psi(L), psi'(0) = e^{i theta} psi'(L)
    ph = np.exp(0.4j)
    a = np.array([[1, -ph], [0, 0]], dtype=complex)
    b = np.array([[0, 0], [1, ph]], dtype=complex)
    g = raw_graph([1.0], a, b)
    assert not g.conditions.is_real
    path = tmp_path / "ring.json"
    dump_graph(g, path, raw=True)
    assert np.array_equal(load_graph(path).conditions.a_matrix, g.conditions.a_matrix)


@pytest.mark.parametrize("spec", [
    [],
    {"bonds": "x"},
    {"bonds": [{"length": 1}], "vertices": [{"preset": "neumann-node"}]},
    {"bonds": [{"length": 1}], "vertices": [{"preset": "nope"}, {"preset": "neumann-center"}]},
    {"topology": "piston", "length": 0.3},
    {"topology": "torus", "bonds": [{"length": 1}], "vertices": []},
])
def test_malformed_descriptions(spec):
    with pytest.raises(GraphSpecError) as info:
        build_preset_graph(spec)
    assert info.value.exit_code == 2


def test_unreadable_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(GraphSpecError):
        load_graph(bad)
    with pytest.raises(GraphSpecError):
        load_graph(tmp_path / "missing.json")


def test_general_graph_requires_every_end():
    spec = {"topology": "general", "bonds": [{"length": 1.0}],
            "vertices": [{"preset": "neumann-node", "ends": [[0, "start"]]}]}
    with pytest.raises(GraphSpecError):
        build_preset_graph(spec)


def test_with_lengths_keeps_conditions():
    g = star_graph([1.0, 2.0, 3.0], "neumann-node")
    h = g.with_lengths([1.5, 2.0, 3.0])
    assert h.conditions is g.conditions
    assert h.total_length == pytest.approx(6.5)
