"""Metric graphs and self-adjoint vertex matching conditions.

Functions on a graph with ``B`` bonds are described by the boundary vectors

    phi  = (psi_1(0), ..., psi_B(0), psi_1(L_1), ..., psi_B(L_B))
    phi' = (psi_1'(0), ..., psi_B'(0), -psi_1'(L_1), ..., -psi_B'(L_B))

and the operator domain by ``A phi + B phi' = 0`` with ``2B x 2B`` matrices.
Bond ``b`` therefore owns the columns ``b`` (its start) and ``B + b`` (its end).

Star graphs are oriented so that ``x_b = 0`` sits at the node and ``x_b = L_b``
at the center; node rows come first in the assembled matrices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import DimensionError, GraphSpecError, ValidationError

RANK_TOL = 1e-10
HERMITICITY_TOL = 1e-10

NODE_KINDS = ("dirichlet-node", "neumann-node")
CENTER_KINDS = ("neumann-center", "delta-center")
PRESET_KINDS = NODE_KINDS + CENTER_KINDS


def _frozen_array(x, dtype=None) -> np.ndarray:
    arr = np.array(x, dtype=dtype, copy=True)
    if np.iscomplexobj(arr) and np.all(arr.imag == 0):
        arr = arr.real.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MetricGraph:
    """Bond lengths of a metric graph."""

    bond_lengths: tuple[float, ...]

    def __post_init__(self):
        lengths = tuple(float(x) for x in self.bond_lengths)
        if not lengths:
            raise GraphSpecError("a graph needs at least one bond")
        for length in lengths:
            if not (math.isfinite(length) and length > 0):
                raise GraphSpecError("bond lengths must be positive and finite",
                                     lengths=list(lengths))
        object.__setattr__(self, "bond_lengths", lengths)

    @property
    def bond_count(self) -> int:
        return len(self.bond_lengths)

    @property
    def total_length(self) -> float:
        return math.fsum(self.bond_lengths)

    @property
    def lengths(self) -> np.ndarray:
        return np.asarray(self.bond_lengths)


@dataclass(frozen=True, eq=False)
class MatchingConditions:
    """The matrix pair ``(A, B)`` of ``A phi + B phi' = 0``."""

    a_matrix: np.ndarray
    b_matrix: np.ndarray

    def __post_init__(self):
        a = _frozen_array(self.a_matrix)
        b = _frozen_array(self.b_matrix)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
            raise DimensionError("A and B must be square matrices of equal size",
                                 shape_a=list(a.shape), shape_b=list(b.shape))
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "b_matrix", b)

    @property
    def dimension(self) -> int:
        return self.a_matrix.shape[0]

    @property
    def is_real(self) -> bool:
        return not (np.iscomplexobj(self.a_matrix) or np.iscomplexobj(self.b_matrix))

    def __eq__(self, other):
        if not isinstance(other, MatchingConditions):
            return NotImplemented
        return (np.array_equal(self.a_matrix, other.a_matrix)
                and np.array_equal(self.b_matrix, other.b_matrix))

    __hash__ = None


@dataclass(frozen=True)
class SelfAdjointReport:
    rank_ok: bool
    hermiticity_defect: float
    rank: int
    dimension: int

    @property
    def ok(self) -> bool:
        return self.rank_ok and self.hermiticity_defect <= HERMITICITY_TOL


def validate_self_adjoint(a, b) -> SelfAdjointReport:
    """Check maximal rank of ``(A|B)`` and the defect ``max|AB^+ - BA^+|``.

    The defect is reported relative to ``max(1, |A|_max |B|_max)`` so that a
    rescaled pair ``(cA, cB)`` gets the same verdict.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise DimensionError("A and B must be square matrices of equal size",
                             shape_a=list(a.shape), shape_b=list(b.shape))
    n = a.shape[0]
    sv = np.linalg.svd(np.hstack([a, b]), compute_uv=False)
    rank = int(np.sum(sv > RANK_TOL * sv[0])) if sv.size and sv[0] > 0 else 0
    comm = a @ b.conj().T - b @ a.conj().T
    scale = max(1.0, np.abs(a).max(initial=0.0) * np.abs(b).max(initial=0.0))
    defect = float(np.abs(comm).max(initial=0.0)) / scale
    return SelfAdjointReport(rank_ok=rank == n, hermiticity_defect=defect,
                             rank=rank, dimension=n)


@dataclass(frozen=True)
class VertexPreset:
    """Named local vertex condition.

    ``delta-center`` with ``coupling = inf`` decouples the vertex into
    Dirichlet ends.
    """

    kind: str
    coupling: float | None = None

    def __post_init__(self):
        if self.kind not in PRESET_KINDS:
            raise GraphSpecError(f"unknown vertex preset {self.kind!r}",
                                 known=list(PRESET_KINDS))
        if self.kind == "delta-center":
            if self.coupling is None or math.isnan(float(self.coupling)):
                raise GraphSpecError("delta-center needs a real coupling 'lambda'")
            object.__setattr__(self, "coupling", float(self.coupling))
        elif self.coupling is not None:
            raise GraphSpecError(f"preset {self.kind!r} takes no coupling")

    @property
    def is_dirichlet_limit(self) -> bool:
        return self.kind == "delta-center" and math.isinf(self.coupling) and self.coupling > 0

    def matrices(self, degree: int) -> tuple[np.ndarray, np.ndarray]:
        """Local ``(A_v, B_v)`` acting on the values/outgoing derivatives of the ends."""
        d = degree
        if d < 1:
            raise GraphSpecError("vertex without attached bond ends")
        if self.kind == "dirichlet-node" or self.is_dirichlet_limit:
            return np.eye(d), np.zeros((d, d))
        if self.kind == "neumann-node":
            return np.zeros((d, d)), np.eye(d)
        if self.kind == "delta-center" and math.isinf(self.coupling):
            raise GraphSpecError("coupling -inf is not a valid delta strength")
        a = np.zeros((d, d))
        b = np.zeros((d, d))
        for i in range(d - 1):
            a[i, i] = 1.0
            a[i, i + 1] = -1.0
        b[d - 1, :] = 1.0
        if self.kind == "delta-center":
            a[d - 1, 0] = -self.coupling
        return a, b


@dataclass(frozen=True, eq=False)
class StarLayout:
    """Node kinds and the ``B x B`` center block of a star graph."""

    node_kinds: tuple[str, ...]
    center_a: np.ndarray
    center_b: np.ndarray
    center_preset: VertexPreset | None = None

    def __post_init__(self):
        object.__setattr__(self, "node_kinds", tuple(self.node_kinds))
        object.__setattr__(self, "center_a", _frozen_array(self.center_a))
        object.__setattr__(self, "center_b", _frozen_array(self.center_b))

    @property
    def all_dirichlet(self) -> bool:
        return all(k == "dirichlet-node" for k in self.node_kinds)

    @property
    def neumann_center(self) -> bool:
        p = self.center_preset
        if p is None:
            return False
        return p.kind == "neumann-center" or (p.kind == "delta-center" and p.coupling == 0.0)


@dataclass(frozen=True, eq=False)
class QuantumGraph:
    """A metric graph together with its matching conditions."""

    metric: MetricGraph
    conditions: MatchingConditions
    star: StarLayout | None = None
    description: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.conditions.dimension != 2 * self.metric.bond_count:
            raise DimensionError("matching matrices must be 2B x 2B",
                                 bonds=self.metric.bond_count,
                                 dimension=self.conditions.dimension)

    @property
    def bond_count(self) -> int:
        return self.metric.bond_count

    @property
    def lengths(self) -> np.ndarray:
        return self.metric.lengths

    @property
    def total_length(self) -> float:
        return self.metric.total_length

    def with_lengths(self, lengths: Sequence[float]) -> "QuantumGraph":
        """Same vertex conditions on new bond lengths (conditions are length free)."""
        desc = None
        if self.description is not None:
            desc = json.loads(json.dumps(self.description))
            if "bonds" in desc:
                desc["bonds"] = [{"length": float(x)} for x in lengths]
            else:
                desc = None
        return QuantumGraph(MetricGraph(tuple(lengths)), self.conditions, self.star, desc)


# ---------------------------------------------------------------------------
# assembly

def _assemble(bond_count: int, vertices: Iterable[tuple[Sequence[int], np.ndarray, np.ndarray]]):
    n = 2 * bond_count
    a = np.zeros((n, n), dtype=complex)
    b = np.zeros((n, n), dtype=complex)
    row = 0
    seen: list[int] = []
    for ends, av, bv in vertices:
        d = len(ends)
        av = np.asarray(av)
        bv = np.asarray(bv)
        if av.shape != (d, d) or bv.shape != (d, d):
            raise DimensionError("vertex matrices must match the vertex degree",
                                 degree=d, shape_a=list(av.shape), shape_b=list(bv.shape))
        for i, col in enumerate(ends):
            a[row:row + d, col] = av[:, i]
            b[row:row + d, col] = bv[:, i]
        row += d
        seen.extend(ends)
    if sorted(seen) != list(range(n)):
        raise GraphSpecError("every bond end must be attached to exactly one vertex")
    return a, b


def _checked(a, b) -> MatchingConditions:
    report = validate_self_adjoint(a, b)
    if not report.ok:
        raise ValidationError("matching conditions are not self-adjoint",
                              rank=report.rank, dimension=report.dimension,
                              hermiticity_defect=report.hermiticity_defect)
    return MatchingConditions(a, b)


def star_graph(lengths: Sequence[float], nodes: Sequence[str] | str = "dirichlet-node",
               center: VertexPreset | tuple[Any, Any] = VertexPreset("neumann-center"),
               description: dict | None = None) -> QuantumGraph:
    """Star with bond ``b`` running from node ``b`` (x=0) to the center (x=L_b)."""
    metric = MetricGraph(tuple(lengths))
    n_bonds = metric.bond_count
    if isinstance(nodes, str):
        nodes = [nodes] * n_bonds
    nodes = list(nodes)
    if len(nodes) != n_bonds:
        raise GraphSpecError("one node preset per bond is required")
    for kind in nodes:
        if kind not in NODE_KINDS:
            raise GraphSpecError(f"star nodes must be one of {NODE_KINDS}", got=kind)
    if isinstance(center, VertexPreset):
        ca, cb = center.matrices(n_bonds)
        preset = center
    else:
        ca, cb = (np.asarray(m) for m in center)
        preset = None
    blocks = [([b], *VertexPreset(kind).matrices(1)) for b, kind in enumerate(nodes)]
    blocks.append(([n_bonds + b for b in range(n_bonds)], ca, cb))
    a, b = _assemble(n_bonds, blocks)
    conditions = _checked(a, b)
    layout = StarLayout(tuple(nodes), ca, cb, preset)
    return QuantumGraph(metric, conditions, layout, description)


def piston_graph(length: float, total_length: float, coupling: float) -> QuantumGraph:
    """Two-bond star with Dirichlet ends and a delta coupling at the center."""
    if not 0 < length < total_length:
        raise GraphSpecError("piston needs 0 < L < total length",
                             length=length, total=total_length)
    desc = {"topology": "piston", "length": float(length), "total": float(total_length),
            "lambda": float(coupling)}
    return star_graph([length, total_length - length], "dirichlet-node",
                      VertexPreset("delta-center", coupling), desc)


def interval_graph(length: float, left: str = "dirichlet-node",
                   right: str = "dirichlet-node") -> QuantumGraph:
    """Single bond with node conditions at both ends."""
    metric = MetricGraph((length,))
    blocks = [([0], *VertexPreset(left).matrices(1)), ([1], *VertexPreset(right).matrices(1))]
    a, b = _assemble(1, blocks)
    desc = {"bonds": [{"length": float(length)}], "topology": "general",
            "vertices": [{"preset": left, "ends": [[0, "start"]]},
                         {"preset": right, "ends": [[0, "end"]]}]}
    return QuantumGraph(metric, _checked(a, b), None, desc)


def general_graph(lengths: Sequence[float],
                  vertices: Sequence[tuple[Sequence[tuple[int, str]], VertexPreset | tuple[Any, Any]]],
                  description: dict | None = None) -> QuantumGraph:
    """Arbitrary graph; each vertex lists its bond ends as ``(bond, 'start'|'end')``."""
    metric = MetricGraph(tuple(lengths))
    n_bonds = metric.bond_count
    blocks = []
    for ends, cond in vertices:
        cols = []
        for bond, side in ends:
            if not 0 <= int(bond) < n_bonds or side not in ("start", "end"):
                raise GraphSpecError("bad bond end", bond=bond, side=side)
            cols.append(int(bond) + (n_bonds if side == "end" else 0))
        if isinstance(cond, VertexPreset):
            av, bv = cond.matrices(len(cols))
        else:
            av, bv = cond
        blocks.append((cols, av, bv))
    a, b = _assemble(n_bonds, blocks)
    return QuantumGraph(metric, _checked(a, b), None, description)


def raw_graph(lengths: Sequence[float], a, b, description: dict | None = None) -> QuantumGraph:
    metric = MetricGraph(tuple(lengths))
    return QuantumGraph(metric, _checked(np.asarray(a), np.asarray(b)), None, description)


# ---------------------------------------------------------------------------
# graph description files

def _parse_matrix(entry: dict, key: str):
    re = np.asarray(entry[key], dtype=float)
    im = entry.get(key + "_imag")
    if im is not None:
        return re + 1j * np.asarray(im, dtype=float)
    return re


def _parse_vertex(entry: dict):
    if not isinstance(entry, dict):
        raise GraphSpecError("vertex entries must be objects", got=entry)
    if "raw_A" in entry or "raw_B" in entry:
        try:
            return _parse_matrix(entry, "raw_A"), _parse_matrix(entry, "raw_B")
        except (KeyError, ValueError) as exc:
            raise GraphSpecError("raw vertex needs numeric raw_A and raw_B", cause=str(exc))
    if "preset" not in entry:
        raise GraphSpecError("vertex needs 'preset' or raw matrices", got=entry)
    lam = entry.get("lambda")
    return VertexPreset(entry["preset"], None if lam is None else float(lam))


def build_preset_graph(spec: dict) -> QuantumGraph:
    """Assemble a quantum graph from a JSON-compatible description.

    Supported layouts::

        {"topology": "piston", "length": L, "total": T, "lambda": lam}
        {"bonds": [...], "vertices": [node_1, ..., node_B, center]}       # star
        {"topology": "general", "bonds": [...],
         "vertices": [{"preset"|"raw_A"/"raw_B": ..., "ends": [[b, "start"], ...]}]}
        {"bonds": [...], "raw_A": [[...]], "raw_B": [[...]]}
    """
    if not isinstance(spec, dict):
        raise GraphSpecError("graph description must be a JSON object")
    desc = json.loads(json.dumps(spec))
    topology = spec.get("topology")
    if topology == "piston":
        try:
            return piston_graph(float(spec["length"]), float(spec["total"]), float(spec["lambda"]))
        except KeyError as exc:
            raise GraphSpecError("piston needs length, total and lambda", missing=str(exc))
    try:
        lengths = [float(b["length"]) for b in spec["bonds"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphSpecError("'bonds' must be a list of {\"length\": x}", cause=str(exc))
    if "raw_A" in spec or "raw_B" in spec:
        try:
            a, b = _parse_matrix(spec, "raw_A"), _parse_matrix(spec, "raw_B")
        except (KeyError, ValueError) as exc:
            raise GraphSpecError("raw graph needs numeric raw_A and raw_B", cause=str(exc))
        return raw_graph(lengths, a, b, desc)
    vertices = spec.get("vertices")
    if not isinstance(vertices, list):
        raise GraphSpecError("'vertices' must be a list")
    if topology is None:
        topology = "general" if any("ends" in v for v in vertices if isinstance(v, dict)) else "star"
    if topology == "star":
        if len(vertices) != len(lengths) + 1:
            raise GraphSpecError("a star needs B node vertices followed by one center",
                                 bonds=len(lengths), vertices=len(vertices))
        nodes = []
        for v in vertices[:-1]:
            p = _parse_vertex(v)
            if not isinstance(p, VertexPreset) or p.kind not in NODE_KINDS:
                raise GraphSpecError("star nodes must use a node preset", got=v)
            nodes.append(p.kind)
        return star_graph(lengths, nodes, _parse_vertex(vertices[-1]), desc)
    if topology == "general":
        parsed = []
        for v in vertices:
            ends = v.get("ends") if isinstance(v, dict) else None
            if not ends:
                raise GraphSpecError("general vertices need an 'ends' list", got=v)
            parsed.append(([(int(e[0]), str(e[1])) for e in ends], _parse_vertex(v)))
        return general_graph(lengths, parsed, desc)
    raise GraphSpecError(f"unknown topology {topology!r}")


def load_graph(path) -> QuantumGraph:
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise GraphSpecError(f"cannot read graph file {path}", cause=str(exc))
    return build_preset_graph(spec)


def _matrix_json(m: np.ndarray, key: str) -> dict:
    out = {key: np.real(m).tolist()}
    if np.iscomplexobj(m) and np.any(np.imag(m) != 0):
        out[key + "_imag"] = np.imag(m).tolist()
    return out


def graph_to_dict(qg: QuantumGraph, raw: bool = False) -> dict:
    """JSON-compatible description; ``raw=True`` writes the full matrices."""
    if qg.description is not None and not raw:
        return json.loads(json.dumps(qg.description))
    out: dict = {"bonds": [{"length": x} for x in qg.metric.bond_lengths]}
    out.update(_matrix_json(qg.conditions.a_matrix, "raw_A"))
    out.update(_matrix_json(qg.conditions.b_matrix, "raw_B"))
    return out


def dump_graph(qg: QuantumGraph, path, raw: bool = False) -> None:
    with open(path, "w") as fh:
        json.dump(graph_to_dict(qg, raw), fh, indent=1)


# ---------------------------------------------------------------------------
# random test graphs

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def random_lengths(rng: np.random.Generator, n: int, low=0.5, high=2.0) -> list[float]:
    return [float(x) for x in rng.uniform(low, high, size=n)]


def random_star(rng: np.random.Generator, max_bonds: int = 3) -> QuantumGraph:
    """Random star: Dirichlet/Neumann nodes, Neumann or repulsive delta center."""
    n = int(rng.integers(2, max_bonds + 1))
    lengths = random_lengths(rng, n)
    nodes = [str(k) for k in rng.choice(NODE_KINDS, size=n)]
    if rng.random() < 0.5:
        center = VertexPreset("neumann-center")
    else:
        center = VertexPreset("delta-center", float(rng.uniform(0.1, 5.0)))
    desc = {"bonds": [{"length": x} for x in lengths],
            "vertices": [{"preset": k} for k in nodes]
            + [{"preset": center.kind} if center.coupling is None
               else {"preset": center.kind, "lambda": center.coupling}]}
    return star_graph(lengths, nodes, center, desc)


def random_general_graph(rng: np.random.Generator, max_bonds: int = 4) -> QuantumGraph:
    """Random connected graph (a path or a triangle with a tail) with delta vertices."""
    n = int(rng.integers(2, max_bonds + 1))
    lengths = random_lengths(rng, n)
    # bond i joins vertex i to vertex i+1; optionally close a loop back to vertex 0
    ends: dict[int, list[tuple[int, str]]] = {}
    for i in range(n):
        ends.setdefault(i, []).append((i, "start"))
        ends.setdefault(i + 1, []).append((i, "end"))
    if n >= 3 and rng.random() < 0.5:
        last = ends.pop(n)
        ends[0].extend(last)
    vertices = []
    desc_vertices = []
    for v in sorted(ends):
        vend = ends[v]
        if len(vend) == 1:
            kind = str(rng.choice(NODE_KINDS))
            preset = VertexPreset(kind)
            desc_vertices.append({"preset": kind, "ends": [list(e) for e in vend]})
        else:
            lam = float(rng.uniform(0.0, 3.0)) if rng.random() < 0.6 else 0.0
            preset = VertexPreset("delta-center", lam)
            desc_vertices.append({"preset": "delta-center", "lambda": lam,
                                  "ends": [list(e) for e in vend]})
        vertices.append((vend, preset))
    desc = {"topology": "general", "bonds": [{"length": x} for x in lengths],
            "vertices": desc_vertices}
    return general_graph(lengths, vertices, desc)
