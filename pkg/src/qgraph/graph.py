"""Metric graphs, vertex conditions, balls, subdivision and decoration.

A graph is a finite list of vertices and oriented edges.  Every edge carries a
length and, for periodic structures, an integer translation tag ``shift``: the
edge runs from ``tail`` in cell 0 to ``head`` in cell ``shift``.  Compact graphs
have rank 0 and empty shifts.

Objects are treated as immutable once built; every operation returns a new
graph.
"""
from __future__ import annotations

import heapq
import json
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Sequence

from .errors import GraphError

Vertex = Hashable


# ---------------------------------------------------------------------------
# vertex conditions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaType:
    """Continuity plus ``sum of outgoing derivatives = alpha * u(v)``."""

    alpha: float = 0.0

    def value(self, lam: float) -> float:
        return self.alpha

    @property
    def is_neumann(self) -> bool:
        return self.alpha == 0.0


@dataclass(frozen=True)
class Dirichlet:
    """``u(v) = 0``; no derivative condition."""


class SpectralRobin:
    """Delta-type condition whose coupling depends on the spectral parameter.

    ``alpha`` is a callable of ``lam``.  ``singularities(lo, hi)`` (optional)
    lists the points in ``[lo, hi]`` where ``alpha`` is undefined; the spectral
    solvers never evaluate within the exclusion radius of those points.  For
    eigenvalue counting to be exact ``alpha`` has to be nonincreasing between
    singularities, which holds for minus a Dirichlet-to-Neumann function.
    """

    def __init__(self, alpha: Callable[[float], float], singularities=None, name: str = ""):
        self.alpha = alpha
        self._singularities = singularities
        self.name = name

    def value(self, lam: float) -> float:
        v = float(self.alpha(lam))
        if not math.isfinite(v):
            raise GraphError(f"spectral coupling {self.name!r} is not finite at lambda={lam!r}")
        return v

    def singularities(self, lo: float, hi: float) -> list[float]:
        if self._singularities is None:
            return []
        return sorted(x for x in self._singularities(lo, hi) if lo <= x <= hi)

    def __repr__(self):
        return f"SpectralRobin({self.name or self.alpha!r})"


NEUMANN = DeltaType(0.0)
DIRICHLET = Dirichlet()
Condition = DeltaType | Dirichlet | SpectralRobin


class VertexConditionSet(Mapping):
    """Mapping vertex -> condition; vertices not listed are Neumann."""

    def __init__(self, conditions: Mapping | None = None):
        self._c = dict(conditions or {})

    def __getitem__(self, v):
        return self._c.get(v, NEUMANN)

    def __iter__(self):
        return iter(self._c)

    def __len__(self):
        return len(self._c)

    def __eq__(self, other):
        if not isinstance(other, VertexConditionSet):
            return NotImplemented
        keys = set(self._c) | set(other._c)
        return all(self[v] == other[v] for v in keys)

    def updated(self, changes: Mapping) -> "VertexConditionSet":
        c = dict(self._c)
        c.update(changes)
        return VertexConditionSet(c)

    def is_dirichlet(self, v) -> bool:
        return isinstance(self[v], Dirichlet)

    def alpha(self, v, lam: float) -> float:
        return self[v].value(lam)

    def singularities(self, lo: float, hi: float) -> list[float]:
        pts = set()
        for c in self._c.values():
            if isinstance(c, SpectralRobin):
                pts.update(c.singularities(lo, hi))
        return sorted(pts)

    def __repr__(self):
        return f"VertexConditionSet({self._c!r})"


def as_conditions(g: "MetricGraph", cond) -> VertexConditionSet:
    if cond is None:
        return g.conditions
    if isinstance(cond, VertexConditionSet):
        return cond
    return VertexConditionSet(cond)


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Edge:
    id: Hashable
    tail: Vertex
    head: Vertex
    length: float
    shift: tuple[int, ...] = ()

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head and not any(self.shift)

    @property
    def is_periodic(self) -> bool:
        return any(self.shift)


@dataclass(frozen=True, eq=False)
class MetricGraph:
    """Finite metric graph (rank 0) or fundamental domain of a Z^n-periodic one."""

    vertices: tuple
    edges: tuple
    conditions: VertexConditionSet = field(default_factory=VertexConditionSet)
    root: Vertex | None = None
    rank: int = 0

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        edges = []
        for e in self.edges:
            shift = tuple(int(t) for t in e.shift) if e.shift else ()
            if self.rank and not shift:
                shift = (0,) * self.rank
            edges.append(Edge(e.id, e.tail, e.head, float(e.length), shift))
        object.__setattr__(self, "edges", tuple(edges))
        if not isinstance(self.conditions, VertexConditionSet):
            object.__setattr__(self, "conditions", VertexConditionSet(self.conditions))
        object.__setattr__(self, "_edge_index", {e.id: e for e in edges})
        object.__setattr__(self, "_vertex_pos", {v: i for i, v in enumerate(self.vertices)})
        ends: dict = {}
        for e in edges:
            ends.setdefault(e.tail, []).append((e, 0))
            ends.setdefault(e.head, []).append((e, 1))
        object.__setattr__(self, "_ends", ends)

    # -- basic queries ------------------------------------------------------

    def edge(self, eid) -> Edge:
        try:
            return self._edge_index[eid]
        except KeyError:
            raise GraphError(f"unknown edge {eid!r}") from None

    def index(self, v) -> int:
        return self._vertex_pos[v]

    @property
    def lengths(self) -> list[float]:
        return [e.length for e in self.edges]

    @property
    def l0(self) -> float:
        return min(self.lengths)

    @property
    def L(self) -> float:
        return max(self.lengths)

    @property
    def total_length(self) -> float:
        return math.fsum(self.lengths)

    def degrees(self) -> dict:
        deg = {v: 0 for v in self.vertices}
        for e in self.edges:
            deg[e.tail] += 1
            deg[e.head] += 1
        return deg

    def incident(self, v) -> list[tuple[Edge, int]]:
        """Edge ends at ``v`` as ``(edge, 0)`` for tails and ``(edge, 1)`` for heads."""
        return list(self._ends.get(v, ()))

    @property
    def is_periodic(self) -> bool:
        return self.rank > 0

    def translation_degree(self) -> tuple[int, ...]:
        """Per torus direction, total |shift| over edges (degree bound of the symbol)."""
        return tuple(sum(abs(e.shift[j]) for e in self.edges) for j in range(self.rank))

    def with_conditions(self, cond) -> "MetricGraph":
        return _replace(self, conditions=as_conditions(self, cond))

    def with_root(self, root) -> "MetricGraph":
        if root not in self._vertex_pos:
            raise GraphError(f"root {root!r} is not a vertex")
        return _replace(self, root=root)

    # -- validation ---------------------------------------------------------

    def validate(self) -> "MetricGraph":
        if not self.vertices:
            raise GraphError("graph has no vertices")
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphError("duplicate vertex ids")
        if len(self._edge_index) != len(self.edges):
            raise GraphError("duplicate edge ids")
        for e in self.edges:
            for v in (e.tail, e.head):
                if v not in self._vertex_pos:
                    raise GraphError(f"edge {e.id!r} references unknown vertex {v!r}")
            if not (e.length > 0 and math.isfinite(e.length)):
                raise GraphError(f"edge {e.id!r} has nonpositive or infinite length {e.length!r}")
            if len(e.shift) != self.rank:
                raise GraphError(f"edge {e.id!r} shift {e.shift!r} does not match rank {self.rank}")
        for v, d in self.degrees().items():
            if d == 0:
                raise GraphError(f"isolated vertex {v!r}")
        if not _connected(self.vertices, self.edges):
            raise GraphError("graph is disconnected")
        if self.root is not None and self.root not in self._vertex_pos:
            raise GraphError(f"root {self.root!r} is not a vertex")
        return self

    def __eq__(self, other):
        if not isinstance(other, MetricGraph):
            return NotImplemented
        return (
            self.vertices == other.vertices
            and self.edges == other.edges
            and self.conditions == other.conditions
            and self.root == other.root
            and self.rank == other.rank
        )

    __hash__ = None

    def __repr__(self):
        kind = f"rank={self.rank}, " if self.rank else ""
        return f"MetricGraph({kind}|V|={len(self.vertices)}, |E|={len(self.edges)})"


class PeriodicStructure(MetricGraph):
    """Fundamental domain of a Z^n-periodic graph (rank >= 1)."""

    def validate(self):
        if self.rank < 1:
            raise GraphError("periodic structure needs rank >= 1")
        super().validate()
        # translations carried by cycles of the quotient must span Z^n for the
        # unfolding to be connected
        if _cycle_lattice_rank(self) < self.rank:
            raise GraphError("translation tags do not generate the full lattice; unfolding disconnected")
        return self

    def __repr__(self):
        return f"PeriodicStructure(rank={self.rank}, |W|={len(self.vertices)}, |E|={len(self.edges)})"


def _replace(g: MetricGraph, **changes) -> MetricGraph:
    kw = dict(vertices=g.vertices, edges=g.edges, conditions=g.conditions, root=g.root, rank=g.rank)
    kw.update(changes)
    return type(g)(**kw)


def _connected(vertices, edges) -> bool:
    parent = {v: v for v in vertices}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        parent[find(e.tail)] = find(e.head)
    return len({find(v) for v in vertices}) <= 1


def _cycle_lattice_rank(g: MetricGraph) -> int:
    import numpy as np

    # potential of each vertex along a spanning tree, then the defect of every
    # edge is the translation carried by its fundamental cycle
    pot = {g.vertices[0]: np.zeros(g.rank, dtype=int)}
    adj: dict = {v: [] for v in g.vertices}
    for e in g.edges:
        t = np.array(e.shift, dtype=int)
        adj[e.tail].append((e.head, t))
        adj[e.head].append((e.tail, -t))
    stack = [g.vertices[0]]
    while stack:
        v = stack.pop()
        for w, t in adj[v]:
            if w not in pot:
                pot[w] = pot[v] + t
                stack.append(w)
    defects = [pot[e.tail] + np.array(e.shift) - pot[e.head] for e in g.edges]
    if not defects:
        return 0
    return int(np.linalg.matrix_rank(np.array(defects, dtype=float)))


# ---------------------------------------------------------------------------
# construction and (de)serialization
# ---------------------------------------------------------------------------

_COND_TYPES = ("neumann", "dirichlet", "delta")


def _parse_condition(spec) -> Condition:
    if spec is None:
        return NEUMANN
    kind = spec.get("type", "neumann")
    if kind == "neumann":
        return NEUMANN
    if kind == "dirichlet":
        return DIRICHLET
    if kind == "delta":
        return DeltaType(float(spec.get("alpha", 0.0)))
    raise GraphError(f"unknown vertex condition type {kind!r} (expected one of {_COND_TYPES})")


def _dump_condition(c) -> dict:
    if isinstance(c, Dirichlet):
        return {"type": "dirichlet"}
    if isinstance(c, DeltaType):
        if c.alpha == 0.0:
            return {"type": "neumann"}
        return {"type": "delta", "alpha": c.alpha}
    raise GraphError(f"condition {c!r} cannot be serialized")


def build_graph(spec: Mapping) -> MetricGraph:
    """Validate a graph description (the JSON document layout) into a graph.

    ``spec`` has ``vertices`` (ids or ``{"id", "condition"}`` records), ``edges``
    (``{"id"?, "from", "to", "length", "shift"?}``), optional ``period`` and
    ``root``.
    """
    try:
        vspecs = spec["vertices"]
        especs = spec["edges"]
    except (KeyError, TypeError):
        raise GraphError("graph description needs 'vertices' and 'edges'") from None
    vertices, conds = [], {}
    for item in vspecs:
        if isinstance(item, Mapping):
            if "id" not in item:
                raise GraphError(f"vertex record without id: {item!r}")
            vid = item["id"]
            c = _parse_condition(item.get("condition"))
            if c != NEUMANN:
                conds[vid] = c
        else:
            vid = item
        vertices.append(vid)
    period = spec.get("period")
    rank = int(period["rank"]) if period else 0
    edges = []
    for i, item in enumerate(especs):
        try:
            shift = tuple(item.get("shift") or ())
            edges.append(Edge(item.get("id", f"e{i}"), item["from"], item["to"], float(item["length"]), shift))
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError(f"bad edge record #{i}: {item!r} ({exc})") from None
    if rank == 0 and any(e.shift for e in edges):
        rank = len(next(e.shift for e in edges if e.shift))
    cls = PeriodicStructure if rank else MetricGraph
    g = cls(vertices=tuple(vertices), edges=tuple(edges), conditions=VertexConditionSet(conds),
            root=spec.get("root"), rank=rank)
    return g.validate()


def to_dict(g: MetricGraph) -> dict:
    out: dict = {
        "vertices": [
            {"id": v, "condition": _dump_condition(g.conditions[v])} for v in g.vertices
        ],
        "edges": [],
    }
    for e in g.edges:
        rec = {"id": e.id, "from": e.tail, "to": e.head, "length": e.length}
        if g.rank:
            rec["shift"] = list(e.shift)
        out["edges"].append(rec)
    if g.rank:
        out["period"] = {"rank": g.rank}
    if g.root is not None:
        out["root"] = g.root
    return out


def dumps(g: MetricGraph) -> str:
    return json.dumps(to_dict(g), indent=2)


def loads(text: str) -> MetricGraph:
    return build_graph(json.loads(text))


def load(path) -> MetricGraph:
    with open(path) as fh:
        return loads(fh.read())


def graph_summary(g: MetricGraph) -> dict:
    return {"l0": g.l0, "L": g.L, "degrees": g.degrees()}


# ---------------------------------------------------------------------------
# metric balls
# ---------------------------------------------------------------------------


def vertex_distances(g: MetricGraph, source) -> dict:
    """Shortest-path distances from ``source`` over the weighted skeleton."""
    adj: dict = {v: [] for v in g.vertices}
    for e in g.edges:
        if e.tail != e.head:
            adj[e.tail].append((e.head, e.length))
            adj[e.head].append((e.tail, e.length))
    dist = {source: 0.0}
    heap = [(0.0, 0, source)]
    counter = 1
    while heap:
        d, _, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for w, l in adj[v]:
            nd = d + l
            if nd < dist.get(w, math.inf):
                dist[w] = nd
                heapq.heappush(heap, (nd, counter, w))
                counter += 1
    return dist


@dataclass(frozen=True)
class BallSubgraph:
    """Ball ``B_r`` around the root and its full-edge core ``Gamma_r``."""

    graph: MetricGraph
    radius: float
    distances: dict
    core_edges: frozenset

    @property
    def ball_vertices(self) -> set:
        return {v for v, d in self.distances.items() if d <= self.radius}

    def point_distance(self, eid, x: float) -> float:
        e = self.graph.edge(eid)
        dv = self.distances.get(e.tail, math.inf)
        dw = self.distances.get(e.head, math.inf)
        return min(dv + x, dw + e.length - x)

    def in_ball(self, eid, x: float) -> bool:
        return self.point_distance(eid, x) <= self.radius

    def in_core(self, eid, x: float) -> bool:
        if eid in self.core_edges:
            return True
        e = self.graph.edge(eid)
        ends = []
        if x == 0.0:
            ends.append(e.tail)
        if x == e.length:
            ends.append(e.head)
        core_vertices = self.core_vertices
        return any(v in core_vertices for v in ends)

    @property
    def core_vertices(self) -> set:
        vs = set()
        for eid in self.core_edges:
            e = self.graph.edge(eid)
            vs.update((e.tail, e.head))
        return vs


def metric_ball(g: MetricGraph, r: float, distances: dict | None = None) -> BallSubgraph:
    if g.root is None:
        raise GraphError("metric_ball needs a rooted graph")
    if r < 0:
        raise GraphError("radius must be nonnegative")
    dist = distances if distances is not None else vertex_distances(g, g.root)
    core = frozenset(
        e.id for e in g.edges if dist.get(e.tail, math.inf) <= r and dist.get(e.head, math.inf) <= r
    )
    return BallSubgraph(g, float(r), dist, core)


# ---------------------------------------------------------------------------
# subdivision and decoration
# ---------------------------------------------------------------------------


def subdivide_edge(g: MetricGraph, eid, s: float, new_vertex=None) -> MetricGraph:
    """Split edge ``eid`` at coordinate ``s`` with a Neumann degree-2 vertex."""
    e = g.edge(eid)
    if not (0.0 < s < e.length):
        raise GraphError(f"subdivision point {s!r} outside (0, {e.length!r})")
    v = new_vertex if new_vertex is not None else f"{eid}|{s!r}"
    if v in g._vertex_pos:
        raise GraphError(f"vertex id {v!r} already exists")
    zero = (0,) * g.rank
    first = Edge(f"{eid}.1", e.tail, v, s, zero)
    second = Edge(f"{eid}.2", v, e.head, e.length - s, e.shift)
    edges = []
    for f in g.edges:
        edges.extend((first, second) if f.id == eid else (f,))
    return _replace(g, vertices=g.vertices + (v,), edges=tuple(edges),
                    conditions=g.conditions.updated({v: NEUMANN}))


def subdivide_all(g: MetricGraph, fraction: float = 1 / math.sqrt(2)) -> MetricGraph:
    """Subdivide every edge at ``fraction`` of its length ("fake" vertices)."""
    out = g
    for e in g.edges:
        out = subdivide_edge(out, e.id, fraction * e.length)
    return out


def decorate(g0: MetricGraph, g1: MetricGraph, v1) -> MetricGraph:
    """Attach a copy of the finite graph ``g1`` at every vertex of ``g0``.

    Each copy's ``v1`` is identified with the host vertex.  Copies are named
    ``"{host}/{name}"``.  Host vertices get Neumann conditions; the copies keep
    ``g1``'s conditions away from ``v1``.
    """
    if g1.is_periodic:
        raise GraphError("decoration graph must be finite")
    if v1 not in g1._vertex_pos:
        raise GraphError(f"{v1!r} is not a vertex of the decoration")
    vertices = list(g0.vertices)
    edges = list(g0.edges)
    conds = {v: NEUMANN for v in g0.vertices}
    zero = (0,) * g0.rank

    for host in g0.vertices:
        def name(x, host=host):
            return host if x == v1 else f"{host}/{x}"

        for x in g1.vertices:
            if x != v1:
                vertices.append(name(x))
                c = g1.conditions[x]
                if c != NEUMANN:
                    conds[name(x)] = c
        for e in g1.edges:
            edges.append(Edge(f"{host}/{e.id}", name(e.tail), name(e.head), e.length, zero))
    return _replace(g0, vertices=tuple(vertices), edges=tuple(edges),
                    conditions=VertexConditionSet(conds))


# ---------------------------------------------------------------------------
# periodic helpers
# ---------------------------------------------------------------------------


def unfold(pg: MetricGraph, cells: Iterable[Sequence[int]]) -> MetricGraph:
    """Finite window of the unfolded periodic graph.

    Vertices are ``(v, cell)`` pairs, edges ``(edge id, cell of its tail)``.
    Only edges with both ends in the window are kept, so boundary vertices of
    the window have reduced degree.  The result is not validated (windows may
    be disconnected).
    """
    cells = [tuple(int(c) for c in cell) for cell in cells]
    cellset = set(cells)
    vertices = [(v, g) for g in cells for v in pg.vertices]
    edges = []
    for g in cells:
        for e in pg.edges:
            h = tuple(a + b for a, b in zip(g, e.shift))
            if h in cellset:
                edges.append(Edge((e.id, g), (e.tail, g), (e.head, h), e.length, ()))
    conds = {(v, g): pg.conditions[v] for g in cells for v in pg.vertices if pg.conditions[v] != NEUMANN}
    return MetricGraph(tuple(vertices), tuple(edges), VertexConditionSet(conds), None, 0)


def box_cells(rank: int, lo: int, hi: int) -> list[tuple[int, ...]]:
    """All integer cells in the box ``[lo, hi]^rank``."""
    import itertools

    return [tuple(c) for c in itertools.product(range(lo, hi + 1), repeat=rank)]


def supercell(pg: MetricGraph, factor: int, axis: int = 0) -> PeriodicStructure:
    """Enlarge the fundamental domain ``factor`` times along ``axis``."""
    if factor < 1:
        raise GraphError("supercell factor must be >= 1")
    vertices = [f"{v}@{m}" for m in range(factor) for v in pg.vertices]
    edges = []
    conds = {}
    for m in range(factor):
        for v in pg.vertices:
            if pg.conditions[v] != NEUMANN:
                conds[f"{v}@{m}"] = pg.conditions[v]
        for e in pg.edges:
            total = m + e.shift[axis]
            q, r = divmod(total, factor)
            shift = list(e.shift)
            shift[axis] = q
            edges.append(Edge(f"{e.id}@{m}", f"{e.tail}@{m}", f"{e.head}@{r}", e.length, tuple(shift)))
    return PeriodicStructure(tuple(vertices), tuple(edges), VertexConditionSet(conds), None, pg.rank)
