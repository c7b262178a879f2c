"""Weighted graphs with boundary: model, metric structure and assumption checks."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType

import networkx as nx
import numpy as np

from .errors import (
    DisconnectedGraph,
    DuplicateEdge,
    DuplicateVertex,
    EmptySet,
    InteriorBoundaryOverlap,
    MalformedInput,
    MissingHeightValue,
    NonPositiveWeight,
    NotStronglyConnected,
    SelfLoop,
    TooLargeForExhaustive,
    UnknownEdge,
    UnknownVertex,
)

EXHAUSTIVE_CAP = 22
_HEIGHT_TOL = 1e-12


def edge_key(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u <= v else (v, u)


def _positive(value, what):
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise NonPositiveWeight(f"{what} must be a finite positive number, got {value!r}")
    return value


@dataclass(frozen=True, eq=False)
class WeightedBoundaryGraph:
    """Finite graph whose vertices split into interior and boundary.

    `edges` maps sorted label pairs to weights g > 0, `mu` covers every vertex and
    `q` covers the interior. Instances are validated on construction and never mutated.
    """

    interior: frozenset
    boundary: frozenset
    edges: Mapping
    mu: Mapping
    q: Mapping = field(default_factory=dict)

    def __post_init__(self):
        interior = frozenset(str(v) for v in self.interior)
        boundary = frozenset(str(v) for v in self.boundary)
        overlap = interior & boundary
        if overlap:
            raise InteriorBoundaryOverlap(f"listed as interior and boundary: {sorted(overlap)}")
        vertices = interior | boundary
        edges = {}
        for key, g in self.edges.items():
            u, v = key
            if u == v:
                raise SelfLoop(f"self-loop at {u!r}")
            for w in (u, v):
                if w not in vertices:
                    raise UnknownVertex(f"edge endpoint {w!r} is not a vertex")
            k = edge_key(u, v)
            if k in edges:
                raise DuplicateEdge(f"edge {k} listed twice")
            edges[k] = _positive(g, f"weight of edge {k}")
        mu = {}
        for v in sorted(vertices):
            mu[v] = _positive(self.mu.get(v, 1.0), f"mu[{v}]")
        for v in self.mu:
            if v not in vertices:
                raise UnknownVertex(f"mu given for unknown vertex {v!r}")
        q = {}
        for v in self.q:
            if v not in interior:
                raise UnknownVertex(f"potential given for non-interior vertex {v!r}")
        for v in sorted(interior):
            value = float(self.q.get(v, 0.0))
            if not math.isfinite(value):
                raise MalformedInput(f"q[{v}] is not finite")
            q[v] = value
        object.__setattr__(self, "interior", interior)
        object.__setattr__(self, "boundary", boundary)
        object.__setattr__(self, "edges", MappingProxyType(dict(sorted(edges.items()))))
        object.__setattr__(self, "mu", MappingProxyType(mu))
        object.__setattr__(self, "q", MappingProxyType(q))

    @cached_property
    def interior_order(self) -> tuple:
        return tuple(sorted(self.interior))

    @cached_property
    def boundary_order(self) -> tuple:
        return tuple(sorted(self.boundary))

    @cached_property
    def vertex_order(self) -> tuple:
        """Interior labels first, then boundary labels, each sorted."""
        return self.interior_order + self.boundary_order

    @cached_property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertex_order)}

    @cached_property
    def _adjacency(self) -> dict:
        adj = {v: [] for v in self.vertex_order}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return {v: tuple(sorted(ns)) for v, ns in adj.items()}

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    def neighbors(self, v: str) -> tuple:
        try:
            return self._adjacency[v]
        except KeyError:
            raise UnknownVertex(f"unknown vertex {v!r}") from None

    def interior_neighbors(self, v: str) -> tuple:
        return tuple(y for y in self.neighbors(v) if y in self.interior)

    def has_edge(self, u: str, v: str) -> bool:
        return edge_key(u, v) in self.edges

    def weight(self, u: str, v: str) -> float:
        try:
            return self.edges[edge_key(u, v)]
        except KeyError:
            raise UnknownEdge(f"no edge between {u!r} and {v!r}") from None

    def degree(self, v: str) -> int:
        return len(self.neighbors(v))

    def edge_list(self) -> list:
        return [(u, v, g) for (u, v), g in self.edges.items()]

    def to_networkx(self) -> nx.Graph:
        G = nx.Graph()
        for v in self.vertex_order:
            G.add_node(v, boundary=v in self.boundary)
        for (u, v), g in self.edges.items():
            G.add_edge(u, v, g=g)
        return G

    @cached_property
    def _nx(self) -> nx.Graph:
        return self.to_networkx()

    def replace(self, **changes) -> "WeightedBoundaryGraph":
        fields = dict(interior=self.interior, boundary=self.boundary, edges=self.edges,
                      mu=self.mu, q=self.q)
        fields.update(changes)
        return WeightedBoundaryGraph(**fields)

    def to_dict(self) -> dict:
        return {
            "interior": list(self.interior_order),
            "boundary": list(self.boundary_order),
            "edges": [{"u": u, "v": v, "g": g} for u, v, g in self.edge_list()],
            "mu": dict(self.mu),
            "q": dict(self.q),
        }

    def __eq__(self, other):
        if not isinstance(other, WeightedBoundaryGraph):
            return NotImplemented
        return (self.interior == other.interior and self.boundary == other.boundary
                and dict(self.edges) == dict(other.edges) and dict(self.mu) == dict(other.mu)
                and dict(self.q) == dict(other.q))

    def __hash__(self):
        return hash((self.interior, self.boundary, tuple(self.edges.items())))


def _check_unique(labels, what):
    seen = set()
    for v in labels:
        if v in seen:
            raise DuplicateVertex(f"{what} vertex {v!r} listed twice")
        seen.add(v)
    return seen


def build_graph(spec: Mapping) -> WeightedBoundaryGraph:
    """Validate a plain description (the JSON graph format) into a graph.

    Edges may be given as {"u", "v", "g"} records or as (u, v[, g]) tuples.
    """
    if not isinstance(spec, Mapping):
        raise MalformedInput("graph description must be a mapping")
    try:
        interior = [str(v) for v in spec.get("interior", [])]
        boundary = [str(v) for v in spec.get("boundary", [])]
    except TypeError as exc:
        raise MalformedInput(f"bad vertex lists: {exc}") from None
    _check_unique(interior, "interior")
    _check_unique(boundary, "boundary")
    edges = {}
    for rec in spec.get("edges", []):
        if isinstance(rec, Mapping):
            try:
                u, v, g = str(rec["u"]), str(rec["v"]), rec.get("g", 1.0)
            except KeyError as exc:
                raise MalformedInput(f"edge record missing {exc}") from None
        else:
            rec = tuple(rec)
            if len(rec) not in (2, 3):
                raise MalformedInput(f"bad edge record {rec!r}")
            u, v = str(rec[0]), str(rec[1])
            g = rec[2] if len(rec) == 3 else 1.0
        if u == v:
            raise SelfLoop(f"self-loop at {u!r}")
        k = edge_key(u, v)
        if k in edges:
            raise DuplicateEdge(f"edge {k} listed twice")
        try:
            edges[k] = float(g)
        except (TypeError, ValueError):
            raise MalformedInput(f"weight of edge {k} is not a number") from None
    try:
        mu = {str(k): float(val) for k, val in dict(spec.get("mu") or {}).items()}
        q = {str(k): float(val) for k, val in dict(spec.get("q") or {}).items()}
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"bad mu/q values: {exc}") from None
    return WeightedBoundaryGraph(frozenset(interior), frozenset(boundary), edges, mu, q)


def reduce(graph: WeightedBoundaryGraph) -> WeightedBoundaryGraph:
    """Drop every edge joining two boundary vertices."""
    kept = {k: g for k, g in graph.edges.items()
            if not (k[0] in graph.boundary and k[1] in graph.boundary)}
    if len(kept) == len(graph.edges):
        return graph
    return graph.replace(edges=kept)


def _graph_for(graph, reduced):
    return (reduce(graph) if reduced else graph)._nx


def distances_from(graph: WeightedBoundaryGraph, source: str, *, reduced: bool = False) -> dict:
    """Edge-count distances from `source`; unreachable vertices are absent."""
    if source not in graph.index:
        raise UnknownVertex(f"unknown vertex {source!r}")
    return nx.single_source_shortest_path_length(_graph_for(graph, reduced), source)


def distance(graph: WeightedBoundaryGraph, x: str, y: str, *, reduced: bool = False):
    """Shortest-path edge count between x and y, `math.inf` when disconnected."""
    if y not in graph.index:
        raise UnknownVertex(f"unknown vertex {y!r}")
    return distances_from(graph, x, reduced=reduced).get(y, math.inf)


def boundary_distance_function(graph: WeightedBoundaryGraph, x: str, order=None) -> tuple:
    """r_x: reduced-graph distances from x to each boundary vertex."""
    if x not in graph.interior:
        raise UnknownVertex(f"{x!r} is not an interior vertex")
    dist = distances_from(graph, x, reduced=True)
    order = graph.boundary_order if order is None else order
    return tuple(dist.get(z, math.inf) for z in order)


def boundary_distance_vectors(graph: WeightedBoundaryGraph, order=None) -> dict:
    return {x: boundary_distance_function(graph, x, order) for x in graph.interior_order}


def is_strongly_connected(graph: WeightedBoundaryGraph) -> bool:
    red = reduce(graph)._nx
    return red.number_of_nodes() > 0 and nx.is_connected(red)


def is_resolving(graph: WeightedBoundaryGraph) -> bool:
    """True iff x -> r_x is injective on the interior."""
    if not is_strongly_connected(graph):
        raise DisconnectedGraph("the reduced graph is not connected")
    vectors = boundary_distance_vectors(graph)
    return len(set(vectors.values())) == len(vectors)


def _boundary_interior_distances(graph, reduced):
    """Matrix D[k, i] = distance from boundary_order[k] to interior_order[i]."""
    G = _graph_for(graph, reduced)
    D = np.full((len(graph.boundary_order), len(graph.interior_order)), np.inf)
    col = {x: i for i, x in enumerate(graph.interior_order)}
    for k, z in enumerate(graph.boundary_order):
        for v, d in nx.single_source_shortest_path_length(G, z).items():
            if v in col:
                D[k, col[v]] = d
    return D


def extreme_points(graph: WeightedBoundaryGraph, S: Iterable, *, reduced: bool = True) -> set:
    """Points of S that are the strict unique nearest point of S from some boundary vertex.

    Returns (point, witness) pairs; the witness is the closest boundary vertex that
    certifies the point, ties broken by boundary order.
    """
    S = sorted(set(S))
    if not S:
        raise EmptySet("extreme_points needs a nonempty set")
    for x in S:
        if x not in graph.interior:
            raise UnknownVertex(f"{x!r} is not an interior vertex")
    G = _graph_for(graph, reduced)
    found = {}
    for z in graph.boundary_order:
        dist = nx.single_source_shortest_path_length(G, z)
        ds = [dist.get(x, math.inf) for x in S]
        best = min(ds)
        if best < math.inf and ds.count(best) == 1:
            x0 = S[ds.index(best)]
            if x0 not in found or best < found[x0][0]:
                found[x0] = (best, z)
    return {(x, z) for x, (_, z) in found.items()}


@dataclass(frozen=True)
class TwoPointsResult:
    holds: bool
    witness: frozenset | None = None
    n_extreme: int | None = None

    def __bool__(self):
        return self.holds


def check_two_points_condition(graph: WeightedBoundaryGraph, *, cap: int = EXHAUSTIVE_CAP,
                               reduced: bool = False, chunk: int = 1 << 20) -> TwoPointsResult:
    """Exhaustive check that every interior subset of size >= 2 has two extreme points.

    Subsets are bitmasks over the sorted interior labels. For each boundary vertex the
    strictly nearest member of S is found level by level. When the condition fails the
    witness is the violating subset with the fewest extreme points, then the smallest
    size, then the smallest bitmask.
    """
    n = len(graph.interior)
    if n > cap:
        raise TooLargeForExhaustive(
            f"|G| = {n} exceeds the exhaustive cap {cap}; use a height certificate instead")
    if n < 2:
        return TwoPointsResult(True)
    D = _boundary_interior_distances(graph, reduced)
    levels = []
    for row in D:
        masks = []
        for d in sorted(set(row.tolist())):
            mask = 0
            for i in np.nonzero(row == d)[0]:
                mask |= 1 << int(i)
            masks.append(np.int64(mask))
        levels.append(masks)
    best = None
    total = 1 << n
    for start in range(0, total, chunk):
        S = np.arange(start, min(total, start + chunk), dtype=np.int64)
        first = np.zeros_like(S)
        two = np.zeros(S.shape, dtype=bool)
        for masks in levels:
            ext = np.zeros_like(S)
            done = np.zeros(S.shape, dtype=bool)
            for M in masks:
                hit = S & M
                new = ~done & (hit != 0)
                unique = new & ((hit & (hit - 1)) == 0)
                ext[unique] = hit[unique]
                done |= new
            nz = ext != 0
            two |= nz & (first != 0) & (ext != first)
            first = np.where(first == 0, ext, first)
        size = np.bitwise_count(S)
        bad = (size >= 2) & ~two
        if bad.any():
            n_ext = (first[bad] != 0).astype(np.int64)
            order = np.lexsort((S[bad], size[bad], n_ext))
            j = order[0]
            cand = (int(n_ext[j]), int(size[bad][j]), int(S[bad][j]))
            if best is None or cand < best:
                best = cand
    if best is None:
        return TwoPointsResult(True)
    n_ext, _, mask = best
    witness = frozenset(x for i, x in enumerate(graph.interior_order) if mask >> i & 1)
    return TwoPointsResult(False, witness, n_ext)


@dataclass(frozen=True)
class HeightCertificate:
    h: Mapping

    def __post_init__(self):
        object.__setattr__(self, "h", MappingProxyType({str(k): float(v) for k, v in self.h.items()}))

    def to_dict(self) -> dict:
        return {"h": dict(sorted(self.h.items()))}


def check_height_certificate(graph: WeightedBoundaryGraph, cert: HeightCertificate) -> bool:
    """Lipschitz-1 along edges; exactly one up/down neighbour inside, at most one on the boundary."""
    h = cert.h
    missing = [v for v in graph.vertex_order if v not in h]
    if missing:
        raise MissingHeightValue(f"no height for {missing[:5]}")
    for u, v in graph.edges:
        if abs(h[u] - h[v]) > 1 + _HEIGHT_TOL:
            return False
    for x in graph.vertex_order:
        up = sum(1 for y in graph.neighbors(x) if abs(h[y] - h[x] - 1) <= _HEIGHT_TOL)
        down = sum(1 for y in graph.neighbors(x) if abs(h[y] - h[x] + 1) <= _HEIGHT_TOL)
        if x in graph.interior:
            if up != 1 or down != 1:
                return False
        elif up > 1 or down > 1:
            return False
    return True


def check_assumption2(graph: WeightedBoundaryGraph) -> bool:
    """Interior neighbours of every boundary vertex are pairwise adjacent."""
    for z in graph.boundary_order:
        ns = graph.interior_neighbors(z)
        for i, x in enumerate(ns):
            for y in ns[i + 1:]:
                if not graph.has_edge(x, y):
                    return False
    return True


# perturbations

@dataclass(frozen=True)
class RemoveEdge:
    u: str
    v: str


@dataclass(frozen=True)
class SetWeight:
    u: str
    v: str
    g: float


@dataclass(frozen=True)
class SetMu:
    x: str
    value: float


@dataclass(frozen=True)
class SetQ:
    x: str
    value: float


def perturb(graph: WeightedBoundaryGraph, op) -> WeightedBoundaryGraph:
    """Return a modified copy. The Two-Points Condition is not re-checked."""
    if isinstance(op, (RemoveEdge, SetWeight)):
        k = edge_key(op.u, op.v)
        if k not in graph.edges:
            raise UnknownEdge(f"no edge between {op.u!r} and {op.v!r}")
        edges = dict(graph.edges)
        if isinstance(op, RemoveEdge):
            del edges[k]
        else:
            edges[k] = _positive(op.g, f"weight of edge {k}")
        return graph.replace(edges=edges)
    if isinstance(op, SetMu):
        if op.x not in graph.index:
            raise UnknownVertex(f"unknown vertex {op.x!r}")
        mu = dict(graph.mu)
        mu[op.x] = _positive(op.value, f"mu[{op.x}]")
        return graph.replace(mu=mu)
    if isinstance(op, SetQ):
        if op.x not in graph.interior:
            raise UnknownVertex(f"{op.x!r} is not an interior vertex")
        q = dict(graph.q)
        q[op.x] = float(op.value)
        return graph.replace(q=q)
    raise TypeError(f"unsupported perturbation {op!r}")


# a-priori data

@dataclass(frozen=True)
class Slot:
    label: str
    adjacent_boundary: tuple


@dataclass(frozen=True)
class AprioriData:
    """Boundary neighbourhood structure plus boundary-adjacent weights and boundary measures."""

    boundary: tuple
    slots: tuple
    boundary_edge_weights: Mapping
    boundary_mu: Mapping

    def __post_init__(self):
        boundary = tuple(str(z) for z in self.boundary)
        _check_unique(boundary, "boundary")
        bset = set(boundary)
        slots = []
        labels = set()
        for s in self.slots:
            if not isinstance(s, Slot):
                s = Slot(str(s[0]), tuple(s[1]))
            adj = tuple(sorted(str(z) for z in s.adjacent_boundary))
            if s.label in labels:
                raise DuplicateVertex(f"slot {s.label!r} listed twice")
            labels.add(s.label)
            for z in adj:
                if z not in bset:
                    raise UnknownVertex(f"slot {s.label!r} lists unknown boundary vertex {z!r}")
            slots.append(Slot(str(s.label), adj))
        covered = {z for s in slots for z in s.adjacent_boundary}
        if covered != bset:
            raise NotStronglyConnected(
                f"boundary vertices without an interior neighbour: {sorted(bset - covered)}")
        weights = {}
        for key, g in self.boundary_edge_weights.items():
            weights[(str(key[0]), str(key[1]))] = _positive(g, f"boundary weight {key}")
        for s in slots:
            for z in s.adjacent_boundary:
                weights.setdefault((s.label, z), 1.0)
        mu = {z: _positive(self.boundary_mu.get(z, 1.0), f"boundary mu[{z}]") for z in boundary}
        object.__setattr__(self, "boundary", boundary)
        object.__setattr__(self, "slots", tuple(slots))
        object.__setattr__(self, "boundary_edge_weights", MappingProxyType(dict(sorted(weights.items()))))
        object.__setattr__(self, "boundary_mu", MappingProxyType(mu))

    def boundary_index(self) -> dict:
        return {z: k for k, z in enumerate(self.boundary)}

    def degree_sums(self) -> dict:
        """Sum of g over interior neighbours for each boundary vertex."""
        sums = {z: 0.0 for z in self.boundary}
        for s in self.slots:
            for z in s.adjacent_boundary:
                sums[z] += self.boundary_edge_weights[(s.label, z)]
        return sums

    def to_dict(self) -> dict:
        return {
            "boundary": list(self.boundary),
            "slots": [{"slot": s.label, "adjacent_boundary": list(s.adjacent_boundary)}
                      for s in self.slots],
            "boundary_edge_weights": [{"slot": s, "z": z, "g": g}
                                      for (s, z), g in self.boundary_edge_weights.items()],
            "boundary_mu": dict(self.boundary_mu),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "AprioriData":
        try:
            slots = [Slot(str(r["slot"]), tuple(r["adjacent_boundary"])) for r in d["slots"]]
            weights = {(str(r["slot"]), str(r["z"])): r["g"] for r in d.get("boundary_edge_weights", [])}
            return cls(tuple(d["boundary"]), tuple(slots), weights, dict(d.get("boundary_mu") or {}))
        except (KeyError, TypeError) as exc:
            raise MalformedInput(f"bad a-priori description: {exc!r}") from None


def extract_apriori(graph: WeightedBoundaryGraph) -> AprioriData:
    if not is_strongly_connected(graph):
        raise NotStronglyConnected("the reduced graph is not connected")
    slots = []
    weights = {}
    for x in graph.interior_order:
        adj = tuple(z for z in graph.neighbors(x) if z in graph.boundary)
        if adj:
            slots.append(Slot(x, adj))
            for z in adj:
                weights[(x, z)] = graph.weight(x, z)
    return AprioriData(graph.boundary_order, tuple(slots), weights,
                       {z: graph.mu[z] for z in graph.boundary_order})
