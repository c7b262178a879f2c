import math

import networkx as nx
import pytest

from corpus import ALL, LATTICES, four_cycle_with_pendant, graph, lattice, path_spec
from graphinv.errors import (
    DisconnectedGraph,
    DuplicateEdge,
    DuplicateVertex,
    EmptySet,
    InteriorBoundaryOverlap,
    InvalidDimensions,
    MissingHeightValue,
    NonPositiveWeight,
    NotStronglyConnected,
    SelfLoop,
    TooLargeForExhaustive,
    UnknownEdge,
    UnknownVertex,
)
from graphinv.graph import (
    AprioriData,
    HeightCertificate,
    RemoveEdge,
    SetMu,
    SetQ,
    SetWeight,
    boundary_distance_function,
    build_graph,
    check_assumption2,
    check_height_certificate,
    check_two_points_condition,
    distance,
    extract_apriori,
    extreme_points,
    is_resolving,
    is_strongly_connected,
    perturb,
    reduce,
)
from graphinv.lattices import generate_lattice


@pytest.fixture
def path():
    return build_graph(path_spec())


def star(adjacent_xy):
    edges = [("z", "x"), ("z", "y"), ("x", "w"), ("y", "w")]
    if adjacent_xy:
        edges.append(("x", "y"))
    return build_graph({"interior": ["x", "y", "w"], "boundary": ["z", "zw"],
                        "edges": [{"u": a, "v": b, "g": 1.0} for a, b in edges + [("w", "zw")]]})


# construction

def test_build_path(path):
    assert path.interior_order == ("x1", "x2")
    assert path.boundary_order == ("z1", "z2")
    assert len(path.edges) == 3
    assert path.mu == {"x1": 1.0, "x2": 1.0, "z1": 1.0, "z2": 1.0}
    assert path.q == {"x1": 0.0, "x2": 0.0}


@pytest.mark.parametrize("spec, error", [
    (path_spec(edges=[{"u": "x1", "v": "x2", "g": 0.0}, {"u": "z1", "v": "x1"}, {"u": "z2", "v": "x2"}]),
     NonPositiveWeight),
    (path_spec(interior=["x1", "x2", "z1"]), InteriorBoundaryOverlap),
    (path_spec(interior=["x1", "x2", "x2"]), DuplicateVertex),
    (path_spec(edges=[{"u": "x1", "v": "x1"}]), SelfLoop),
    (path_spec(edges=[{"u": "x1", "v": "x2"}, {"u": "x2", "v": "x1"}]), DuplicateEdge),
    (path_spec(edges=[{"u": "x1", "v": "y"}]), UnknownVertex),
    (path_spec(mu={"x1": -1.0}), NonPositiveWeight),
])
def test_build_rejects(spec, error):
    with pytest.raises(error):
        build_graph(spec)


def test_missing_mu_and_q_default(path):
    g = build_graph(path_spec(mu={"x1": 2.0}, q={"x2": 0.5}))
    assert g.mu["x1"] == 2.0 and g.mu["z2"] == 1.0
    assert g.q == {"x1": 0.0, "x2": 0.5}


def test_dict_round_trip():
    g = graph("square3x3-cut")
    assert build_graph(g.to_dict()) == g


# reduction and distances

def test_reduce_examples(path):
    assert reduce(path) == path
    tri = build_graph({"interior": ["x"], "boundary": ["z1", "z2"],
                       "edges": [{"u": "z1", "v": "z2"}, {"u": "z1", "v": "x"}, {"u": "z2", "v": "x"}]})
    assert set(reduce(tri).edges) == {("x", "z1"), ("x", "z2")}
    assert reduce(reduce(tri)) == reduce(tri)


def test_distance_examples(path):
    assert distance(path, "x2", "z1") == 2
    assert distance(path, "x1", "x1") == 0
    two = build_graph({"interior": ["a", "b"], "boundary": [], "edges": []})
    assert distance(two, "a", "b") == math.inf
    with pytest.raises(UnknownVertex):
        distance(path, "x1", "nope")


def test_reduced_distance_skips_boundary_shortcut():
    # z1-z2 edge shortcuts x1 ... x4 in the original graph only
    g = build_graph({"interior": ["x1", "x2", "x3", "x4"], "boundary": ["z1", "z2"],
                     "edges": [{"u": a, "v": b} for a, b in
                               [("x1", "x2"), ("x2", "x3"), ("x3", "x4"), ("z1", "x1"), ("z2", "x4"),
                                ("z1", "z2")]]})
    assert distance(g, "x1", "x4") == 3
    assert distance(g, "z1", "x4") == 2
    assert distance(g, "z1", "x4", reduced=True) == 4


def test_boundary_distance_function(path):
    assert boundary_distance_function(path, "x2") == (2, 1)
    g = build_graph({"interior": ["x"], "boundary": ["z1", "z2", "z3"],
                     "edges": [{"u": "x", "v": z} for z in ("z1", "z2", "z3")]})
    assert boundary_distance_function(g, "x") == (1, 1, 1)
    with pytest.raises(UnknownVertex):
        boundary_distance_function(path, "z1")


def test_is_resolving(path):
    assert is_resolving(path)
    assert not is_resolving(four_cycle_with_pendant())
    broken = build_graph({"interior": ["x1", "x2"], "boundary": ["z1"],
                          "edges": [{"u": "x1", "v": "z1"}]})
    with pytest.raises(DisconnectedGraph):
        is_resolving(broken)


def test_extreme_points(path):
    assert extreme_points(path, {"x1", "x2"}) == {("x1", "z1"), ("x2", "z2")}
    assert extreme_points(path, {"x2"}) == {("x2", "z2")}
    assert extreme_points(four_cycle_with_pendant(), {"x2", "x4"}) == set()
    with pytest.raises(EmptySet):
        extreme_points(path, set())


# assumption checkers

def test_two_points_examples(path):
    assert check_two_points_condition(path).holds
    res = check_two_points_condition(four_cycle_with_pendant())
    assert not res.holds
    assert res.witness == frozenset({"x2", "x4"})
    assert res.n_extreme == 0
    assert check_two_points_condition(graph("square3x3")).holds


def test_two_points_cap():
    g = generate_lattice("square", rows=5, cols=5)[0]
    with pytest.raises(TooLargeForExhaustive):
        check_two_points_condition(g)
    assert check_two_points_condition(generate_lattice("square", rows=2, cols=3)[0], cap=6).holds


def brute_two_points(g):
    """Direct subset enumeration through extreme_points on original distances."""
    from itertools import combinations
    xs = g.interior_order
    for k in range(2, len(xs) + 1):
        for S in combinations(xs, k):
            if len(extreme_points(g, S, reduced=False)) < 2:
                return False
    return True


@pytest.mark.parametrize("name", ["path5", "tree2", "square2x2", "square3x3", "tri3x3", "square3x3-cut"])
def test_two_points_matches_brute_force(name):
    g = graph(name)
    assert check_two_points_condition(g).holds == brute_two_points(g)


def test_two_points_brute_force_on_violators():
    extra_leaf = perturb(graph("square3x3"), SetWeight("x1_1", "x1_2", 1.0))
    spec = extra_leaf.to_dict()
    spec["interior"].append("y")
    spec["edges"].append({"u": "y", "v": "x1_1", "g": 1.0})
    g = build_graph(spec)
    res = check_two_points_condition(g)
    assert not res.holds and not brute_two_points(g)
    assert len(extreme_points(g, res.witness, reduced=False)) == res.n_extreme < 2


def test_height_certificate_examples(path):
    assert check_height_certificate(path, HeightCertificate({"z1": 0, "x1": 1, "x2": 2, "z2": 3}))
    assert not check_height_certificate(path, HeightCertificate({v: 0 for v in path.vertex_order}))
    sq, _ = lattice("square3x3")
    rows = {v: (int(v[1]) if v.startswith("x") else (-1 if v.startswith("zf") else 3)) for v in sq.vertex_order}
    assert check_height_certificate(sq, HeightCertificate(rows))
    with pytest.raises(MissingHeightValue):
        check_height_certificate(path, HeightCertificate({"x1": 0}))


@pytest.mark.parametrize("name", list(LATTICES))
def test_generated_certificates_valid(name):
    g, cert = lattice(name)
    assert check_height_certificate(g, cert)
    assert check_assumption2(g)
    assert is_strongly_connected(g)


def test_assumption2_examples(path):
    assert check_assumption2(path)
    assert check_assumption2(star(True))
    assert not check_assumption2(star(False))


def test_strong_connectivity_examples(path):
    assert is_strongly_connected(path)
    bridged = build_graph({"interior": ["x1", "x2"], "boundary": ["z1", "z2"],
                           "edges": [{"u": "x1", "v": "z1"}, {"u": "x2", "v": "z2"}, {"u": "z1", "v": "z2"}]})
    assert not is_strongly_connected(bridged)
    single = build_graph({"interior": ["x"], "boundary": ["z1", "z2"],
                          "edges": [{"u": "x", "v": "z1"}, {"u": "x", "v": "z2"}]})
    assert is_strongly_connected(single)


# generators

def test_generator_examples():
    g, cert = generate_lattice("square", rows=2, cols=2)
    assert len(g.interior) == 4 and len(g.boundary) == 4
    assert all(g.degree(z) == 1 for z in g.boundary)
    assert check_height_certificate(g, cert)
    assert generate_lattice("path", length=2)[0] == build_graph(path_spec())
    g, cert = generate_lattice("hexagonal", rows=1, cols=3)
    assert (len(g.interior), len(g.boundary)) == (12, 6)
    assert check_height_certificate(g, cert)


@pytest.mark.parametrize("kind, params, sizes", [
    ("square", dict(rows=3, cols=3), (9, 6)),
    ("triangular", dict(rows=3, cols=3), (9, 6)),
    ("ladder", dict(rows=2, cols=4), (16, 16)),
    ("tree", dict(depth=2, branching=3), (4, 9)),
    ("path", dict(length=5), (5, 2)),
])
def test_generator_sizes(kind, params, sizes):
    g, _ = generate_lattice(kind, **params)
    assert (len(g.interior), len(g.boundary)) == sizes


def test_generator_overrides():
    g, _ = generate_lattice("square", rows=2, cols=2, g=2.0, mu=3.0, q=0.25)
    assert set(g.edges.values()) == {2.0}
    assert set(g.mu.values()) == {3.0}
    assert set(g.q.values()) == {0.25}


def test_triangular_is_triangulated():
    g, cert = generate_lattice("triangular", rows=3, cols=3)
    inner = nx.Graph([e for e in g.edges if e[0] in g.interior and e[1] in g.interior])
    assert sum(nx.triangles(inner).values()) // 3 == 8
    assert {cert.h[y] - cert.h[x] for x, y in g.edges if x in g.interior and y in g.interior} <= {
        -1.0, -0.5, 0.5, 1.0}


@pytest.mark.parametrize("kind, params", [
    ("square", dict(rows=0, cols=3)), ("path", dict(length=-1)), ("square", dict(rows=2)),
    ("hexagonal", dict(rows=1, cols=1)), ("tree", dict(depth=2, branching=1)), ("cube", dict()),
    ("square", dict(rows=2, cols=2, depth=3)),
])
def test_generator_rejects(kind, params):
    with pytest.raises(InvalidDimensions):
        generate_lattice(kind, **params)


# perturbations

def test_perturb_examples():
    g, cert = lattice("square3x3")
    cut = perturb(g, RemoveEdge("x1_0", "x1_1"))
    assert not cut.has_edge("x1_0", "x1_1")
    assert check_height_certificate(cut, cert)
    assert not check_height_certificate(perturb(g, RemoveEdge("x0_1", "x1_1")), cert)
    assert perturb(g, SetWeight("x0_0", "x0_1", 2.0)).weight("x0_1", "x0_0") == 2.0
    assert perturb(g, SetMu("x1_1", 3.0)).mu["x1_1"] == 3.0
    assert perturb(g, SetQ("x1_1", -0.5)).q["x1_1"] == -0.5
    assert g.weight("x0_0", "x0_1") == 1.0  # original untouched


def test_perturb_rejects():
    g = graph("square2x2")
    with pytest.raises(UnknownEdge):
        perturb(g, RemoveEdge("x0_0", "x1_1"))
    with pytest.raises(NonPositiveWeight):
        perturb(g, SetWeight("x0_0", "x0_1", 0.0))
    with pytest.raises(NonPositiveWeight):
        perturb(g, SetMu("x0_0", -1.0))
    with pytest.raises(UnknownVertex):
        perturb(g, SetQ("zf0", 1.0))


# a-priori data

def test_extract_apriori_examples(path):
    ap = extract_apriori(path)
    assert [(s.label, s.adjacent_boundary) for s in ap.slots] == [("x1", ("z1",)), ("x2", ("z2",))]
    assert set(ap.boundary_edge_weights.values()) == {1.0}
    ap = extract_apriori(star(True))
    assert {s.label for s in ap.slots if "z" in s.adjacent_boundary} == {"x", "y"}
    g = graph("square4x4")
    ap = extract_apriori(g)
    assert len(ap.slots) == 8
    assert all(len(s.adjacent_boundary) == 1 for s in ap.slots)


def test_extract_apriori_requires_strong_connectivity():
    g = build_graph({"interior": ["x1", "x2"], "boundary": ["z1", "z2"],
                     "edges": [{"u": "x1", "v": "z1"}, {"u": "x2", "v": "z2"}, {"u": "z1", "v": "z2"}]})
    with pytest.raises(NotStronglyConnected):
        extract_apriori(g)


def test_apriori_round_trip():
    ap = extract_apriori(graph("hex1x3-weighted"))
    assert AprioriData.from_dict(ap.to_dict()) == ap
    assert ap.degree_sums() == {z: 1.0 for z in ap.boundary}


# metric properties on the corpus

@pytest.mark.parametrize("name", ALL)
def test_corpus_metric_properties(name):
    g = graph(name)
    red = reduce(g)
    assert reduce(red) == red
    assert (red.interior, red.boundary, red.mu, red.q) == (g.interior, g.boundary, g.mu, g.q)
    d = dict(nx.all_pairs_shortest_path_length(g.to_networkx()))
    dre = dict(nx.all_pairs_shortest_path_length(red.to_networkx()))
    for u in g.vertex_order:
        for v in g.vertex_order:
            assert dre[u][v] >= d[u][v]
    # neighbours of a boundary point are at least as close to everything else
    for z in g.boundary_order:
        for x in g.interior_neighbors(z):
            for p in g.vertex_order:
                if p != z:
                    assert dre[x][p] <= dre[z][p]
    if g.n_interior <= 22:
        assert check_two_points_condition(g).holds
        assert check_two_points_condition(red).holds
        assert is_resolving(g)
