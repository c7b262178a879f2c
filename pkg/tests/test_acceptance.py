"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import contextlib
import io as stdio
import json
import time

import mpmath
import networkx as nx
import numpy as np
import pytest

import corpus
from conftest import criterion
from corpus import ALL, apriori, data, four_cycle_with_pendant, graph
from graphinv import io
from graphinv.cli import EXIT_FAIL, EXIT_OK, main
from graphinv.errors import GraphInvError
from graphinv.graph import (
    boundary_distance_vectors,
    build_graph,
    check_assumption2,
    check_height_certificate,
    check_two_points_condition,
    extract_apriori,
    is_strongly_connected,
    reduce,
)
from graphinv.inverse import KernelOracle, mu_profile_map, reconstruct, verify_roundtrip
from graphinv.spectral import (
    extract_spectral_data,
    fourier_coefficients,
    green_residual,
    green_scale,
    mix_within_clusters,
    neumann_eigen,
    spectral_data,
)
from graphinv.wave import boundary_wave_from_data, step_wave

pytestmark = pytest.mark.slow


def run(*argv):
    return main([str(a) for a in argv])


def passes_checks(g):
    return is_strongly_connected(g) and check_assumption2(g) and check_two_points_condition(g).holds


@criterion(1, "path round trip")
def test_path_round_trip(tmp_path):
    clock = time.perf_counter()
    assert run("generate", "--lattice", "path", "--length", 2, "-o", tmp_path / "g.json") == EXIT_OK
    assert run("spectrum", tmp_path / "g.json", "-o", tmp_path / "d.json", "--apriori", tmp_path / "a.json") == EXIT_OK
    assert run("reconstruct", "--data", tmp_path / "d.json", "--apriori", tmp_path / "a.json",
               "--mode", "zero-q", "-o", tmp_path / "r.json") == EXIT_OK
    assert run("verify", tmp_path / "g.json", tmp_path / "r.json", "-o", tmp_path / "v.json") == EXIT_OK
    elapsed = time.perf_counter() - clock
    report = json.loads((tmp_path / "v.json").read_text())
    assert report["passed"] and report["structure_equal"]
    assert report["max_dg"] <= 1e-9
    # hand eigensolve: [[2, -1], [-1, 2]] minus the pendant eliminations gives λ = 0, 2
    lam = io.load_spectral(tmp_path / "d.json").lambdas.astype(float)
    assert np.max(np.abs(lam - [0.0, 2.0])) <= 1e-10
    assert elapsed < 1.0
    return f"max_dg={report['max_dg']:.1e}, {elapsed:.2f} s pipeline"


LATTICE_RUNS = ["square3x3", "square4x4", "hex1x3", "ladder2x4"]


@criterion(2, "lattice round trips")
def test_lattice_round_trips():
    times = []
    for name in LATTICE_RUNS:
        g, cert = corpus.lattice(name)
        clock = time.perf_counter()
        assert passes_checks(g) and check_height_certificate(g, cert), name
        d, ap = spectral_data(g), extract_apriori(g)
        oracle = KernelOracle(d)
        for mode in ("known_mu", "zero_potential"):
            rec = reconstruct(d, ap, mode, mu=1.0, oracle=oracle)
            rep = verify_roundtrip(g, rec)
            assert rep.passed and max(rep.max_dg, rep.max_dmu, rep.max_dq) <= 1e-6, (name, mode, rep.messages)
        times.append(time.perf_counter() - clock)
        assert times[-1] < 60.0, (name, times[-1])
    return ", ".join(f"{n} {t:.1f} s" for n, t in zip(LATTICE_RUNS, times))


def _matched(g, rec):
    rep = verify_roundtrip(g, rec)
    assert rep.passed, rep.messages
    return rep.matching


@criterion(3, "4x4 perturbation round trips")
def test_perturbation_round_trips():
    out = []
    # (a) edge removed: the cut edge must be absent and every other edge present
    for mode in ("known_mu", "zero_potential"):
        rec = reconstruct(data("square4x4-cut"), apriori("square4x4-cut"), mode, mu=1.0,
                          oracle=corpus.oracle("square4x4-cut"))
        m = _matched(graph("square4x4-cut"), rec)
        key = tuple(sorted((m["x1_1"], m["x1_2"])))
        assert key not in rec.graph.edges
    out.append("a ok")
    # (b) one interior weight 2.5
    for mode in ("known_mu", "zero_potential"):
        rec = reconstruct(data("square4x4-g"), apriori("square4x4-g"), mode, mu=1.0,
                          oracle=corpus.oracle("square4x4-g"))
        m = _matched(graph("square4x4-g"), rec)
        value = rec.graph.edges[tuple(sorted((m["x1_1"], m["x2_1"])))]
        assert abs(value - 2.5) <= 1e-6
    out.append(f"b g={value}")
    # (c) q = 0.7 with known μ
    rec = reconstruct(data("square4x4-q"), apriori("square4x4-q"), "known_mu", mu=1.0,
                      oracle=corpus.oracle("square4x4-q"))
    m = _matched(graph("square4x4-q"), rec)
    assert abs(rec.graph.q[m["x2_2"]] - 0.7) <= 1e-6
    out.append(f"c q={rec.graph.q[m['x2_2']]}")
    # (d) μ = 3.0 recovered with q = 0
    rec = reconstruct(data("square4x4-mu"), apriori("square4x4-mu"), "zero_potential",
                      oracle=corpus.oracle("square4x4-mu"))
    m = _matched(graph("square4x4-mu"), rec)
    assert abs(rec.graph.mu[m["x1_2"]] - 3.0) <= 1e-6
    out.append(f"d mu={rec.graph.mu[m['x1_2']]}")
    return ", ".join(out)


@criterion(4, "wavefront sign pattern")
def test_wavefront_suite():
    rng = np.random.default_rng(44)
    cases = violations = 0
    for name in ALL:
        g = graph(name)
        assert passes_checks(g), name
        red = reduce(g).to_networkx()
        order = g.boundary_order
        for zi, z in enumerate(order):
            dist = nx.single_source_shortest_path_length(red, z)
            for x in g.interior_order:
                t0 = dist[x]
                far = [y for y in g.interior_order if dist[y] > t0]
                for _ in range(2):
                    W0 = {y: float(rng.standard_normal()) for y in far}
                    trace = step_wave(g, W0, t0 + 1).boundary_trace(order)[zi]
                    cases += 1
                    violations += bool(trace[: t0 + 1].any())
                    if t0 < 2:
                        continue  # a positive W(x) next to z breaks W(z) = 0 under the Neumann condition
                    W1 = dict(W0, **{x: float(rng.uniform(0.1, 3.0))})
                    trace = step_wave(g, W1, t0 + 1).boundary_trace(order)[zi]
                    cases += 1
                    violations += bool(trace[:t0].any() or not trace[t0] > 0)
    assert violations == 0, f"{violations} of {cases}"
    return f"{cases} cases, 0 violations"


DIGITS = 50


@criterion(5, "spectral and time-step waves agree")
def test_spectral_time_step_equivalence():
    worst = 0.0
    for name in ALL:
        g = graph(name)
        eig = neumann_eigen(g, precision=DIGITS)
        d = extract_spectral_data(eig, g)
        T = 2 * g.n_interior
        rng = np.random.default_rng(500 + ALL.index(name))
        for _ in range(50):
            W = rng.standard_normal(g.n_interior)
            norm = float(np.linalg.norm(W))
            direct = step_wave(g, W, T, precision=DIGITS).boundary_trace(d.boundary_order)
            with mpmath.workdps(DIGITS):
                spectral = boundary_wave_from_data(d, fourier_coefficients(eig, g, W), T)
                dev = float(max(abs(a - b) for a, b in zip(direct.ravel(), spectral.ravel())))
            assert dev <= 1e-9 * norm, (name, dev)
            worst = max(worst, dev / norm)
    return f"worst deviation {worst:.1e}·|W| at {DIGITS} digits"


@criterion(6, "Green's formula")
def test_green_formula():
    worst = 0.0
    for name in ALL:
        g = graph(name)
        n = len(g.vertex_order)
        rng = np.random.default_rng(600 + ALL.index(name))
        for _ in range(100):
            u1, u2 = rng.standard_normal(n), rng.standard_normal(n)
            res, scale = green_residual(g, u1, u2), green_scale(g, u1, u2)
            assert res <= 1e-12 * scale, (name, res, scale)
            worst = max(worst, res / scale)
    return f"worst relative residual {worst:.1e}"


@criterion(7, "boundary distance functions are maximal")
def test_maximality_suite():
    checked = 0
    for name in ALL:
        g = graph(name)
        orc = corpus.oracle(name)
        r = boundary_distance_vectors(g, orc.data.boundary_order)
        truth = corpus.true_coefficients(name)
        for x in g.interior_order:
            variant = corpus.family_of(name, x)
            assert r[x] in orc.maximal(variant), (name, x)
            ks = orc.kernel(r[x], variant)
            assert ks.dim == 1, (name, x, ks.dim)
            v = ks.basis[0]
            v = v if float(v @ truth[x]) >= 0 else -v
            assert np.max(np.abs(v - truth[x])) <= 1e-8, (name, x)
            checked += 1
    return f"{checked} vertices"


@criterion(8, "eigenbasis mixing invariance")
def test_mixing_invariance():
    degenerate = [n for n in ALL if any(len(c) > 1 for c in data(n).clusters)]
    for name in degenerate:
        g = graph(name)
        # zero potential where q = 0, otherwise the graph's own μ
        if any(g.q.values()):
            mode, mu = "known_mu", mu_profile_map(g)
        else:
            mode, mu = "zero_potential", None
        base = io.graph_to_json(reconstruct(data(name), apriori(name), mode, mu=mu,
                                            oracle=corpus.oracle(name)).graph)
        rng = np.random.default_rng(800 + ALL.index(name))
        for _ in range(10):
            mixed = mix_within_clusters(data(name), rng)
            assert not np.array_equal(mixed.traces, data(name).traces)
            assert io.graph_to_json(reconstruct(mixed, apriori(name), mode, mu=mu).graph) == base, name
    return f"{len(degenerate)} degenerate graphs x 10 mixings"


def _violators():
    out = [four_cycle_with_pendant()]
    leaf = graph("square3x3").to_dict()
    leaf["interior"].append("y")
    leaf["edges"].append({"u": "y", "v": "x1_1", "g": 1.0})
    out.append(build_graph(leaf))
    rng = np.random.default_rng(9)
    while len(out) < 40:
        n = int(rng.integers(3, 8))
        G = nx.gnp_random_graph(n, float(rng.uniform(0.3, 0.8)), seed=int(rng.integers(1 << 30)))
        if not nx.is_connected(G):
            continue
        edges = [{"u": f"x{a}", "v": f"x{b}", "g": float(rng.choice([1.0, 0.5, 2.0]))} for a, b in G.edges]
        m = int(rng.integers(1, 4))
        for k in range(m):
            for x in rng.choice(n, size=int(rng.integers(1, 3)), replace=False):
                edges.append({"u": f"x{x}", "v": f"z{k}", "g": 1.0})
        g = build_graph({"interior": [f"x{i}" for i in range(n)], "boundary": [f"z{k}" for k in range(m)],
                         "edges": edges})
        if not passes_checks(g):
            out.append(g)
    return out


@criterion(9, "negative controls")
def test_negative_controls(tmp_path):
    io.save_graph(four_cycle_with_pendant(), tmp_path / "c4.json")
    buf = stdio.StringIO()
    with contextlib.redirect_stdout(buf):
        code = run("check", tmp_path / "c4.json")
    assert code == EXIT_FAIL
    line = next(l for l in buf.getvalue().splitlines() if l.startswith("two-points"))
    assert "FAIL witness {x2, x4}" in line
    refused = certified = 0
    for g in _violators():
        for mode in ("zero_potential", "known_mu"):
            try:
                reconstruct(spectral_data(g), extract_apriori(g), mode, mu=1.0)
            except GraphInvError:
                refused += 1
            else:
                certified += 1
    assert certified == 0, f"{certified} violating inputs were certified"
    return f"{line.split(': ', 1)[1]}; {refused} refusals, 0 certified"
