"""Command line interface.

Exit codes: 0 success / PASS, 1 domain failure, 2 usage, I/O or parse error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import io, search
from .errors import GraphInvError, InvalidDimensions, MalformedInput
from .graph import (
    RemoveEdge,
    SetMu,
    SetQ,
    SetWeight,
    check_assumption2,
    check_height_certificate,
    check_two_points_condition,
    extract_apriori,
    is_strongly_connected,
    perturb,
)
from .inverse import DEFAULT_TOL, Tolerances, mu_profile_map, reconstruct, verify_roundtrip
from .lattices import KINDS, generate_lattice
from .spectral import neumann_eigen, extract_spectral_data
from .wave import step_wave

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    tolerances: Tolerances = field(default_factory=Tolerances)
    budget: int = search.DEFAULT_BUDGET
    horizon: int | None = None

    def __post_init__(self):
        if self.budget < 1:
            raise UsageError("--budget must be at least 1")
        if self.horizon is not None and self.horizon < 1:
            raise UsageError("--horizon must be at least 1")


def _config(args) -> RunConfig:
    tol = DEFAULT_TOL
    overrides = {}
    if getattr(args, "tol", None) is not None:
        overrides["zero"] = args.tol
    if getattr(args, "rank_floor", None) is not None:
        overrides["rank_floor"] = args.rank_floor
    if getattr(args, "eigen_residual", None) is not None:
        overrides["eigen_residual"] = args.eigen_residual
    try:
        tol = replace(tol, **overrides)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return RunConfig(tol, args.budget if getattr(args, "budget", None) else search.DEFAULT_BUDGET,
                     getattr(args, "horizon", None))


def _load(loader, path):
    """Read an input file; every failure here is a usage/parse error."""
    try:
        return loader(path)
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except (OSError, GraphInvError, ValueError, TypeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def cmd_generate(args) -> int:
    params = {}
    for name in ("length", "rows", "cols", "depth", "branching", "levels"):
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    try:
        graph, cert = generate_lattice(args.lattice, g=args.g, mu=args.mu, q=args.q, **params)
    except InvalidDimensions as exc:
        raise UsageError(str(exc)) from None
    io.save_graph(graph, args.output)
    cert_path = args.cert or str(Path(args.output).with_suffix("")) + ".cert.json"
    io.save_certificate(cert, cert_path)
    if args.apriori:
        io.save_apriori(extract_apriori(graph), args.apriori)
    print(f"wrote {args.output} ({graph.n_interior} interior, {len(graph.boundary)} boundary) "
          f"and certificate {cert_path}")
    return EXIT_OK


def cmd_check(args) -> int:
    graph = _load(io.load_graph, args.graph)
    ok = True
    strong = is_strongly_connected(graph)
    print(f"strongly connected: {'PASS' if strong else 'FAIL'}")
    ok &= strong
    a2 = check_assumption2(graph)
    print(f"boundary neighbourhoods are cliques: {'PASS' if a2 else 'FAIL'}")
    ok &= a2
    if args.cert:
        cert = _load(io.load_certificate, args.cert)
        hc = check_height_certificate(graph, cert)
        print(f"height certificate: {'PASS' if hc else 'FAIL'}")
        ok &= hc
    if graph.n_interior <= args.cap:
        res = check_two_points_condition(graph, cap=args.cap)
        if res.holds:
            print("two-points condition (exhaustive): PASS")
        else:
            print(f"two-points condition (exhaustive): FAIL witness {{{', '.join(sorted(res.witness))}}} "
                  f"with {res.n_extreme} extreme point(s)")
            ok = False
    elif not args.cert:
        print(f"two-points condition: UNDECIDED (|G| = {graph.n_interior} > cap {args.cap}; pass --cert)")
        ok = False
    return EXIT_OK if ok else EXIT_FAIL


def cmd_spectrum(args) -> int:
    graph = _load(io.load_graph, args.graph)
    data = extract_spectral_data(neumann_eigen(graph), graph)
    io.save_spectral(data, args.output)
    if args.apriori:
        io.save_apriori(extract_apriori(graph), args.apriori)
    if args.mu_map:
        io.write_text(args.mu_map, io.dumps(mu_profile_map(graph)))
    print(f"wrote {args.output}: {data.n} eigenpairs on {len(data.boundary_order)} boundary vertices")
    return EXIT_OK


def cmd_apriori(args) -> int:
    graph = _load(io.load_graph, args.graph)
    io.save_apriori(extract_apriori(graph), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    graph = _load(io.load_graph, args.graph)
    if args.init:
        init = _load(io.read_json, args.init)
        if not isinstance(init, dict):
            raise UsageError("--init file must map vertices to values")
        unknown = [v for v in init if v not in graph.index]
        if unknown:
            raise UsageError(f"unknown vertices in --init: {unknown}")
        W = {str(k): float(v) for k, v in init.items()}
    elif args.vertex:
        if args.vertex not in graph.interior:
            raise UsageError(f"{args.vertex!r} is not an interior vertex")
        W = {args.vertex: args.amplitude}
    else:
        raise UsageError("simulate needs --vertex or --init")
    T = args.horizon if args.horizon is not None else 2 * graph.n_interior
    if T < 1:
        raise UsageError("--horizon must be at least 1")
    field_ = step_wave(graph, W, T)
    io.write_trace_csv(args.output, field_.values, field_.vertex_order)
    return EXIT_OK


def cmd_perturb(args) -> int:
    graph = _load(io.load_graph, args.graph)
    ops = []
    if args.remove_edge:
        ops.append(RemoveEdge(*args.remove_edge))
    if args.set_weight:
        u, v, g = args.set_weight
        ops.append(SetWeight(u, v, _number(g)))
    if args.set_mu:
        x, value = args.set_mu
        ops.append(SetMu(x, _number(value)))
    if args.set_q:
        x, value = args.set_q
        ops.append(SetQ(x, _number(value)))
    if not ops:
        raise UsageError("perturb needs at least one operation")
    for op in ops:
        graph = perturb(graph, op)
    io.save_graph(graph, args.output)
    return EXIT_OK


def _number(text):
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None


def cmd_reconstruct(args) -> int:
    config = _config(args)
    data = _load(io.load_spectral, args.data)
    apriori = _load(io.load_apriori, args.apriori)
    mode = {"known-mu": "known_mu", "zero-q": "zero_potential", "degree": "degree"}[args.mode]
    mu = None
    if mode == "known_mu":
        if args.mu is not None:
            mu = _load(io.read_json, args.mu)
        elif args.mu_value is not None:
            mu = args.mu_value
        else:
            raise UsageError("--mode known-mu needs --mu FILE or --mu-value NUMBER")
    report_path = args.report or str(Path(args.output).parent / "report.json")
    try:
        result = reconstruct(data, apriori, mode, mu=mu, tol=config.tolerances,
                             horizon=config.horizon, budget=config.budget)
    except GraphInvError as exc:
        io.write_text(report_path, io.dumps({"status": "refused", "error": type(exc).__name__,
                                             "message": str(exc)}))
        print(f"reconstruction refused: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    io.save_graph(result.graph, args.output)
    report = {"status": "ok", **{k: v for k, v in result.report.items() if k != "seconds"}}
    report["provenance"] = {x: [float(v) for v in c] for x, c in result.provenance.items()}
    io.write_text(report_path, io.dumps(report))
    print(f"wrote {args.output} ({result.graph.n_interior} interior vertices) and {report_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    original = _load(io.load_graph, args.original)
    recon = _load(io.load_graph, args.recon)
    try:
        rep = verify_roundtrip(original, recon, tol=args.tol)
    except GraphInvError as exc:
        print(f"FAIL: {type(exc).__name__}: {exc}")
        return EXIT_FAIL
    if args.output:
        io.write_text(args.output, io.dumps(rep.to_dict()))
    print(f"{'PASS' if rep.passed else 'FAIL'} structure_equal={rep.structure_equal} "
          f"max_dg={rep.max_dg:.3e} max_dmu={rep.max_dmu:.3e} max_dq={rep.max_dq:.3e}")
    for line in rep.messages:
        print(f"  {line}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def _add_tolerance_flags(p):
    p.add_argument("--tol", type=float, help="zero-test tolerance (default 1e-7)")
    p.add_argument("--rank-floor", type=float, help="singular value floor for kernel ranks (default 1e-8)")
    p.add_argument("--eigen-residual", type=float, help="eigen residual tolerance (default 1e-9)")
    p.add_argument("--budget", type=int, help="membership oracle budget for the maximal search")
    p.add_argument("--horizon", type=int, help="arrival horizon (default N + 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphinv", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a lattice graph and its height certificate")
    p.add_argument("--lattice", required=True, choices=KINDS)
    for name in ("length", "rows", "cols", "depth", "branching", "levels"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--g", type=float, default=1.0, help="edge weight")
    p.add_argument("--mu", type=float, default=1.0, help="vertex measure")
    p.add_argument("--q", type=float, default=0.0, help="potential")
    p.add_argument("-o", "--output", default="graph.json")
    p.add_argument("--cert", help="certificate path (default <output>.cert.json)")
    p.add_argument("--apriori", help="also write the a-priori data here")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("check", help="check strong connectivity and the Main Assumption")
    p.add_argument("graph")
    p.add_argument("--cert", help="height certificate file")
    p.add_argument("--cap", type=int, default=22, help="largest |G| for the exhaustive check")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("spectrum", help="compute Neumann boundary spectral data")
    p.add_argument("graph")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--apriori", help="also write the a-priori data here")
    p.add_argument("--mu-map", help="also write interior mu keyed by boundary distance vector")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("apriori", help="extract a-priori boundary data from a graph")
    p.add_argument("graph")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_apriori)

    p = sub.add_parser("simulate", help="run the discrete wave equation, write a CSV trace")
    p.add_argument("graph")
    p.add_argument("--vertex", help="interior vertex carrying the initial value")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--init", help="JSON map vertex -> initial value")
    p.add_argument("--horizon", type=int, help="last time step (default 2N)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("perturb", help="edit a graph file")
    p.add_argument("graph")
    p.add_argument("--remove-edge", nargs=2, metavar=("U", "V"))
    p.add_argument("--set-weight", nargs=3, metavar=("U", "V", "G"))
    p.add_argument("--set-mu", nargs=2, metavar=("X", "MU"))
    p.add_argument("--set-q", nargs=2, metavar=("X", "Q"))
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("reconstruct", help="recover the graph from spectral and a-priori data")
    p.add_argument("--data", required=True)
    p.add_argument("--apriori", required=True)
    p.add_argument("--mode", required=True, choices=("known-mu", "zero-q", "degree"))
    p.add_argument("--mu", help="JSON: number, label map, or profile map (see README)")
    p.add_argument("--mu-value", type=float, help="uniform interior mu")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--report", help="report path (default report.json next to the output)")
    _add_tolerance_flags(p)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("verify", help="compare a reconstruction with the original graph")
    p.add_argument("original")
    p.add_argument("recon")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("-o", "--output", help="write the report as JSON")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GraphInvError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
