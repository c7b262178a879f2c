"""Reconstruction of the interior graph, weights and potential from boundary spectral data.

Pipeline: kernel spaces of silence constraints, maximal time profiles, a pool of
single-vertex candidates, selection of the orthogonal basis, then structure and weight
recovery with a final residual check against the input data.
"""

from __future__ import annotations

import math
import time
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import search
from .errors import (
    AmbiguousBasis,
    AssumptionViolation,
    DimensionMismatch,
    IdenticalMembers,
    InconsistentApriori,
    InconsistentAprioriWeights,
    MissingMu,
    NoValidBasis,
    NonConstantZeroMode,
    NoZeroMode,
    ProfileOutOfBounds,
    ResidualCheckFailed,
    SearchBudgetExceeded,
    UnmatchedVertex,
)
from .graph import (
    EXHAUSTIVE_CAP,
    AprioriData,
    WeightedBoundaryGraph,
    boundary_distance_vectors,
    check_assumption2,
    check_two_points_condition,
    edge_key,
    is_strongly_connected,
    reduce,
)
from .spectral import SpectralData, spectral_data
from .wave import BoundaryObserver


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used throughout the pipeline."""

    rank_floor: float = 1e-8
    zero: float = 1e-7
    eigen_residual: float = 1e-9
    krylov_breakdown: float = 1e-10
    cluster: float = 1e-8
    zero_mode: float = 1e-9
    residual_lambda: float = 1e-7
    residual_projector: float = 1e-6
    verify: float = 1e-6
    output_decimals: int = 10

    def __post_init__(self):
        for name in ("rank_floor", "zero", "eigen_residual", "krylov_breakdown", "cluster",
                     "zero_mode", "residual_lambda", "residual_projector", "verify"):
            if not getattr(self, name) > 0:
                raise ValueError(f"tolerance {name} must be positive")


DEFAULT_TOL = Tolerances()

FULL = "full"


@dataclass(frozen=True)
class SlotVariant:
    """Family relaxed at the boundary vertices adjacent to one slot (boundary indices)."""

    adjacent: frozenset
    labels: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "adjacent", frozenset(int(k) for k in self.adjacent))


def slot_variants(apriori: AprioriData, boundary_order=None) -> list:
    """One variant per distinct boundary-adjacency pattern among the slots."""
    order = tuple(apriori.boundary if boundary_order is None else boundary_order)
    pos = {z: k for k, z in enumerate(order)}
    groups = {}
    for s in apriori.slots:
        key = frozenset(pos[z] for z in s.adjacent_boundary)
        groups.setdefault(key, []).append(s.label)
    return [SlotVariant(k, tuple(v)) for k, v in sorted(groups.items(), key=lambda kv: sorted(kv[0]))]


@dataclass(frozen=True, eq=False)
class KernelSpace:
    dim: int
    basis: np.ndarray  # rows are orthonormal coefficient vectors


class KernelOracle:
    """Kernel dimension of the silence constraints for a time profile, memoised.

    A profile s forbids u(z, t) for t < s(z). Because the rows for t = 0 and t = 1
    coincide, z contributes min(s(z) − 1, saturation(z)) orthonormal Krylov rows; this
    count vector is the cache key shared by the full and all slot families.
    """

    def __init__(self, data: SpectralData, tol: Tolerances = DEFAULT_TOL):
        self.data = data
        self.tol = tol
        self.N = data.n
        self.m = len(data.boundary_order)
        self.observer = BoundaryObserver(data, breakdown=tol.krylov_breakdown,
                                         cluster_tol=tol.cluster)
        self.saturation = tuple(self.observer.saturation)
        self._member = {}
        self._rank = {}
        self._maximal = {}
        self.svd_calls = 0
        self._proj = None

    def bounds(self, variant) -> tuple:
        N = self.N
        if variant == FULL:
            lower = (2,) * self.m
        else:
            lower = tuple(1 if k in variant.adjacent else 2 for k in range(self.m))
        return lower, (N,) * self.m

    def _check(self, s, variant):
        s = tuple(int(v) for v in s)
        if len(s) != self.m:
            raise ProfileOutOfBounds(f"profile has {len(s)} entries, expected {self.m}")
        lower, upper = self.bounds(variant)
        for k, (v, lo, hi) in enumerate(zip(s, lower, upper)):
            if not lo <= v <= hi:
                raise ProfileOutOfBounds(f"s[{k}] = {v} outside [{lo}, {hi}]")
        return s

    def key(self, s) -> tuple:
        return tuple(min(max(v - 1, 0), sat) for v, sat in zip(s, self.saturation))

    def _rows(self, key):
        blocks = [self.observer.rows(z, c) for z, c in enumerate(key) if c > 0]
        if not blocks:
            return np.zeros((0, self.N))
        return np.vstack(blocks)

    def _svd(self, key):
        R = self._rows(key)
        if R.shape[0] == 0:
            return 0, np.eye(self.N)
        self.svd_calls += 1
        _, sv, Vt = np.linalg.svd(R, full_matrices=True)
        tau = max(max(R.shape) * np.finfo(float).eps * sv[0], self.tol.rank_floor)
        rank = int(np.sum(sv > tau))
        self._rank[key] = rank
        return rank, Vt[rank:]

    def _prefix_projectors(self):
        if self._proj is None:
            self._proj = []
            for z in range(self.m):
                Q = self.observer.bases[z]
                acc = [np.zeros((self.N, self.N))]
                for k in range(Q.shape[0]):
                    acc.append(acc[-1] + np.outer(Q[k], Q[k]))
                self._proj.append(acc)
        return self._proj

    def _clearly_full_rank(self, key) -> bool:
        """Cheap sufficient test for full rank, deferring to the SVD when it fails.

        R^T R is the sum of the prefix projectors of each block. Cholesky of
        R^T R − 1e-10·I succeeds only if σ_min(R) > 1e-5, far above the rank threshold.
        """
        proj = self._prefix_projectors()
        G = -1e-10 * np.eye(self.N)
        for z, c in enumerate(key):
            if c:
                G += proj[z][c]
        try:
            np.linalg.cholesky(G)
        except np.linalg.LinAlgError:
            return False
        return True

    def member_key(self, key) -> bool:
        hit = self._member.get(key)
        if hit is None:
            if sum(key) < self.N:
                hit = True
            elif self._clearly_full_rank(key):
                hit = False
            else:
                rank = self._rank.get(key)
                if rank is None:
                    rank, _ = self._svd(key)
                hit = rank < self.N
            self._member[key] = hit
        return hit

    def is_member(self, s, variant=FULL) -> bool:
        return self.member_key(self.key(self._check(s, variant)))

    def kernel(self, s, variant=FULL) -> KernelSpace:
        key = self.key(self._check(s, variant))
        rank, null = self._svd(key)
        return KernelSpace(self.N - rank, null)

    def maximal(self, variant=FULL, *, budget=search.DEFAULT_BUDGET,
                exhaustive_limit=search.EXHAUSTIVE_LIMIT) -> list:
        """Maximal members of the family, searched in a box compressed by saturation."""
        lower, upper = self.bounds(variant)
        cache_key = (lower, budget, exhaustive_limit)
        if cache_key in self._maximal:
            return self._maximal[cache_key]
        # values above saturation + 1 add no rows, so they are all equivalent
        cap = tuple(min(u, sat + 1) for u, sat in zip(upper, self.saturation))

        def member(s):
            return self.member_key(self.key(s))

        found = search.maximal_elements(member, lower, cap, budget=budget,
                                        exhaustive_limit=exhaustive_limit)
        out = sorted({tuple(u if (v == c and c < u) else v for v, c, u in zip(s, cap, upper))
                      for s in found})
        self._maximal[cache_key] = out
        return out


def kernel_space(data: SpectralData, s, variant=FULL, tol: Tolerances = DEFAULT_TOL) -> KernelSpace:
    return KernelOracle(data, tol).kernel(s, variant)


def profile_in_family(data: SpectralData, s, variant=FULL, tol: Tolerances = DEFAULT_TOL) -> bool:
    return KernelOracle(data, tol).is_member(s, variant)


def enumerate_maximal(data: SpectralData, variant=FULL, tol: Tolerances = DEFAULT_TOL, **kw) -> list:
    return KernelOracle(data, tol).maximal(variant, **kw)


@dataclass(eq=False)
class Candidate:
    coefficients: np.ndarray
    pattern: frozenset  # boundary indices where the initial value is nonzero
    arrival: tuple
    values: tuple
    sources: list = field(default_factory=list)


@dataclass
class PoolResult:
    candidates: list
    maximal_counts: dict
    higher_dim: list
    dropped_silent: int = 0
    dropped_mixed_sign: int = 0
    duplicates: int = 0

    def __len__(self):
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    def __getitem__(self, i):
        return self.candidates[i]


def _family_name(variant):
    return FULL if variant == FULL else "slot:" + ",".join(variant.labels or map(str, sorted(variant.adjacent)))


def candidate_pool(data: SpectralData, apriori: AprioriData, tol: Tolerances = DEFAULT_TOL, *,
                   oracle: KernelOracle | None = None, horizon: int | None = None,
                   budget=search.DEFAULT_BUDGET,
                   exhaustive_limit=search.EXHAUSTIVE_LIMIT) -> PoolResult:
    """Sign-fixed unit vectors spanning one-dimensional kernels at maximal profiles."""
    data = _align(data, apriori)
    oracle = oracle or KernelOracle(data, tol)
    H = data.n + 1 if horizon is None else int(horizon)
    variants = [FULL] + slot_variants(apriori, data.boundary_order)
    result = PoolResult([], {}, [])
    for variant in variants:
        name = _family_name(variant)
        maxima = oracle.maximal(variant, budget=budget, exhaustive_limit=exhaustive_limit)
        result.maximal_counts[name] = len(maxima)
        for s in maxima:
            ks = oracle.kernel(s, variant)
            if ks.dim == 0:
                continue
            if ks.dim > 1:
                result.higher_dim.append((name, s, ks.dim))
                continue
            c = ks.basis[0]
            report = oracle.observer.arrival(c, H, tol.zero)
            if report.silent:
                result.dropped_silent += 1
                continue
            signs = {math.copysign(1.0, v) for v in report.values}
            if len(signs) != 1:
                result.dropped_mixed_sign += 1
                continue
            if signs == {-1.0}:
                c = -c
                report = oracle.observer.arrival(c, H, tol.zero)
            dup = next((cand for cand in result.candidates
                        if np.max(np.abs(cand.coefficients - c)) <= tol.zero * 10), None)
            if dup is not None:
                dup.sources.append((name, s))
                result.duplicates += 1
                continue
            pattern = frozenset(k for k in range(oracle.m)
                                if abs(float(data.traces[:, k] @ c)) > tol.zero)
            result.candidates.append(Candidate(c, pattern, report.times, report.values, [(name, s)]))
    return result


@dataclass(eq=False)
class CandidateBasis:
    """Selected members ordered by arrival profile; labels are v1..vN in that order."""

    members: list

    @property
    def labels(self) -> list:
        return [f"v{i + 1}" for i in range(len(self.members))]

    @property
    def matrix(self) -> np.ndarray:
        return np.vstack([m.coefficients for m in self.members])

    def __len__(self):
        return len(self.members)


def select_A0(pool, N: int, tol: Tolerances = DEFAULT_TOL, *, node_budget: int = 5_000_000) -> CandidateBasis:
    """Unique size-N orthogonal subset such that every left-out candidate has a negative
    inner product with some selected member."""
    cands = list(pool)
    p = len(cands)
    if p < N:
        raise NoValidBasis(f"pool has {p} candidates, need {N}")
    V = np.vstack([c.coefficients for c in cands])
    G = V @ V.T
    ortho = np.abs(G) <= tol.zero
    nbr = [0] * p
    for i in range(p):
        bits = 0
        for j in np.flatnonzero(ortho[i]):
            if j != i:
                bits |= 1 << int(j)
        nbr[i] = bits
    cliques = []
    nodes = 0

    def extend(chosen, cand_bits):
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            raise SearchBudgetExceeded("selection backtracking budget exhausted")
        if len(chosen) == N:
            cliques.append(tuple(chosen))
            return
        if len(chosen) + cand_bits.bit_count() < N:
            return
        bits = cand_bits
        while bits:
            low = bits & -bits
            j = low.bit_length() - 1
            bits ^= low
            # only extend with higher indices to enumerate each clique once
            extend(chosen + [j], bits & nbr[j])
            if len(chosen) + 1 + bits.bit_count() < N:
                return

    extend([], (1 << p) - 1)
    valid = []
    for clique in cliques:
        inside = set(clique)
        ok = True
        for e in range(p):
            if e in inside:
                continue
            if not any(G[e, j] < -tol.zero for j in clique):
                ok = False
                break
        if ok:
            valid.append(clique)
    if not valid:
        raise NoValidBasis(f"no orthogonal {N}-subset passes the negativity test "
                           f"({len(cliques)} orthogonal subsets, pool {p})")
    if len(valid) > 1:
        raise AmbiguousBasis(f"{len(valid)} subsets pass the selection criteria")
    members = sorted((cands[j] for j in valid[0]), key=lambda c: c.arrival)
    return CandidateBasis(members)


def _coeffs(member):
    return np.asarray(member.coefficients if isinstance(member, Candidate) else member, dtype=float)


def boundary_adjacency(member, data: SpectralData, tol: Tolerances = DEFAULT_TOL) -> frozenset:
    """Boundary labels z with W(z) = Σ_j c_j φ_j(z) nonzero."""
    values = data.to_float().traces.T @ _coeffs(member)
    return frozenset(z for z, v in zip(data.boundary_order, values) if abs(v) > tol.zero)


def interior_adjacency(m1, m2, data: SpectralData, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Σ_j λ_j c1_j c2_j ≠ 0, i.e. the wave from one member reaches the other at t = 2."""
    a, b = _coeffs(m1), _coeffs(m2)
    if np.max(np.abs(a - b)) <= tol.zero:
        raise IdenticalMembers("interior_adjacency needs two distinct members")
    lam = data.to_float().lambdas.astype(float)
    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    return abs(float(np.sum(lam * a * b))) > tol.zero * scale


@dataclass(eq=False)
class Structure:
    labels: list
    coefficients: np.ndarray
    boundary: dict  # label -> frozenset of boundary labels
    edges: list  # sorted interior label pairs

    def neighbors(self, x) -> set:
        out = {b for a, b in self.edges if a == x} | {a for a, b in self.edges if b == x}
        return out

    def degree(self, x) -> int:
        return len(self.neighbors(x)) + len(self.boundary[x])


def recover_structure(basis: CandidateBasis, data: SpectralData, tol: Tolerances = DEFAULT_TOL) -> Structure:
    labels = basis.labels
    C = basis.matrix
    bnd = {x: boundary_adjacency(C[i], data, tol) for i, x in enumerate(labels)}
    edges = []
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            if interior_adjacency(C[i], C[j], data, tol):
                edges.append(edge_key(labels[i], labels[j]))
    return Structure(labels, C, bnd, sorted(edges))


def _match_slots(structure: Structure, data: SpectralData, apriori: AprioriData, mu: Mapping) -> dict:
    """Assign each boundary-adjacent member to an a-priori slot with the same pattern.

    Within a group of equal patterns the assignment minimises the mismatch between the
    observed boundary values W_x(z) and those predicted from the a-priori weights.
    """
    groups = {}
    for s in apriori.slots:
        groups.setdefault(frozenset(s.adjacent_boundary), []).append(s.label)
    members = {}
    for x in structure.labels:
        if structure.boundary[x]:
            members.setdefault(structure.boundary[x], []).append(x)
    if {k: len(v) for k, v in groups.items()} != {k: len(v) for k, v in members.items()}:
        raise InconsistentApriori("boundary adjacency patterns of the reconstruction do not "
                                  "match the a-priori slots")
    sums = apriori.degree_sums()
    traces = data.to_float().traces
    zpos = {z: k for k, z in enumerate(data.boundary_order)}
    index = {x: i for i, x in enumerate(structure.labels)}
    assignment = {}
    for pattern, xs in sorted(members.items(), key=lambda kv: sorted(kv[0])):
        ys = groups[pattern]
        if len(xs) == 1:
            assignment[xs[0]] = ys[0]
            continue
        zs = sorted(pattern)
        cost = np.zeros((len(xs), len(ys)))
        for a, x in enumerate(xs):
            w = structure.coefficients[index[x]]
            observed = np.array([traces[:, zpos[z]] @ w for z in zs])
            wxx = 1.0 / math.sqrt(_mu_of(mu, x))
            for b, y in enumerate(ys):
                predicted = np.array([apriori.boundary_edge_weights[(y, z)] * wxx / sums[z] for z in zs])
                cost[a, b] = float(np.sum((observed - predicted) ** 2))
        rows, cols = linear_sum_assignment(cost)
        for a, b in zip(rows, cols):
            assignment[xs[a]] = ys[b]
    return assignment


def _mu_of(mu, x):
    try:
        return float(mu[x])
    except KeyError:
        raise MissingMu(f"no measure supplied for interior vertex {x!r}") from None


def recover_weights_known_mu(basis: CandidateBasis, data: SpectralData, apriori: AprioriData,
                             mu: Mapping, tol: Tolerances = DEFAULT_TOL, *,
                             structure: Structure | None = None) -> tuple:
    """Edge weights (interior and boundary-adjacent) and potential from known μ.

    Returns (g, q) with g keyed by sorted label pairs and q keyed by interior label.
    """
    data = _align(data, apriori)
    structure = structure or recover_structure(basis, data, tol)
    labels = structure.labels
    for x in labels:
        _mu_of(mu, x)
    slot_of = _match_slots(structure, data, apriori, mu)
    sums = apriori.degree_sums()
    lam = data.to_float().lambdas.astype(float)
    C = structure.coefficients
    index = {x: i for i, x in enumerate(labels)}
    wself = {x: 1.0 / math.sqrt(_mu_of(mu, x)) for x in labels}

    def g_boundary(x, z):
        return apriori.boundary_edge_weights[(slot_of[x], z)]

    def w_at_boundary(x, z):
        return g_boundary(x, z) * wself[x] / sums[z]

    g = {}
    for x in labels:
        for z in sorted(structure.boundary[x]):
            g[edge_key(x, z)] = g_boundary(x, z)
    for x, y in structure.edges:
        P = float(np.sum(lam * C[index[x]] * C[index[y]]))
        shared = structure.boundary[x] & structure.boundary[y]
        correction = sum(g_boundary(y, z) * w_at_boundary(x, z) for z in sorted(shared))
        value = (-P / wself[y] - correction) / wself[x]
        if not value > 0:
            raise InconsistentAprioriWeights(f"recovered weight {value!r} on edge ({x}, {y}) is not positive")
        g[edge_key(x, y)] = value
    q = {}
    for x in labels:
        i = index[x]
        diag = float(np.sum(lam * C[i] ** 2))
        flux = 0.0
        for y in sorted(structure.neighbors(x)):
            flux += g[edge_key(x, y)] * (0.0 - wself[x])
        for z in sorted(structure.boundary[x]):
            flux += g_boundary(x, z) * (w_at_boundary(x, z) - wself[x])
        q[x] = diag + wself[x] * flux
    return g, q


def recover_mu_zero_potential(basis: CandidateBasis, data: SpectralData,
                              tol: Tolerances = DEFAULT_TOL) -> dict:
    """μ_x = Ŵ_x(j₀)² / c² where λ_{j₀} = 0 and c is the constant trace of φ_{j₀}."""
    lam = data.to_float().lambdas.astype(float)
    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    zeros = np.flatnonzero(np.abs(lam) <= tol.zero_mode * scale)
    if zeros.size == 0:
        raise NoZeroMode("no eigenvalue is zero within tolerance; the potential is not zero")
    if zeros.size > 1:
        raise NoZeroMode(f"{zeros.size} eigenvalues are zero within tolerance; expected exactly one")
    j0 = int(zeros[0])
    trace = data.to_float().traces[j0].astype(float)
    c = float(np.mean(trace))
    if c == 0.0 or np.max(np.abs(trace - c)) > tol.zero * max(1.0, abs(c)):
        raise NonConstantZeroMode("the zero mode is not constant on the boundary")
    C = basis.matrix
    return {x: float(C[i, j0] ** 2 / c ** 2) for i, x in enumerate(basis.labels)}


# μ specifications for the known-μ mode

def mu_profile_map(graph: WeightedBoundaryGraph) -> dict:
    """Interior μ keyed by boundary distance vectors, the label-free form accepted by
    `reconstruct` in known-μ mode."""
    vectors = boundary_distance_vectors(graph)
    return {"boundary_order": list(graph.boundary_order),
            "profiles": [{"r": list(vectors[x]), "mu": graph.mu[x]} for x in graph.interior_order]}


def _resolve_mu(mu, basis: CandidateBasis, boundary_order) -> dict:
    labels = basis.labels
    profiles = {x: tuple(m.arrival) for x, m in zip(labels, basis.members)}
    if mu is None:
        raise MissingMu("known-μ mode needs μ values")
    if isinstance(mu, (int, float)) and not isinstance(mu, bool):
        return {x: float(mu) for x in labels}
    if callable(mu) and not isinstance(mu, Mapping):
        return {x: float(mu(profiles[x])) for x in labels}
    if not isinstance(mu, Mapping):
        raise MissingMu(f"unsupported μ specification {type(mu).__name__}")
    structured = {"default", "labels", "profiles", "boundary_order"} & set(mu)
    by_label, by_profile, default = {}, {}, None
    if structured:
        default = mu.get("default")
        by_label = dict(mu.get("labels") or {})
        order = mu.get("boundary_order")
        perm = None
        if order is not None:
            order = [str(z) for z in order]
            if sorted(order) != sorted(boundary_order):
                raise MissingMu("μ profile map uses a different boundary")
            perm = [order.index(z) for z in boundary_order]
        for rec in mu.get("profiles") or []:
            r = tuple(int(v) for v in rec["r"])
            if perm is not None:
                r = tuple(r[k] for k in perm)
            by_profile[r] = float(rec["mu"])
    else:
        for k, v in mu.items():
            if isinstance(k, tuple):
                by_profile[tuple(int(a) for a in k)] = float(v)
            else:
                by_label[str(k)] = float(v)
    out = {}
    for x in labels:
        if x in by_label:
            out[x] = float(by_label[x])
        elif profiles[x] in by_profile:
            out[x] = by_profile[profiles[x]]
        elif default is not None:
            out[x] = float(default)
        else:
            raise MissingMu(f"no μ for {x} (boundary distance vector {profiles[x]})")
    return out


# assembly

def _align(data: SpectralData, apriori: AprioriData) -> SpectralData:
    """Reorder trace columns into the a-priori boundary order."""
    if tuple(data.boundary_order) == tuple(apriori.boundary):
        return data
    if sorted(data.boundary_order) != sorted(apriori.boundary):
        raise InconsistentApriori("spectral data and a-priori data list different boundaries")
    pos = {z: k for k, z in enumerate(data.boundary_order)}
    cols = [pos[z] for z in apriori.boundary]
    return SpectralData(data.lambdas, data.traces[:, cols], apriori.boundary, precision=data.precision)


def _same_data(a: SpectralData, b: SpectralData) -> bool:
    return (a is b or (a.boundary_order == b.boundary_order
                       and np.array_equal(a.lambdas, b.lambdas)
                       and np.array_equal(a.traces, b.traces)))


@dataclass(eq=False)
class ReconstructedGraph:
    graph: WeightedBoundaryGraph
    provenance: dict  # label -> coefficient vector
    report: dict
    arrivals: dict = field(default_factory=dict)  # label -> measured arrival profile


MODES = ("known_mu", "zero_potential", "degree")


def _round(value, decimals):
    return round(float(value), decimals) + 0.0


def reconstruct(data: SpectralData, apriori: AprioriData, mode: str = "zero_potential", *,
                mu=None, tol: Tolerances = DEFAULT_TOL, horizon: int | None = None,
                budget=search.DEFAULT_BUDGET, exhaustive_limit=search.EXHAUSTIVE_LIMIT,
                oracle: KernelOracle | None = None, check_assumptions: bool = True,
                two_points_cap: int = EXHAUSTIVE_CAP) -> ReconstructedGraph:
    """Recover interior vertices, edges, weights and potential.

    mode: "known_mu" (needs `mu`: a number, a label map, a profile map or a callable on
    boundary distance vectors), "zero_potential" (q = 0, μ recovered) or "degree"
    (μ = vertex degree in the recovered structure, then as known_mu).
    """
    mode = mode.replace("-", "_")
    if mode == "zero_q":
        mode = "zero_potential"
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    clock = time.perf_counter()
    data = _align(data, apriori)
    if data.n < 1:
        raise DimensionMismatch("spectral data has no eigenpairs")
    if len(apriori.slots) > data.n:
        # every slot is a distinct interior vertex, so N is at least the slot count
        raise DimensionMismatch(
            f"spectral data has {data.n} eigenpairs but the a-priori data lists {len(apriori.slots)} slots")
    if oracle is None or not _same_data(oracle.data, data) or oracle.tol != tol:
        oracle = KernelOracle(data, tol)
    pool = candidate_pool(data, apriori, tol, oracle=oracle, horizon=horizon, budget=budget,
                          exhaustive_limit=exhaustive_limit)
    basis = select_A0(pool, data.n, tol)
    structure = recover_structure(basis, data, tol)
    if mode == "zero_potential":
        mu_int = recover_mu_zero_potential(basis, data, tol)
    elif mode == "degree":
        mu_int = {x: float(structure.degree(x)) for x in structure.labels}
    else:
        mu_int = _resolve_mu(mu, basis, data.boundary_order)
    g, q = recover_weights_known_mu(basis, data, apriori, mu_int, tol, structure=structure)
    q_recovered = dict(q)
    if mode == "zero_potential":
        q = {x: 0.0 for x in q}
    d = tol.output_decimals
    graph = WeightedBoundaryGraph(
        frozenset(structure.labels), frozenset(apriori.boundary),
        {k: _round(v, d) for k, v in g.items()},
        {**{x: _round(v, d) for x, v in mu_int.items()}, **dict(apriori.boundary_mu)},
        {x: _round(v, d) for x, v in q.items()},
    )
    report = {
        "mode": mode,
        "N": data.n,
        "pool_size": len(pool),
        "maximal_counts": pool.maximal_counts,
        "higher_dimensional_kernels": len(pool.higher_dim),
        "dropped_silent": pool.dropped_silent,
        "dropped_mixed_sign": pool.dropped_mixed_sign,
        "duplicate_candidates": pool.duplicates,
        "oracle_rank_evaluations": oracle.svd_calls,
        "saturation": list(oracle.saturation),
        "interior_edges": len(structure.edges),
        "max_abs_recovered_q": max((abs(v) for v in q_recovered.values()), default=0.0),
    }
    report.update(residual_check(graph, data, tol))
    if check_assumptions:
        report.update(_assumption_check(graph, two_points_cap))
    report["seconds"] = round(time.perf_counter() - clock, 3)
    provenance = {x: basis.members[i].coefficients.copy() for i, x in enumerate(basis.labels)}
    arrivals = {x: tuple(basis.members[i].arrival) for i, x in enumerate(basis.labels)}
    return ReconstructedGraph(graph, provenance, report, arrivals)


def residual_check(graph: WeightedBoundaryGraph, data: SpectralData, tol: Tolerances = DEFAULT_TOL) -> dict:
    """Recompute spectral data from `graph` and compare eigenvalues and cluster projectors."""
    redo = spectral_data(graph)
    ref = data.to_float()
    cols = [redo.boundary_order.index(z) for z in ref.boundary_order]
    T1 = ref.traces.astype(float)
    T2 = redo.traces[:, cols]
    if redo.n != ref.n:
        raise ResidualCheckFailed(f"reconstruction has {redo.n} eigenpairs, data has {ref.n}")
    dl = float(np.max(np.abs(redo.lambdas - ref.lambdas.astype(float)), initial=0.0))
    dp = 0.0
    for grp in ref.clusters:
        idx = list(grp)
        P1 = T1[idx].T @ T1[idx]
        P2 = T2[idx].T @ T2[idx]
        dp = max(dp, float(np.max(np.abs(P1 - P2), initial=0.0)))
    out = {"residual_lambda": dl, "residual_projector": dp}
    if dl > tol.residual_lambda or dp > tol.residual_projector:
        raise ResidualCheckFailed(
            f"reconstruction does not reproduce the data (eigenvalues off by {dl:.3e}, "
            f"boundary projectors off by {dp:.3e})")
    return out


def _assumption_check(graph, cap):
    if not is_strongly_connected(graph):
        raise AssumptionViolation("reconstructed graph is not strongly connected")
    if not check_assumption2(graph):
        raise AssumptionViolation("reconstructed graph violates the boundary clique assumption")
    tpc = None
    if graph.n_interior <= cap:
        res = check_two_points_condition(graph)
        if not res.holds:
            raise AssumptionViolation(
                f"reconstructed graph violates the Two-Points Condition (subset {sorted(res.witness)})")
        tpc = True
    return {"assumptions_checked": True, "two_points_exhaustive": tpc}


@dataclass
class RoundTripReport:
    passed: bool
    structure_equal: bool
    matching: dict
    missing_edges: list
    extra_edges: list
    max_dg: float
    max_dmu: float
    max_dq: float
    messages: list

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "structure_equal": self.structure_equal,
            "matching": dict(sorted(self.matching.items())),
            "missing_edges": [list(e) for e in self.missing_edges],
            "extra_edges": [list(e) for e in self.extra_edges],
            "max_dg": self.max_dg,
            "max_dmu": self.max_dmu,
            "max_dq": self.max_dq,
            "messages": list(self.messages),
        }


def verify_roundtrip(original: WeightedBoundaryGraph, recon, tol: float = DEFAULT_TOL.verify) -> RoundTripReport:
    """Match interior vertices by boundary distance vectors, then compare edges and values.

    A ReconstructedGraph is matched through the arrival profiles measured from its data,
    so a hand-edited reconstruction still matches and reports the edited edges.
    Edges joining two boundary vertices are ignored on both sides.
    """
    other = recon.graph if isinstance(recon, ReconstructedGraph) else recon
    messages = []
    if set(original.boundary) != set(other.boundary):
        raise UnmatchedVertex("graphs have different boundary vertex sets")
    order = original.boundary_order
    r1 = boundary_distance_vectors(original, order)
    r2 = boundary_distance_vectors(other, order)
    if isinstance(recon, ReconstructedGraph) and set(recon.arrivals) == set(other.interior):
        for y in sorted(r2):
            if r2[y] != recon.arrivals[y]:
                messages.append(f"distance vector of {y} is {r2[y]} but its arrival profile is {recon.arrivals[y]}")
        r2 = dict(recon.arrivals)
    inv2 = {}
    for y, r in r2.items():
        if r in inv2:
            raise UnmatchedVertex(f"reconstruction has two vertices with distance vector {r}")
        inv2[r] = y
    if len(r1) != len(r2):
        raise UnmatchedVertex(f"interior sizes differ: {len(r1)} vs {len(r2)}")
    matching = {}
    for x, r in r1.items():
        if r not in inv2:
            raise UnmatchedVertex(f"no reconstructed vertex with distance vector {r} (original {x})")
        matching[x] = inv2[r]
    rename = dict(matching)
    rename.update({z: z for z in original.boundary})
    e1 = {edge_key(rename[u], rename[v]): g for (u, v), g in reduce(original).edges.items()}
    e2 = dict(reduce(other).edges)
    missing = sorted(set(e1) - set(e2))
    extra = sorted(set(e2) - set(e1))
    back = {v: k for k, v in rename.items()}
    missing_named = [edge_key(back[u], back[v]) for u, v in missing]
    for e in missing_named:
        messages.append(f"edge {e[0]}-{e[1]} missing from reconstruction")
    for u, v in extra:
        messages.append(f"reconstruction has extra edge {back[u]}-{back[v]}")
    common = set(e1) & set(e2)
    max_dg = max((abs(e1[k] - e2[k]) for k in common), default=0.0)
    max_dmu = max((abs(original.mu[v] - other.mu[rename[v]]) for v in original.vertex_order), default=0.0)
    max_dq = max((abs(original.q[x] - other.q[matching[x]]) for x in original.interior_order), default=0.0)
    structure_equal = not missing and not extra
    for name, dev in (("g", max_dg), ("mu", max_dmu), ("q", max_dq)):
        if dev > tol:
            messages.append(f"max |{name} deviation| = {dev:.3e} exceeds {tol:.1e}")
    passed = structure_equal and max(max_dg, max_dmu, max_dq) <= tol
    return RoundTripReport(passed, structure_equal, matching, missing_named,
                           [edge_key(back[u], back[v]) for u, v in extra], max_dg, max_dmu, max_dq, messages)
