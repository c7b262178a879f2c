"""Neumann Laplacian with potential: assembly, eigenpairs and boundary spectral data.

Functions on G ∪ ∂G are numpy vectors in `graph.vertex_order` (interior first).
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from functools import cached_property

import mpmath
import numpy as np

from .errors import (
    DimensionMismatch,
    EigenSolverFailure,
    IsolatedBoundaryVertex,
    MalformedInput,
    NotStronglyConnected,
)
from .graph import WeightedBoundaryGraph, is_strongly_connected

CLUSTER_TOL = 1e-8


def cluster_ranges(lambdas, rel: float = CLUSTER_TOL) -> list:
    """Split ascending eigenvalues into runs with |λ_i − λ_{i−1}| ≤ rel·max(1, |λ_i|)."""
    lam = [float(v) for v in lambdas]
    groups = []
    start = 0
    for i in range(1, len(lam)):
        if abs(lam[i] - lam[i - 1]) > rel * max(1.0, abs(lam[i])):
            groups.append(range(start, i))
            start = i
    if lam:
        groups.append(range(start, len(lam)))
    return groups


def _as_array(graph, u, full: bool):
    n, total = graph.n_interior, len(graph.vertex_order)
    if isinstance(u, Mapping):
        # a mapping without boundary keys describes interior values only
        full = full and any(z in u for z in graph.boundary)
        order = graph.vertex_order if full else graph.interior_order
        return np.array([float(u.get(v, 0.0)) for v in order])
    arr = np.asarray(u)
    if arr.dtype != object:
        arr = arr.astype(float)
    if arr.shape == (n,) or (full and arr.shape == (total,)):
        return arr
    raise DimensionMismatch(f"expected a function with {n} or {total} values, got shape {arr.shape}")


class _Matrices:
    """Dense pieces shared by assembly, extension and time stepping."""

    def __init__(self, graph: WeightedBoundaryGraph):
        n, m = graph.n_interior, len(graph.boundary)
        pos = graph.index
        self.n, self.m = n, m
        self.mu_int = np.array([graph.mu[v] for v in graph.interior_order])
        self.mu_bnd = np.array([graph.mu[z] for z in graph.boundary_order])
        self.q = np.array([graph.q[v] for v in graph.interior_order])
        # weights from interior rows to all columns; boundary-boundary edges never enter
        Wg = np.zeros((n, n + m))
        for (u, v), g in graph.edges.items():
            iu, iv = pos[u], pos[v]
            if iu < n:
                Wg[iu, iv] = g
            if iv < n:
                Wg[iv, iu] = g
        self.weights = Wg
        S = Wg[:, n:].sum(axis=0)
        for k, z in enumerate(graph.boundary_order):
            if S[k] <= 0:
                raise IsolatedBoundaryVertex(f"boundary vertex {z!r} has no interior neighbour")
        self.bnd_sums = S
        self.extension = (Wg[:, n:] / S).T  # m x n
        # Δ_G as an n x (n+m) operator on full vectors
        L = Wg.copy()
        L[np.arange(n), np.arange(n)] -= Wg.sum(axis=1)
        self.laplacian = L / self.mu_int[:, None]
        # symmetric stiffness after Neumann elimination
        K = np.diag(Wg.sum(axis=1)) - Wg[:, :n]
        B = Wg[:, n:]
        K = K - (B / S) @ B.T
        self.stiffness = 0.5 * (K + K.T)


def _matrices(graph) -> _Matrices:
    cache = graph.__dict__.setdefault("_graphinv_cache", {})
    if "mats" not in cache:
        cache["mats"] = _Matrices(graph)
    return cache["mats"]


def boundary_extension(graph: WeightedBoundaryGraph, u_interior):
    """Extend interior values to the boundary so that the Neumann value vanishes."""
    u = _as_array(graph, u_interior, full=True)[: graph.n_interior]
    mats = _matrices(graph)
    if u.dtype == object:
        E = np.array(mats.extension, dtype=object)
        return np.concatenate([u, E.dot(u)])
    return np.concatenate([u, mats.extension @ u])


def laplacian(graph: WeightedBoundaryGraph, u_full) -> np.ndarray:
    """Δ_G u on the interior for a function given on all vertices."""
    u = _as_array(graph, u_full, full=True)
    if u.shape[0] != len(graph.vertex_order):
        raise DimensionMismatch("laplacian needs values on every vertex")
    return _matrices(graph).laplacian @ u


def neumann_value(graph: WeightedBoundaryGraph, u_full) -> np.ndarray:
    """∂_ν u on the boundary, in boundary order."""
    u = _as_array(graph, u_full, full=True)
    if u.shape[0] != len(graph.vertex_order):
        raise DimensionMismatch("neumann_value needs values on every vertex")
    mats = _matrices(graph)
    n = mats.n
    B = mats.weights[:, n:]  # n x m
    flux = B.T @ u[:n] - mats.bnd_sums * u[n:]
    return flux / mats.mu_bnd


@dataclass(frozen=True, eq=False)
class InteriorOperator:
    """A = M^{-1} K + diag(q), the Neumann-eliminated action of (−Δ_G + q) on interior values."""

    matrix: np.ndarray
    mu: np.ndarray
    vertex_order: tuple
    stiffness: np.ndarray
    q: np.ndarray

    @property
    def symmetric_form(self) -> np.ndarray:
        """M A = K + M diag(q)."""
        return self.stiffness + np.diag(self.mu * self.q)

    def symmetry_defect(self) -> float:
        MA = self.mu[:, None] * self.matrix
        return float(np.linalg.norm(MA - MA.T) / max(np.linalg.norm(MA), 1e-300))


def assemble_operator(graph: WeightedBoundaryGraph) -> InteriorOperator:
    if not is_strongly_connected(graph):
        raise NotStronglyConnected("the reduced graph is not connected")
    mats = _matrices(graph)
    A = mats.stiffness / mats.mu_int[:, None] + np.diag(mats.q)
    return InteriorOperator(A, mats.mu_int.copy(), graph.interior_order, mats.stiffness.copy(),
                            mats.q.copy())


def inner_product(graph: WeightedBoundaryGraph, u1, u2) -> float:
    """Σ_{x∈G} μ_x u1(x) u2(x); boundary values are ignored."""
    n = graph.n_interior
    a = _as_array(graph, u1, full=True)[:n]
    b = _as_array(graph, u2, full=True)[:n]
    return float(np.sum(_matrices(graph).mu_int * a * b))


def _green_terms(graph, u1, u2):
    n = graph.n_interior
    u1 = _as_array(graph, u1, full=True)
    u2 = _as_array(graph, u2, full=True)
    mats = _matrices(graph)
    lap1, lap2 = laplacian(graph, u1), laplacian(graph, u2)
    nu1, nu2 = neumann_value(graph, u1), neumann_value(graph, u2)
    lhs_terms = mats.mu_int * (u1[:n] * lap2 - u2[:n] * lap1)
    rhs_terms = mats.mu_bnd * (u2[n:] * nu1 - u1[n:] * nu2)
    return lhs_terms, rhs_terms


def green_residual(graph: WeightedBoundaryGraph, u1, u2) -> float:
    """|⟨u1, Δu2⟩ − ⟨u2, Δu1⟩ − Σ_z μ_z (u2 ∂_ν u1 − u1 ∂_ν u2)(z)|."""
    lhs, rhs = _green_terms(graph, u1, u2)
    return float(abs(lhs.sum() - rhs.sum()))


def green_scale(graph: WeightedBoundaryGraph, u1, u2) -> float:
    """Magnitude of the summed terms, the natural scale for green_residual."""
    lhs, rhs = _green_terms(graph, u1, u2)
    return float(max(1.0, np.abs(lhs).sum() + np.abs(rhs).sum()))


@dataclass(frozen=True, eq=False)
class Eigenpairs:
    """Rows of `interior_vectors` / `full_vectors` are the eigenfunctions φ_j."""

    lambdas: np.ndarray
    interior_vectors: np.ndarray
    full_vectors: np.ndarray
    vertex_order: tuple
    boundary_order: tuple
    precision: int | None = None


def _canonical_cluster_basis(Psi: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(Psi columns).

    Unit vectors e_0, e_1, ... are projected onto the span in index order and
    Gram-Schmidt orthogonalised; a projection is accepted when its residual norm is
    clearly nonzero. This removes the solver's arbitrary rotation and sign.
    """
    n, k = Psi.shape
    basis = []
    for i in range(n):
        if len(basis) == k:
            break
        v = Psi @ Psi[i]
        for b in basis:
            v = v - (b @ v) * b
        for b in basis:
            v = v - (b @ v) * b
        nv = np.linalg.norm(v)
        if nv > 1e-3:
            basis.append(v / nv)
    if len(basis) < k:
        raise EigenSolverFailure("could not orthogonalise a degenerate cluster")
    B = np.column_stack(basis)
    # re-express through Psi to stay exactly inside the computed eigenspace
    C = Psi.T @ B
    Q, _ = np.linalg.qr(C)
    Q = Q * np.sign(np.diag(Q.T @ C))[None, :]
    return Psi @ Q


def neumann_eigen(graph: WeightedBoundaryGraph, *, precision: int | None = None) -> Eigenpairs:
    """Eigenpairs of (−Δ_G + q) with zero Neumann value, μ-orthonormal.

    With `precision` (decimal digits) the solve runs in mpmath and the returned arrays
    hold mpf entries; otherwise float64 with a canonical basis in each degenerate cluster.
    """
    op = assemble_operator(graph)
    mats = _matrices(graph)
    if precision is not None:
        return _neumann_eigen_mp(graph, mats, int(precision))
    root = np.sqrt(op.mu)
    S = op.stiffness / root[:, None] / root[None, :] + np.diag(op.q)
    S = 0.5 * (S + S.T)
    try:
        w, V = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverFailure(str(exc)) from None
    for grp in cluster_ranges(w):
        idx = list(grp)
        V[:, idx] = _canonical_cluster_basis(V[:, idx])
    phi = (V / root[:, None]).T  # rows are eigenfunctions on the interior
    full = np.hstack([phi, phi @ mats.extension.T])
    resid = op.matrix @ phi.T - phi.T * w[None, :]
    scale = np.maximum(1.0, np.abs(w))
    if np.any(np.linalg.norm(resid, axis=0) > 1e-9 * scale * max(1.0, np.abs(phi).max())):
        raise EigenSolverFailure("eigenpair residual above tolerance")
    return Eigenpairs(w, phi, full, graph.vertex_order, graph.boundary_order)


def _neumann_eigen_mp(graph, mats, digits):
    n = mats.n
    with mpmath.workdps(digits):
        mu = [mpmath.mpf(v) for v in mats.mu_int]
        root = [mpmath.sqrt(v) for v in mu]
        # rebuild the stiffness in extended precision from the raw weights
        Wg = mats.weights
        K = mpmath.matrix(n, n)
        for i in range(n):
            K[i, i] = mpmath.fsum(mpmath.mpf(g) for g in Wg[i])
            for j in range(n):
                if i != j:
                    K[i, j] -= mpmath.mpf(Wg[i, j])
        S_b = [mpmath.fsum(mpmath.mpf(Wg[i, n + k]) for i in range(n)) for k in range(mats.m)]
        for k in range(mats.m):
            col = [mpmath.mpf(Wg[i, n + k]) for i in range(n)]
            for i in range(n):
                if col[i]:
                    for j in range(n):
                        if col[j]:
                            K[i, j] -= col[i] * col[j] / S_b[k]
        S = mpmath.matrix(n, n)
        for i in range(n):
            for j in range(n):
                S[i, j] = K[i, j] / (root[i] * root[j])
            S[i, i] += mpmath.mpf(mats.q[i])
        try:
            E, Q = mpmath.eigsy(S)
        except Exception as exc:  # mpmath raises plain errors on non-convergence
            raise EigenSolverFailure(str(exc)) from None
        order = sorted(range(n), key=lambda j: E[j])
        lam = np.array([E[j] for j in order], dtype=object)
        phi = np.empty((n, n), dtype=object)
        for r, j in enumerate(order):
            for i in range(n):
                phi[r, i] = Q[i, j] / root[i]
        ext = np.empty((mats.m, n), dtype=object)
        for k in range(mats.m):
            for i in range(n):
                ext[k, i] = mpmath.mpf(Wg[i, n + k]) / S_b[k]
        full = np.hstack([phi, phi.dot(ext.T)])
    return Eigenpairs(lam, phi, full, graph.vertex_order, graph.boundary_order, precision=digits)


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Eigenvalues λ_j and boundary traces; row j of `traces` is φ_j restricted to ∂G."""

    lambdas: np.ndarray
    traces: np.ndarray
    boundary_order: tuple
    precision: int | None = None

    def __post_init__(self):
        lam = np.asarray(self.lambdas)
        tr = np.asarray(self.traces)
        if lam.dtype != object:
            lam = lam.astype(float)
            tr = tr.astype(float)
        if tr.ndim != 2 or tr.shape[0] != lam.shape[0] or tr.shape[1] != len(self.boundary_order):
            raise DimensionMismatch(
                f"traces shape {tr.shape} does not match {lam.shape[0]} eigenvalues "
                f"and {len(self.boundary_order)} boundary vertices")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "traces", tr)
        object.__setattr__(self, "boundary_order", tuple(str(z) for z in self.boundary_order))

    @property
    def n(self) -> int:
        return int(self.lambdas.shape[0])

    @cached_property
    def clusters(self) -> list:
        return cluster_ranges(self.lambdas)

    def to_float(self) -> "SpectralData":
        if self.precision is None:
            return self
        return SpectralData(self.lambdas.astype(float), self.traces.astype(float), self.boundary_order)

    def to_dict(self) -> dict:
        d = self.to_float()
        return {"lambdas": [float(v) for v in d.lambdas],
                "boundary_order": list(d.boundary_order),
                "traces": [[float(v) for v in row] for row in d.traces]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "SpectralData":
        try:
            lam = np.array(d["lambdas"], dtype=float)
            order = tuple(d["boundary_order"])
            tr = np.array(d["traces"], dtype=float).reshape(len(lam), len(order))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedInput(f"bad spectral data: {exc!r}") from None
        if np.any(np.diff(lam) < 0):
            raise MalformedInput("eigenvalues must be ascending")
        return cls(lam, tr, order)


def extract_spectral_data(eig: Eigenpairs, graph: WeightedBoundaryGraph,
                          boundary_order=None) -> SpectralData:
    order = tuple(graph.boundary_order if boundary_order is None else boundary_order)
    pos = {v: i for i, v in enumerate(eig.vertex_order)}
    cols = [pos[z] for z in order]
    return SpectralData(eig.lambdas.copy(), eig.full_vectors[:, cols].copy(), order,
                        precision=eig.precision)


def spectral_data(graph: WeightedBoundaryGraph, **kw) -> SpectralData:
    return extract_spectral_data(neumann_eigen(graph, **kw), graph)


def fourier_coefficients(eig: Eigenpairs, graph: WeightedBoundaryGraph, u) -> np.ndarray:
    """Ŵ(j) = ⟨u, φ_j⟩ in the μ-inner product."""
    n = graph.n_interior
    u = _as_array(graph, u, full=True)[:n]
    mu = _matrices(graph).mu_int
    if eig.precision is not None or u.dtype == object:
        with mpmath.workdps(eig.precision or 15):
            mu_o = np.array([mpmath.mpf(v) for v in mu], dtype=object)
            uo = np.array([mpmath.mpf(v) for v in u], dtype=object)
            return eig.interior_vectors.dot(mu_o * uo)
    return eig.interior_vectors @ (mu * u)


def mix_within_clusters(data: SpectralData, rng: np.random.Generator) -> SpectralData:
    """Apply a random orthogonal transform inside each degenerate eigenvalue cluster."""
    traces = data.traces.copy()
    for grp in data.clusters:
        idx = list(grp)
        if len(idx) < 2:
            if rng.random() < 0.5:
                traces[idx] = -traces[idx]
            continue
        Q, R = np.linalg.qr(rng.standard_normal((len(idx), len(idx))))
        Q = Q * np.sign(np.diag(R))[None, :]
        traces[idx] = Q.T @ traces[idx]
    return SpectralData(data.lambdas.copy(), traces, data.boundary_order)
