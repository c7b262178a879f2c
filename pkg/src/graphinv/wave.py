"""Discrete wave equation: time stepping, evaluation from spectral data, arrival times."""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import DimensionMismatch, IncompatibleInitialValue
from .graph import WeightedBoundaryGraph
from .spectral import SpectralData, _as_array, _matrices, neumann_value

ZERO_TOL = 1e-7
NEUMANN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class WaveField:
    """values[i, t] = u(vertex_order[i], t) for t = 0..T."""

    values: np.ndarray
    T: int
    vertex_order: tuple

    def at(self, vertex: str) -> np.ndarray:
        return self.values[self.vertex_order.index(vertex)]

    def boundary_trace(self, boundary_order) -> np.ndarray:
        pos = {v: i for i, v in enumerate(self.vertex_order)}
        return self.values[[pos[z] for z in boundary_order]]


def _to_mp(arr):
    return np.array([mpmath.mpf(v) for v in np.ravel(arr)], dtype=object).reshape(np.shape(arr))


def step_wave(graph: WeightedBoundaryGraph, W, T: int, *, precision: int | None = None,
              tol: float = NEUMANN_TOL) -> WaveField:
    """Leapfrog evolution u(t+1) = 2u(t) − u(t−1) + Δu(t) − q u(t) with u(0) = u(1) = W.

    `W` is either interior values (extended to the boundary here) or values on all
    vertices, whose Neumann value must vanish. With `precision` the arithmetic runs
    in mpmath at that many digits.
    """
    if T < 1:
        raise ValueError("horizon T must be at least 1")
    n = graph.n_interior
    total = len(graph.vertex_order)
    mats = _matrices(graph)
    W = _as_array(graph, W, full=True)
    if W.shape[0] == total:
        flux = neumann_value(graph, W.astype(float))
        if np.max(np.abs(flux), initial=0.0) > tol * max(1.0, float(np.max(np.abs(W.astype(float))))):
            raise IncompatibleInitialValue("initial value has nonzero Neumann boundary value")
    u0 = W[:n]
    L, E, q = mats.laplacian, mats.extension, mats.q
    if precision is not None:
        with mpmath.workdps(precision):
            L, E = _mp_operators(mats)
            q, u0 = _to_mp(q), _to_mp(u0)
            return _leapfrog(graph, L, E, q, u0, T, object)
    return _leapfrog(graph, L, E, q, u0.astype(float), T, float)


def _mp_operators(mats):
    """Laplacian and boundary extension rebuilt from the raw weights at the working precision,
    so no float64 rounding of row sums enters the extended-precision run."""
    n, m = mats.n, mats.m
    Wg = _to_mp(mats.weights)
    mu = _to_mp(mats.mu_int)
    L = np.empty((n, n + m), dtype=object)
    for i in range(n):
        total = mpmath.fsum(Wg[i])
        for j in range(n + m):
            L[i, j] = Wg[i, j] / mu[i]
        L[i, i] = (Wg[i, i] - total) / mu[i]
    E = np.empty((m, n), dtype=object)
    for k in range(m):
        S = mpmath.fsum(Wg[:, n + k])
        for i in range(n):
            E[k, i] = Wg[i, n + k] / S
    return L, E


def _leapfrog(graph, L, E, q, u0, T, dtype):
    n = u0.shape[0]
    values = np.empty((len(graph.vertex_order), T + 1), dtype=dtype)
    full = np.concatenate([u0, E.dot(u0)])
    values[:, 0] = full
    values[:, 1] = full
    prev, cur = full, full
    for t in range(1, T):
        inner = 2 * cur[:n] - prev[:n] + L.dot(cur) - q * cur[:n]
        nxt = np.concatenate([inner, E.dot(inner)])
        values[:, t + 1] = nxt
        prev, cur = cur, nxt
    return WaveField(values, T, graph.vertex_order)


def mode_amplitude(lam, T: int) -> np.ndarray:
    """β(0) = β(1) = 1, β(t+1) = (2 − λ)β(t) − β(t−1), for t = 0..T."""
    if T < 1:
        raise ValueError("horizon T must be at least 1")
    one = lam * 0 + 1
    beta = [one, one]
    for _ in range(1, T):
        beta.append((2 - lam) * beta[-1] - beta[-2])
    dtype = object if isinstance(lam, mpmath.mpf) else float
    return np.array(beta, dtype=dtype)


def _amplitude_matrix(lambdas, T):
    return np.vstack([mode_amplitude(lam, T) for lam in lambdas])


def boundary_wave_from_data(data: SpectralData, c, T: int) -> np.ndarray:
    """u(z, t) = Σ_j c_j β_{λ_j}(t) φ_j(z) from spectral data alone; shape (|∂G|, T+1)."""
    c = np.asarray(c)
    if c.shape != (data.n,):
        raise DimensionMismatch(f"coefficient vector has shape {c.shape}, expected ({data.n},)")
    if data.precision is not None:
        with mpmath.workdps(data.precision):
            c = _to_mp(c) if c.dtype != object else c
            B = _amplitude_matrix(data.lambdas, T)
            return data.traces.T.dot(c[:, None] * B)
    B = _amplitude_matrix(data.lambdas.astype(float), T)
    return data.traces.T @ (c.astype(float)[:, None] * B)


@dataclass(frozen=True)
class ArrivalReport:
    """times[k] is the first t ≥ 1 with a nonzero value at boundary vertex k, or None."""

    times: tuple
    values: tuple
    horizon: int

    @property
    def silent(self) -> tuple:
        return tuple(k for k, t in enumerate(self.times) if t is None)


def arrival_times(trace, tol: float = ZERO_TOL, scale: float = 1.0) -> ArrivalReport:
    """First t ≥ 1 with |u(z, t)| > tol·scale for every boundary row of `trace`."""
    trace = np.asarray(trace)
    times, values = [], []
    for row in trace:
        hit = None
        for t in range(1, row.shape[0]):
            if abs(row[t]) > tol * scale:
                hit = t
                break
        times.append(hit)
        values.append(None if hit is None else float(row[hit]))
    return ArrivalReport(tuple(times), tuple(values), trace.shape[1] - 1)


def constraint_row(data: SpectralData, z: int, t: int) -> np.ndarray:
    """Row r with r·c = u^{W_c}(z, t): r_j = β_{λ_j}(t) φ_j(z)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    B = _amplitude_matrix(data.lambdas, max(t, 1))
    return B[:, t] * data.traces[:, z]


class BoundaryObserver:
    """Orthonormal bases for the silence constraints at each boundary vertex.

    For a boundary vertex z let b = (φ_j(z))_j and Λ = diag(λ). The rows
    β_{λ}(t)·b for t = 0..s−1 span the Krylov space K_{s−1}(Λ, b) because β(t) is a
    polynomial of degree t−1 in λ with leading coefficient (−1)^{t−1} and β(0) = β(1).
    Arnoldi with full reorthogonalisation gives an orthonormal basis q_0, q_1, ...
    whose prefixes span the same spaces without the exponential growth of β.
    `saturation[z]` is the Krylov dimension; later rows add no new constraints.
    """

    def __init__(self, data: SpectralData, breakdown: float = 1e-10,
                 cluster_tol: float = 1e-8):
        lam = data.to_float().lambdas.astype(float).copy()
        traces = data.to_float().traces.astype(float)
        # equal eigenvalues up to clustering error generate the same Krylov directions
        for grp in data.clusters:
            idx = list(grp)
            lam[idx] = lam[idx].mean()
        self.lambdas = lam
        self.n = data.n
        self.m = traces.shape[1]
        spread = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
        self.bases = []
        self.norms = []
        self.saturation = []
        for k in range(self.m):
            Q, h = self._arnoldi(traces[:, k], lam, breakdown * spread)
            self.bases.append(Q)
            self.norms.append(h)
            self.saturation.append(Q.shape[0])

    def _arnoldi(self, b, lam, tol):
        nb = np.linalg.norm(b)
        if nb <= tol:
            return np.zeros((0, self.n)), []
        basis = [b / nb]
        norms = [nb]
        while len(basis) < self.n:
            v = lam * basis[-1]
            for _ in range(2):
                for qv in basis:
                    v = v - (qv @ v) * qv
            hv = np.linalg.norm(v)
            if hv <= tol:
                break
            basis.append(v / hv)
            norms.append(hv)
        return np.vstack(basis), norms

    def rows(self, z: int, count: int) -> np.ndarray:
        """Orthonormal rows spanning the constraints u(z, t) = 0 for t < count + 1."""
        return self.bases[z][: min(count, self.saturation[z])]

    def arrival(self, c, horizon: int, tol: float = ZERO_TOL) -> ArrivalReport:
        """Arrival times and signed first values of the wave with coefficients c.

        With c orthogonal to q_0..q_{k−1} the first nonzero value at z is at t = k+1 and
        equals (−1)^k ‖b‖ h_1⋯h_k ⟨q_k, c⟩. The zero test is |⟨q_k, c⟩| > tol·max(1, ‖c‖).
        """
        c = np.asarray(c, dtype=float)
        scale = max(1.0, float(np.linalg.norm(c)))
        times, values = [], []
        for z in range(self.m):
            proj = self.bases[z] @ c
            hit = None
            for k, p in enumerate(proj):
                if k + 1 > horizon:
                    break
                if abs(p) > tol * scale:
                    hit = k
                    break
            if hit is None:
                times.append(None)
                values.append(None)
            else:
                mag = float(np.prod(self.norms[z][: hit + 1]))
                times.append(hit + 1)
                values.append((-1) ** hit * mag * float(proj[hit]))
        return ArrivalReport(tuple(times), tuple(values), horizon)
