"""Maximal elements of a downward-closed family inside an integer box.

The family is given by a membership oracle. Small boxes are scanned exhaustively;
larger ones use dualize-and-advance: keep the found maximal elements and the frontier
of minimal box points not below any of them, test an unresolved frontier point, and
if it is a member climb greedily to a maximal element and split the frontier.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Sequence

import numpy as np

from .errors import SearchBudgetExceeded

EXHAUSTIVE_LIMIT = 1_000
DEFAULT_BUDGET = 2_000_000


class _CountingOracle:
    def __init__(self, member, budget):
        self.member = member
        self.budget = budget
        self.cache = {}

    def __call__(self, s) -> bool:
        key = tuple(int(v) for v in s)
        hit = self.cache.get(key)
        if hit is None:
            if self.budget is not None and len(self.cache) >= self.budget:
                raise SearchBudgetExceeded(f"membership oracle budget of {self.budget} calls exhausted")
            hit = bool(self.member(key))
            self.cache[key] = hit
        return hit


def box_size(lower: Sequence[int], upper: Sequence[int]) -> int:
    return math.prod(max(0, u - l + 1) for l, u in zip(lower, upper))


def maximal_elements(member: Callable[[tuple], bool], lower: Sequence[int], upper: Sequence[int], *,
                     budget: int | None = DEFAULT_BUDGET,
                     exhaustive_limit: int = EXHAUSTIVE_LIMIT) -> list:
    """Sorted list of the maximal members of a downward-closed family in [lower, upper]."""
    lower = tuple(int(v) for v in lower)
    upper = tuple(int(v) for v in upper)
    if len(lower) != len(upper):
        raise ValueError("lower and upper bounds differ in length")
    if any(l > u for l, u in zip(lower, upper)):
        return []
    oracle = _CountingOracle(member, budget)
    if box_size(lower, upper) <= exhaustive_limit:
        return _exhaustive(oracle, lower, upper)
    return _dualize_and_advance(oracle, lower, upper)


def _exhaustive(oracle, lower, upper):
    found = []
    ranges = [range(l, u + 1) for l, u in zip(lower, upper)]
    for s in itertools.product(*ranges):
        if not oracle(s):
            continue
        maximal = True
        for k in range(len(s)):
            if s[k] < upper[k]:
                t = s[:k] + (s[k] + 1,) + s[k + 1:]
                if oracle(t):
                    maximal = False
                    break
        if maximal:
            found.append(s)
    return sorted(found)


def _climb(oracle, start, upper):
    s = list(start)
    for k in range(len(s)):
        lo, hi = s[k], upper[k]
        while lo < hi:
            mid = (lo + hi + 1) // 2
            s[k] = mid
            if oracle(s):
                lo = mid
            else:
                hi = mid - 1
        s[k] = lo
    return tuple(s)


def _dualize_and_advance(oracle, lower, upper):
    # Only unresolved frontier points are stored, as a stack in a growable array. A
    # resolved point is a non-member, so it never lies below a found maximal element; any
    # copy lying above it is a non-member as well and is discarded by a cached oracle call.
    m = len(lower)
    buf = np.empty((1024, m), dtype=np.int16)
    buf[0] = lower
    n = 1
    found = []
    while n:
        n -= 1
        d = tuple(int(v) for v in buf[n])
        if not oracle(d):
            continue
        s = _climb(oracle, d, upper)
        found.append(s)
        sv = np.array(s, dtype=np.int16)
        live = buf[:n]
        below = np.all(live <= sv, axis=1)
        removed = np.vstack([live[below], np.array([d], dtype=np.int16)])
        kept = live[~below]
        fresh = []
        for k in range(m):
            if s[k] >= upper[k]:
                continue
            step = s[k] + 1
            # a kept point can lie below a copy only if its k-th coordinate equals step,
            # and copies made for different coordinates never compare
            rivals = kept[kept[:, k] == step]
            copies = removed.copy()
            copies[:, k] = step
            if rivals.shape[0]:
                copies = copies[~np.any(np.all(rivals[None, :, :] <= copies[:, None, :], axis=2), axis=1)]
            if copies.shape[0] > 1:
                copies = _minimal_rows(copies)
            if copies.shape[0]:
                fresh.append(copies)
        n = kept.shape[0]
        total = n + sum(c.shape[0] for c in fresh)
        if total > buf.shape[0]:
            grown = np.empty((2 * total, m), dtype=np.int16)
            grown[:n] = kept
            buf = grown
        else:
            buf[:n] = kept
        for c in fresh:
            buf[n:n + c.shape[0]] = c
            n += c.shape[0]
    return sorted(found)


def _minimal_rows(points):
    """Distinct rows of `points` not lying strictly above another row."""
    points = np.unique(points, axis=0)
    le = np.all(points[None, :, :] <= points[:, None, :], axis=2)
    return points[le.sum(axis=1) == 1]
