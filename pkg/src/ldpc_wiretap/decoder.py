"""Peeling decoder for the erasure channel and stopping-set combinatorics."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numba
import numpy as np

from .ensemble import TannerGraph
from .errors import BudgetExceeded


@dataclass(frozen=True)
class ErasurePattern:
    n: int
    erased: tuple[int, ...]

    def __post_init__(self):
        erased = tuple(sorted(int(i) for i in self.erased))
        if len(set(erased)) != len(erased):
            raise ValueError("duplicate erasure index")
        if erased and (erased[0] < 0 or erased[-1] >= self.n):
            raise ValueError(f"erasure index out of range for n={self.n}")
        object.__setattr__(self, "erased", erased)

    @classmethod
    def from_mask(cls, mask) -> "ErasurePattern":
        mask = np.asarray(mask, dtype=bool)
        return cls(len(mask), tuple(np.flatnonzero(mask).tolist()))

    def mask(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=bool)
        out[list(self.erased)] = True
        return out


@dataclass(frozen=True)
class DecodeResult:
    success: bool
    residual: tuple[int, ...]

    def to_json(self) -> dict:
        return {"success": self.success, "residual_size": len(self.residual), "residual": list(self.residual)}


def peel(graph: TannerGraph, pattern: ErasurePattern) -> DecodeResult:
    """Resolve erased variables through checks with one erased incidence.

    A double edge contributes two incidences, so it never makes a unit check.
    The fixpoint is independent of processing order.
    """
    if pattern.n != graph.n:
        raise ValueError(f"pattern length {pattern.n} != block length {graph.n}")
    var_checks = graph.var_checks
    check_vars = graph.check_vars
    erased = [False] * graph.n
    cnt = [0] * graph.m
    for v in pattern.erased:
        erased[v] = True
        for c in var_checks[v]:
            cnt[c] += 1
    work = deque(c for c in range(graph.m) if cnt[c] == 1)
    while work:
        c = work.popleft()
        if cnt[c] != 1:
            continue
        v = next(u for u in check_vars[c] if erased[u])
        erased[v] = False
        for c2 in var_checks[v]:
            cnt[c2] -= 1
            if cnt[c2] == 1:
                work.append(c2)
    residual = tuple(v for v in pattern.erased if erased[v])
    return DecodeResult(not residual, residual)


@numba.njit(cache=True)
def _peel_batch(erased, var_start, check_start, inv, socket_var, edge_check):
    B, n = erased.shape
    m = len(check_start) - 1
    cnt = np.zeros(m, np.int64)
    stack = np.empty(m + len(edge_check), np.int64)
    left = np.zeros(B, np.int64)
    for b in range(B):
        row = erased[b]
        cnt[:] = 0
        k = 0
        for v in range(n):
            if row[v]:
                k += 1
                for s in range(var_start[v], var_start[v + 1]):
                    cnt[edge_check[s]] += 1
        top = 0
        for c in range(m):
            if cnt[c] == 1:
                stack[top] = c
                top += 1
        while top > 0:
            top -= 1
            c = stack[top]
            if cnt[c] != 1:
                continue
            v = -1
            for j in range(check_start[c], check_start[c + 1]):
                u = socket_var[inv[j]]
                if row[u]:
                    v = u
                    break
            row[v] = False
            k -= 1
            for s in range(var_start[v], var_start[v + 1]):
                c2 = edge_check[s]
                cnt[c2] -= 1
                if cnt[c2] == 1:
                    stack[top] = c2
                    top += 1
        left[b] = k
    return left


def peel_batch(graph: TannerGraph, erased: np.ndarray, inplace: bool = False) -> np.ndarray:
    """Peel every row of a ``(B, n)`` boolean erasure array.

    Returns residual sizes; with ``inplace`` the array is overwritten with the
    residual masks.
    """
    erased = np.asarray(erased, dtype=np.bool_)
    if erased.ndim != 2 or erased.shape[1] != graph.n:
        raise ValueError(f"expected shape (B, {graph.n}), got {erased.shape}")
    work = erased if inplace else erased.copy()
    return _peel_batch(
        work,
        np.asarray(graph.var_start),
        np.asarray(graph.check_start),
        np.asarray(graph.inv),
        np.asarray(graph.socket_var),
        np.asarray(graph.edge_check),
    )


def is_stopping_set(graph: TannerGraph, U: Iterable[int]) -> bool:
    """Every check touched by U sees at least two incidences from U."""
    deg: dict[int, int] = {}
    var_checks = graph.var_checks
    for v in set(int(u) for u in U):
        for c in var_checks[v]:
            deg[c] = deg.get(c, 0) + 1
    return all(d >= 2 for d in deg.values())


@numba.njit(cache=True)
def _enum_kernel(n, m, var_start, edge_check, maxnb, lmax, max_size, budget, counts):
    deg = np.zeros(m, np.int64)
    chosen = np.empty(max_size + 1, np.int64)
    nxt = np.empty(max_size + 2, np.int64)
    ones = 0
    nodes = 0
    counts[0] = 1
    depth = 0
    nxt[0] = 0
    while depth >= 0:
        v = nxt[depth]
        if depth == max_size or v >= n:
            depth -= 1
            if depth >= 0:
                u = chosen[depth]
                for s in range(var_start[u], var_start[u + 1]):
                    c = edge_check[s]
                    deg[c] -= 1
                    if deg[c] == 1:
                        ones += 1
                    elif deg[c] == 0:
                        ones -= 1
                nxt[depth] = u + 1
            continue
        nodes += 1
        if nodes > budget:
            return -1
        chosen[depth] = v
        for s in range(var_start[v], var_start[v + 1]):
            c = edge_check[s]
            deg[c] += 1
            if deg[c] == 1:
                ones += 1
            elif deg[c] == 2:
                ones -= 1
        size = depth + 1
        if ones == 0:
            counts[size] += 1
        remaining = max_size - size
        descend = remaining > 0 and ones <= remaining * lmax
        if descend and ones > 0:
            # a check hit once whose neighbours all precede v can never be fixed
            for i in range(size):
                u = chosen[i]
                for s in range(var_start[u], var_start[u + 1]):
                    c = edge_check[s]
                    if deg[c] == 1 and maxnb[c] <= v:
                        descend = False
                        break
                if not descend:
                    break
        if descend:
            depth += 1
            nxt[depth] = v + 1
        else:
            for s in range(var_start[v], var_start[v + 1]):
                c = edge_check[s]
                deg[c] -= 1
                if deg[c] == 1:
                    ones += 1
                elif deg[c] == 0:
                    ones -= 1
            nxt[depth] = v + 1
    return nodes


def enumerate_stopping_sets(graph: TannerGraph, max_size: int, budget: int = 10_000_000) -> list[int]:
    """Exact number of stopping sets of each size 0..max_size.

    Lexicographic branch and bound; a branch is cut when some check is hit
    exactly once and no later variable can reach it. Raises BudgetExceeded
    after ``budget`` node expansions.
    """
    max_size = min(int(max_size), graph.n)
    if max_size < 0:
        raise ValueError("max_size must be nonnegative")
    maxnb = np.full(graph.m, -1, dtype=np.int64)
    np.maximum.at(maxnb, graph.edge_check, graph.socket_var)
    counts = np.zeros(max_size + 1, dtype=np.int64)
    lmax = int(graph.var_degrees.max()) if graph.n else 0
    nodes = _enum_kernel(
        graph.n, graph.m, np.asarray(graph.var_start), np.asarray(graph.edge_check),
        maxnb, lmax, max_size, budget, counts,
    )
    if nodes < 0:
        raise BudgetExceeded(f"stopping-set enumeration exceeded {budget} nodes")
    return counts.tolist()


def stopping_number(graph: TannerGraph, budget: int = 10_000_000) -> float:
    """Size of the smallest nonempty stopping set, ``inf`` if there is none."""
    for s in range(1, graph.n + 1):
        if enumerate_stopping_sets(graph, s, budget)[s] > 0:
            return s
    return math.inf


def sample_erasures(n: int, eps: float, seed) -> ErasurePattern:
    """Each position erased independently with probability ``eps``."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"erasure probability {eps} outside [0, 1]")
    rng = np.random.default_rng(seed)
    return ErasurePattern.from_mask(rng.random(n) < eps)
