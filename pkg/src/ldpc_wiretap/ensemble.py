"""Degree distributions, configuration-model Tanner graphs, girth.

A Tanner graph with ``|E|`` edges carries ``|E|`` sockets on each side. Variable
sockets are numbered consecutively node by node, and likewise check sockets, so
a graph is fully described by the two degree sequences plus a permutation
``perm`` mapping variable socket ``s`` to check socket ``perm[s]``. The edge id
of an edge is its variable socket.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from typing import Mapping

import numba
import numpy as np

from .errors import TriesExhausted

INF = math.inf

_TERM = re.compile(
    r"^(?P<coef>\d+(?:\.\d*)?(?:/\d+)?|\.\d+)?\s*\*?\s*(?P<x>x(?:\s*(?:\^|\*\*)\s*(?P<exp>\d+))?)?$"
)


def parse_polynomial(text: str) -> dict[int, Fraction]:
    """Parse an edge-perspective polynomial like ``"1/2x + 1/2x^2"``.

    Returns ``{node degree: weight}``; the term ``c*x^k`` belongs to degree
    ``k + 1``.
    """
    out: dict[int, Fraction] = {}
    compact = text.replace(" ", "")
    if not compact:
        raise ValueError("empty polynomial")
    for raw in compact.split("+"):
        m = _TERM.match(raw)
        if not raw or m is None or (m.group("coef") is None and m.group("x") is None):
            raise ValueError(f"cannot parse term {raw!r} in {text!r}")
        coef = Fraction(m.group("coef")) if m.group("coef") else Fraction(1)
        if m.group("x") is None:
            exp = 0
        else:
            exp = int(m.group("exp")) if m.group("exp") else 1
        out[exp + 1] = out.get(exp + 1, Fraction(0)) + coef
    return out


def _normalize(coeffs, name: str) -> tuple[tuple[int, Fraction], ...]:
    items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
    merged: dict[int, Fraction] = {}
    for deg, w in items:
        deg = int(deg)
        w = Fraction(w)
        if deg < 1:
            raise ValueError(f"{name}: degree {deg} < 1")
        if w < 0:
            raise ValueError(f"{name}: negative weight for degree {deg}")
        merged[deg] = merged.get(deg, Fraction(0)) + w
    merged = {d: w for d, w in merged.items() if w != 0}
    if sum(merged.values(), Fraction(0)) != 1:
        raise ValueError(f"{name}: weights sum to {sum(merged.values())}, not 1")
    return tuple(sorted(merged.items()))


@dataclass(frozen=True)
class DegreeDistribution:
    """Edge-perspective pair (lambda, rho), keyed by node degree."""

    lambda_coeffs: tuple[tuple[int, Fraction], ...]
    rho_coeffs: tuple[tuple[int, Fraction], ...]

    def __post_init__(self):
        object.__setattr__(self, "lambda_coeffs", _normalize(self.lambda_coeffs, "lambda"))
        object.__setattr__(self, "rho_coeffs", _normalize(self.rho_coeffs, "rho"))

    @classmethod
    def regular(cls, l: int, r: int) -> "DegreeDistribution":
        return cls({l: 1}, {r: 1})

    @classmethod
    def from_polynomials(cls, lam: str, rho: str) -> "DegreeDistribution":
        return cls(parse_polynomial(lam), parse_polynomial(rho))

    @classmethod
    def from_json(cls, obj: Mapping) -> "DegreeDistribution":
        return cls(
            {int(k): Fraction(str(v)) for k, v in obj["lambda"].items()},
            {int(k): Fraction(str(v)) for k, v in obj["rho"].items()},
        )

    def to_json(self) -> dict:
        return {
            "lambda": {str(d): str(w) for d, w in self.lambda_coeffs},
            "rho": {str(d): str(w) for d, w in self.rho_coeffs},
        }

    @property
    def lam(self) -> dict[int, Fraction]:
        return dict(self.lambda_coeffs)

    @property
    def rho(self) -> dict[int, Fraction]:
        return dict(self.rho_coeffs)

    @property
    def edges_per_var(self) -> Fraction:
        """r_1 = |E|/n."""
        return 1 / sum((w / d for d, w in self.lambda_coeffs), Fraction(0))

    @property
    def checks_per_var(self) -> Fraction:
        """r_0 = m/n."""
        return self.edges_per_var * sum((w / d for d, w in self.rho_coeffs), Fraction(0))

    @property
    def design_rate(self) -> Fraction:
        return 1 - self.checks_per_var

    @property
    def l_min(self) -> int:
        return self.lambda_coeffs[0][0]

    @property
    def l_max(self) -> int:
        return self.lambda_coeffs[-1][0]

    @property
    def r_max(self) -> int:
        return self.rho_coeffs[-1][0]

    @property
    def is_regular(self) -> bool:
        return len(self.lambda_coeffs) == 1 and len(self.rho_coeffs) == 1

    def lambda_poly(self, x):
        x = np.asarray(x, dtype=float)
        return sum(float(w) * x ** (d - 1) for d, w in self.lambda_coeffs)

    def rho_poly(self, x):
        x = np.asarray(x, dtype=float)
        return sum(float(w) * x ** (d - 1) for d, w in self.rho_coeffs)

    def describe(self) -> str:
        def poly(coeffs):
            return " + ".join(f"{w}x^{d - 1}" for d, w in coeffs)

        return f"lambda(x) = {poly(self.lambda_coeffs)}; rho(x) = {poly(self.rho_coeffs)}"


def node_fractions(dist: DegreeDistribution) -> tuple[dict[int, Fraction], dict[int, Fraction]]:
    """Node-perspective fractions: lambda~_i = (lambda_i/i) / sum_j lambda_j/j."""

    def conv(coeffs):
        total = sum((w / d for d, w in coeffs), Fraction(0))
        return {d: (w / d) / total for d, w in coeffs}

    return conv(dist.lambda_coeffs), conv(dist.rho_coeffs)


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def valid_sizes(dist: DegreeDistribution) -> int:
    """Smallest ``a`` such that every multiple of ``a`` gives integer node counts."""
    var_frac, _ = node_fractions(dist)
    r1 = dist.edges_per_var
    per_var = list(var_frac.values()) + [r1 * w / d for d, w in dist.rho_coeffs]
    return reduce(_lcm, (f.denominator for f in per_var), 1)


@dataclass(frozen=True)
class EnsembleSpec:
    n: int
    dist: DegreeDistribution
    min_girth: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"block length must be positive, got {self.n}")
        a = valid_sizes(self.dist)
        if self.n % a:
            raise ValueError(f"n={self.n} is not a multiple of the valid size {a}")
        if self.min_girth < 0 or self.min_girth % 2:
            raise ValueError(f"min_girth must be a nonnegative even integer, got {self.min_girth}")

    @property
    def k(self) -> int:
        """Half the girth bound; stopping sets have at least this many variables."""
        return max(self.min_girth // 2, 1)

    @cached_property
    def var_counts(self) -> dict[int, int]:
        var_frac, _ = node_fractions(self.dist)
        return {d: int(self.n * f) for d, f in var_frac.items()}

    @cached_property
    def num_edges(self) -> int:
        return sum(d * c for d, c in self.var_counts.items())

    @cached_property
    def check_counts(self) -> dict[int, int]:
        counts = {d: self.num_edges * w / d for d, w in self.dist.rho_coeffs}
        assert all(c.denominator == 1 for c in counts.values())
        return {d: int(c) for d, c in counts.items()}

    @property
    def num_checks(self) -> int:
        return sum(self.check_counts.values())

    def degree_sequences(self) -> tuple[np.ndarray, np.ndarray]:
        var = np.repeat(list(self.var_counts), list(self.var_counts.values()))
        chk = np.repeat(list(self.check_counts), list(self.check_counts.values()))
        return var.astype(np.int64), chk.astype(np.int64)


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TannerGraph:
    """Bipartite multigraph given by a perfect matching of sockets."""

    var_degrees: np.ndarray
    check_degrees: np.ndarray
    perm: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        for name in ("var_degrees", "check_degrees", "perm"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        E = int(self.var_degrees.sum())
        if E != int(self.check_degrees.sum()):
            raise ValueError("variable and check socket counts differ")
        if self.perm.shape != (E,) or not np.array_equal(np.sort(self.perm), np.arange(E)):
            raise ValueError("perm is not a permutation of the check sockets")

    def __eq__(self, other):
        if not isinstance(other, TannerGraph):
            return NotImplemented
        return (
            np.array_equal(self.var_degrees, other.var_degrees)
            and np.array_equal(self.check_degrees, other.check_degrees)
            and np.array_equal(self.perm, other.perm)
        )

    __hash__ = None

    @property
    def n(self) -> int:
        return len(self.var_degrees)

    @property
    def m(self) -> int:
        return len(self.check_degrees)

    @property
    def num_edges(self) -> int:
        return len(self.perm)

    @cached_property
    def var_start(self) -> np.ndarray:
        return _readonly(np.concatenate([[0], np.cumsum(self.var_degrees)]))

    @cached_property
    def check_start(self) -> np.ndarray:
        return _readonly(np.concatenate([[0], np.cumsum(self.check_degrees)]))

    @cached_property
    def socket_var(self) -> np.ndarray:
        """Variable node owning each variable socket (= each edge)."""
        return _readonly(np.repeat(np.arange(self.n), self.var_degrees))

    @cached_property
    def csocket_check(self) -> np.ndarray:
        return _readonly(np.repeat(np.arange(self.m), self.check_degrees))

    @cached_property
    def inv(self) -> np.ndarray:
        inv = np.empty_like(self.perm)
        inv[self.perm] = np.arange(self.num_edges)
        return _readonly(inv)

    @cached_property
    def edge_check(self) -> np.ndarray:
        return _readonly(self.csocket_check[self.perm])

    @cached_property
    def var_checks(self) -> list[list[int]]:
        """Checks adjacent to each variable, repeated per parallel edge."""
        ec = self.edge_check.tolist()
        vs = self.var_start.tolist()
        return [ec[vs[v]:vs[v + 1]] for v in range(self.n)]

    @cached_property
    def check_vars(self) -> list[list[int]]:
        sv = self.socket_var.tolist()
        inv = self.inv.tolist()
        cs = self.check_start.tolist()
        return [[sv[inv[j]] for j in range(cs[c], cs[c + 1])] for c in range(self.m)]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(int(s), int(c)) for s, c in enumerate(self.perm)]

    @cached_property
    def count_matrix(self) -> np.ndarray:
        """m x n matrix of edge multiplicities."""
        H = np.zeros((self.m, self.n), dtype=np.int64)
        np.add.at(H, (self.edge_check, self.socket_var), 1)
        H.setflags(write=False)
        return H

    def parity_check(self):
        """GF(2) parity-check matrix; a double edge cancels."""
        from .gf2 import BitMatrix

        return BitMatrix.from_array(self.count_matrix % 2)

    def kernel_args(self):
        return (
            self.n,
            np.asarray(self.var_start),
            np.asarray(self.check_start),
            np.asarray(self.perm),
            np.asarray(self.inv),
            np.asarray(self.socket_var),
            np.asarray(self.csocket_check),
        )

    def to_json(self) -> dict:
        g = girth(self)
        return {
            "n": self.n,
            "var_degrees": self.var_degrees.tolist(),
            "check_degrees": self.check_degrees.tolist(),
            "edges": [[s, c] for s, c in self.edges],
            "seed": self.seed,
            "girth": None if g == INF else int(g),
        }

    @classmethod
    def from_count_matrix(cls, H) -> "TannerGraph":
        """Graph whose (c, v) entry of ``H`` is the number of edges between c and v."""
        H = np.asarray(H, dtype=np.int64)
        if H.ndim != 2 or (H < 0).any():
            raise ValueError("expected a nonnegative 2-d count matrix")
        var_deg = H.sum(axis=0)
        chk_deg = H.sum(axis=1)
        cstart = np.concatenate([[0], np.cumsum(chk_deg)])
        nxt = cstart[:-1].copy()
        perm = []
        for v in range(H.shape[1]):
            for c in range(H.shape[0]):
                for _ in range(H[c, v]):
                    perm.append(nxt[c])
                    nxt[c] += 1
        return cls(var_deg, chk_deg, np.array(perm, dtype=np.int64))

    @classmethod
    def from_json(cls, obj: Mapping) -> "TannerGraph":
        var_degrees = obj["var_degrees"]
        E = int(sum(var_degrees))
        perm = np.full(E, -1, dtype=np.int64)
        for s, c in obj["edges"]:
            if not 0 <= s < E or perm[s] != -1:
                raise ValueError(f"variable socket {s} missing or used twice")
            perm[s] = c
        if len(var_degrees) != obj.get("n", len(var_degrees)):
            raise ValueError("n does not match var_degrees")
        return cls(var_degrees, obj["check_degrees"], perm, obj.get("seed"))


def sample_graph(spec: EnsembleSpec, seed) -> TannerGraph:
    """Uniform draw from the |E|! socket permutations."""
    var, chk = spec.degree_sequences()
    rng = np.random.default_rng(seed)
    perm = rng.permutation(spec.num_edges)
    return TannerGraph(var, chk, perm, seed if isinstance(seed, int) else None)


@numba.njit(cache=True)
def _girth_kernel(n, var_start, check_start, perm, inv, socket_var, csocket_check, cap):
    m = len(check_start) - 1
    N = n + m
    dist = np.full(N, -1, np.int64)
    pedge = np.full(N, -1, np.int64)
    queue = np.empty(N, np.int64)
    best = cap
    for root in range(n):
        head = 0
        tail = 1
        queue[0] = root
        dist[root] = 0
        while head < tail:
            u = queue[head]
            head += 1
            du = dist[u]
            # every candidate seen from u has length >= 2*du
            if 2 * du >= best:
                break
            if u < n:
                lo = var_start[u]
                hi = var_start[u + 1]
            else:
                lo = check_start[u - n]
                hi = check_start[u - n + 1]
            for j in range(lo, hi):
                if u < n:
                    e = j
                    w = n + csocket_check[perm[j]]
                else:
                    e = inv[j]
                    w = socket_var[e]
                if e == pedge[u]:
                    continue
                if dist[w] == -1:
                    dist[w] = du + 1
                    pedge[w] = e
                    queue[tail] = w
                    tail += 1
                else:
                    cand = du + dist[w] + 1
                    if cand < best:
                        best = cand
        for i in range(tail):
            dist[queue[i]] = -1
            pedge[queue[i]] = -1
        if best == 2:
            break
    return best


def girth(graph: TannerGraph, cap: int | None = None) -> float:
    """Shortest cycle length; a double edge is a 2-cycle.

    With ``cap`` set, cycles of length ``>= cap`` are not searched for and
    ``inf`` is returned when none shorter exists.
    """
    limit = 2 * (graph.n + graph.m) + 2 if cap is None else int(cap)
    g = _girth_kernel(*graph.kernel_args(), limit)
    return INF if g >= limit else int(g)


def has_girth_at_least(graph: TannerGraph, g: int) -> bool:
    return g <= 2 or girth(graph, cap=g) >= g


def sample_girth_restricted(spec: EnsembleSpec, seed, max_tries: int = 10_000) -> tuple[TannerGraph, int]:
    """Rejection sampler for the sub-ensemble of girth >= ``spec.min_girth``.

    The accepted graph is uniform on that sub-ensemble. Returns the graph and
    the number of draws used.
    """
    var, chk = spec.degree_sequences()
    rng = np.random.default_rng(seed)
    E = spec.num_edges
    tag = seed if isinstance(seed, int) else None
    for tries in range(1, max_tries + 1):
        graph = TannerGraph(var, chk, rng.permutation(E), tag)
        if has_girth_at_least(graph, spec.min_girth):
            return graph, tries
    raise TriesExhausted(max_tries, spec.min_girth, spec.n)


def regular_girth_fraction(d: int, g: int) -> float:
    """Asymptotic fraction of d-regular bipartite graphs with girth > g."""
    if d < 3:
        raise ValueError(f"degree must be >= 3, got {d}")
    if g < 2 or g % 2:
        raise ValueError(f"g must be a positive even integer, got {g}")
    return math.exp(-sum((d - 1) ** (2 * s) / (2 * s) for s in range(1, g // 2 + 1)))


def biregular_girth_fraction(l: int, r: int, g: int) -> float:
    """Asymptotic fraction of (l, r)-biregular configuration graphs with girth > g."""
    if g < 2 or g % 2:
        raise ValueError(f"g must be a positive even integer, got {g}")
    q = (l - 1) * (r - 1)
    return math.exp(-sum(q**s / (2 * s) for s in range(1, g // 2 + 1)))


def _grouping(degrees: np.ndarray, d: int, side: str):
    """Group nodes of degree i into runs of d/i; returns old->new socket map."""
    starts = np.concatenate([[0], np.cumsum(degrees)])
    groups = []
    for deg in sorted(set(degrees.tolist())):
        if d % deg:
            raise ValueError(f"{side} degree {deg} does not divide {d}")
        nodes = np.flatnonzero(degrees == deg)
        size = d // deg
        if len(nodes) % size:
            raise ValueError(f"{len(nodes)} {side} nodes of degree {deg} not divisible into groups of {size}")
        groups.extend(nodes.reshape(-1, size).tolist())
    groups.sort(key=lambda grp: grp[0])
    old_sockets = np.concatenate(
        [np.arange(starts[v], starts[v + 1]) for grp in groups for v in grp]
    ).astype(np.int64)
    mapping = np.empty_like(old_sockets)
    mapping[old_sockets] = np.arange(len(old_sockets))
    return mapping, len(groups)


def group_to_regular(graph: TannerGraph, d: int | None = None) -> TannerGraph:
    """Merge nodes into degree-``d`` super-nodes, keeping every edge.

    ``d`` defaults to the lcm of all node degrees. The result is (d, d)-regular
    and its girth is at most the input girth.
    """
    if d is None:
        d = reduce(_lcm, set(graph.var_degrees.tolist()) | set(graph.check_degrees.tolist()), 1)
    vmap, nv = _grouping(graph.var_degrees, d, "variable")
    cmap, nc = _grouping(graph.check_degrees, d, "check")
    perm = np.empty(graph.num_edges, dtype=np.int64)
    perm[vmap] = cmap[graph.perm]
    return TannerGraph(np.full(nv, d), np.full(nc, d), perm, graph.seed)


# ---------------------------------------------------------------------------
# edge-switch chain on the girth-restricted sub-ensemble


@numba.njit(cache=True)
def _short_through(e, g, n, var_start, check_start, perm, inv, socket_var, csocket_check, dist, queue):
    """True if edge ``e`` lies on a cycle of length < g."""
    maxd = g - 3
    if maxd < 1:
        return False
    src = socket_var[e]
    target = n + csocket_check[perm[e]]
    head = 0
    tail = 1
    queue[0] = src
    dist[src] = 0
    found = False
    while head < tail and not found:
        u = queue[head]
        head += 1
        du = dist[u]
        if du >= maxd:
            break
        if u < n:
            lo = var_start[u]
            hi = var_start[u + 1]
        else:
            lo = check_start[u - n]
            hi = check_start[u - n + 1]
        for j in range(lo, hi):
            if u < n:
                ed = j
                w = n + csocket_check[perm[j]]
            else:
                ed = inv[j]
                w = socket_var[ed]
            if ed == e:
                continue
            if w == target:
                found = True
                break
            if dist[w] == -1:
                dist[w] = du + 1
                queue[tail] = w
                tail += 1
    for i in range(tail):
        dist[queue[i]] = -1
    return found


@numba.njit(cache=True)
def _swap(a, b, perm, inv):
    ca = perm[a]
    cb = perm[b]
    perm[a] = cb
    perm[b] = ca
    inv[cb] = a
    inv[ca] = b


@numba.njit(cache=True)
def _bad_edges(g, n, var_start, check_start, perm, inv, socket_var, csocket_check):
    N = n + len(check_start) - 1
    dist = np.full(N, -1, np.int64)
    queue = np.empty(N, np.int64)
    E = len(perm)
    out = np.empty(E, np.int64)
    k = 0
    for e in range(E):
        if _short_through(e, g, n, var_start, check_start, perm, inv, socket_var, csocket_check, dist, queue):
            out[k] = e
            k += 1
    return out[:k]


@numba.njit(cache=True)
def _repair(bad, partners, g, n, var_start, check_start, perm, inv, socket_var, csocket_check):
    N = n + len(check_start) - 1
    dist = np.full(N, -1, np.int64)
    queue = np.empty(N, np.int64)
    fixed = 0
    for i in range(len(bad)):
        e = bad[i]
        if not _short_through(e, g, n, var_start, check_start, perm, inv, socket_var, csocket_check, dist, queue):
            continue
        for t in range(partners.shape[1]):
            b = partners[i, t]
            if b == e:
                continue
            _swap(e, b, perm, inv)
            if not _short_through(e, g, n, var_start, check_start, perm, inv, socket_var, csocket_check, dist, queue) and not _short_through(b, g, n, var_start, check_start, perm, inv, socket_var, csocket_check, dist, queue):
                fixed += 1
                break
            _swap(e, b, perm, inv)
    return fixed


@numba.njit(cache=True)
def _switch_steps(pairs, g, n, var_start, check_start, perm, inv, socket_var, csocket_check):
    N = n + len(check_start) - 1
    dist = np.full(N, -1, np.int64)
    queue = np.empty(N, np.int64)
    accepted = 0
    for k in range(pairs.shape[0]):
        a = pairs[k, 0]
        b = pairs[k, 1]
        if a == b:
            continue
        _swap(a, b, perm, inv)
        if _short_through(a, g, n, var_start, check_start, perm, inv, socket_var, csocket_check, dist, queue) or _short_through(b, g, n, var_start, check_start, perm, inv, socket_var, csocket_check, dist, queue):
            _swap(a, b, perm, inv)
        else:
            accepted += 1
    return accepted


class GirthSwitchChain:
    """Markov chain on socket permutations with girth >= ``spec.min_girth``.

    Each step swaps the check sockets of two uniformly chosen edges and keeps
    the swap only if no cycle shorter than the bound appears. Proposals are
    symmetric, so the stationary law is uniform over the reachable part of the
    girth-restricted ensemble. The starting state is a configuration-model draw
    whose short cycles are removed by cycle-destroying swaps.
    """

    def __init__(self, spec: EnsembleSpec, seed, burn_in_sweeps: int = 20,
                 thin_sweeps: int = 1, max_repair_rounds: int = 200, repair_partners: int = 64):
        self.spec = spec
        self.rng = np.random.default_rng(seed)
        self.thin_sweeps = thin_sweeps
        var, chk = spec.degree_sequences()
        self._var, self._chk = var, chk
        base = TannerGraph(var, chk, self.rng.permutation(spec.num_edges))
        args = base.kernel_args()
        self._static = (args[0], args[1], args[2])
        self._tail = (args[5], args[6])
        self.perm = np.array(base.perm)
        self.inv = np.array(base.inv)
        self.accepted = 0
        self.proposed = 0
        self._repair(max_repair_rounds, repair_partners)
        self.advance(burn_in_sweeps)

    def _args(self):
        n, vs, cs = self._static
        return (n, vs, cs, self.perm, self.inv, *self._tail)

    def _repair(self, rounds: int, partners: int) -> None:
        g = self.spec.min_girth
        E = self.spec.num_edges
        for _ in range(rounds):
            bad = _bad_edges(g, *self._args())
            if len(bad) == 0:
                return
            cand = self.rng.integers(0, E, size=(len(bad), partners))
            _repair(bad, cand, g, *self._args())
        if len(_bad_edges(g, *self._args())):
            raise TriesExhausted(rounds, g, self.spec.n)

    def advance(self, sweeps: float) -> None:
        E = self.spec.num_edges
        steps = int(round(sweeps * E))
        if steps <= 0:
            return
        pairs = self.rng.integers(0, E, size=(steps, 2))
        self.accepted += _switch_steps(pairs, self.spec.min_girth, *self._args())
        self.proposed += steps

    def current(self) -> TannerGraph:
        return TannerGraph(self._var, self._chk, self.perm.copy())

    def sample(self) -> TannerGraph:
        self.advance(self.thin_sweeps)
        return self.current()
