"""Ensemble stopping-set combinatorics and erasure thresholds.

Exponents and entropies are in nats. The growth rate of the average stopping
set count is evaluated as

    gamma(alpha) = max_beta  sum_j lt_j h(beta_j / lt_j)
                             + inf_{x>0} [sum_d mt_d ln((1+x)^d - d x) - omega ln x]
                             - r1 h(omega / r1),

with ``beta_j`` the fraction of degree-j variables taken, ``omega = sum_j j
beta_j``, ``lt`` the variable node fractions, ``mt_d`` checks of degree d per
variable and ``r1`` edges per variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .ensemble import DegreeDistribution, EnsembleSpec, node_fractions
from .errors import BudgetExceeded

_GOLDEN = (math.sqrt(5) - 1) / 2


def binary_entropy_nats(x):
    """-x ln x - (1-x) ln(1-x), with h(0) = h(1) = 0."""
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ValueError("binary entropy argument outside [0, 1]")
    return _h(arr) if arr.ndim else float(_h(arr))


def _h(x):
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -x * np.log(x) - (1 - x) * np.log1p(-x)
    return np.where((x <= 0) | (x >= 1), 0.0, out)


# ---------------------------------------------------------------------------
# density evolution


def _de_gap(dist: DegreeDistribution, eps: float, x):
    return eps * dist.lambda_poly(1 - dist.rho_poly(1 - x)) - x


def de_threshold(dist: DegreeDistribution, tol: float = 1e-6) -> float:
    """Largest eps with eps * lambda(1 - rho(1 - x)) < x on (0, 1]."""
    grid = np.unique(np.concatenate([np.geomspace(1e-10, 1.0, 2048), np.linspace(0, 1, 4097)[1:]]))

    def worst(eps: float) -> float:
        vals = _de_gap(dist, eps, grid)
        k = int(np.argmax(vals))
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        if b > a:
            res = minimize_scalar(lambda x: -_de_gap(dist, eps, x), bounds=(a, b),
                                  method="bounded", options={"xatol": 1e-14})
            return max(float(vals[k]), -float(res.fun))
        return float(vals[k])

    lo, hi = 0.0, 1.0
    if worst(hi) < 0:
        return 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if worst(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# exact counting


def _polymul(a: list[int], b: list[int], W: int) -> list[int]:
    out = [0] * min(len(a) + len(b) - 1, W + 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in enumerate(b[: W + 1 - i]):
            if y:
                out[i + j] += x * y
    return out


def _polypow(p: list[int], e: int, W: int) -> list[int]:
    result = [1]
    base = p[: W + 1]
    while e:
        if e & 1:
            result = _polymul(result, base, W)
        e >>= 1
        if e:
            base = _polymul(base, base, W)
    return result


@lru_cache(maxsize=64)
def _check_poly(counts: tuple[tuple[int, int], ...], W: int) -> tuple[int, ...]:
    out = [1]
    for d, mult in counts:
        p = [math.comb(d, k) for k in range(d + 1)]
        if d >= 1:
            p[1] -= d
        out = _polymul(out, _polypow(p, mult, W), W)
    return tuple(out) + (0,) * (W + 1 - len(out))


def _as_counts(checks) -> tuple[tuple[int, int], ...]:
    if isinstance(checks, Mapping):
        items = checks.items()
    else:
        tally: dict[int, int] = {}
        for d in checks:
            tally[int(d)] = tally.get(int(d), 0) + 1
        items = tally.items()
    return tuple(sorted((int(d), int(c)) for d, c in items if c))


def check_gen_poly_coef(checks, w: int) -> int:
    """Coefficient of x^w in prod_d ((1+x)^d - d x)^{m_d}.

    ``checks`` is ``{degree: count}`` or a flat list of check degrees. The
    coefficient counts the ways to pick w check sockets with every check
    receiving zero or at least two of them.
    """
    counts = _as_counts(checks)
    if w < 0:
        raise ValueError("w must be nonnegative")
    if w > sum(d * c for d, c in counts):
        return 0
    return _check_poly(counts, w)[w]


def log_coef_upper_bound(m: int, w: int, r_max: int) -> float:
    """ln of C(m + floor(w/2) - ceil(w/r_max), floor(w/2)) (2 r_max - 3)^w."""
    if r_max <= 2:
        raise ValueError("bound needs r_max > 2")
    top = m + w // 2 - (-(-w // r_max))
    k = w // 2
    if top < k:
        return -math.inf
    log_binom = math.lgamma(top + 1) - math.lgamma(k + 1) - math.lgamma(top - k + 1)
    return log_binom + w * math.log(2 * r_max - 3)


def coef_upper_bound(m: int, w: int, r_max: int) -> float:
    lb = log_coef_upper_bound(m, w, r_max)
    if lb == -math.inf:
        return 0.0
    return math.exp(lb) if lb < 709 else math.inf


def _compositions(total: int, caps: Sequence[int]):
    if len(caps) == 1:
        if total <= caps[0]:
            yield (total,)
        return
    for first in range(min(total, caps[0]) + 1):
        for rest in _compositions(total - first, caps[1:]):
            yield (first,) + rest


def expected_stopping_sets_exact(spec: EnsembleSpec, s: int, max_terms: int = 2_000_000) -> Fraction:
    """Ensemble average number of size-s stopping sets, as an exact rational.

    Sums over how the s variables split across degrees; for each split the
    probability that the chosen w sockets form a stopping set is the check
    generating-function coefficient divided by C(|E|, w).
    """
    if s < 0 or s > spec.n:
        raise ValueError(f"s={s} outside [0, {spec.n}]")
    if s == 0:
        return Fraction(1)
    degs = list(spec.var_counts)
    caps = [spec.var_counts[d] for d in degs]
    if math.comb(s + len(degs) - 1, len(degs) - 1) > max_terms:
        raise BudgetExceeded(f"too many degree compositions for s={s}")
    E = spec.num_edges
    W = min(s * degs[-1], E)
    poly = _check_poly(_as_counts(spec.check_counts), W)
    by_weight: dict[int, int] = {}
    for comp in _compositions(s, caps):
        w = sum(d * i for d, i in zip(degs, comp))
        ways = math.prod(math.comb(c, i) for c, i in zip(caps, comp))
        by_weight[w] = by_weight.get(w, 0) + ways
    total = Fraction(0)
    for w, ways in by_weight.items():
        if w <= W and poly[w]:
            total += Fraction(ways * poly[w], math.comb(E, w))
    return total


@dataclass(frozen=True)
class StoppingExpectation:
    n: int
    values: dict[int, Fraction] = field(default_factory=dict)

    def as_floats(self) -> dict[int, float]:
        return {s: float(v) for s, v in self.values.items()}


def stopping_expectation(spec: EnsembleSpec, s_max: int) -> StoppingExpectation:
    return StoppingExpectation(spec.n, {s: expected_stopping_sets_exact(spec, s) for s in range(s_max + 1)})


# ---------------------------------------------------------------------------
# asymptotic growth rate


def _log_check_term(t: np.ndarray, d: int) -> np.ndarray:
    """ln((1+x)^d - d x) at x = e^t, accurate for small and large x."""
    x = np.exp(np.minimum(t, 0.0))
    tail = np.zeros_like(x)
    for k in range(d, 1, -1):  # Horner for sum_{k>=2} C(d,k) x^k
        tail = (tail + math.comb(d, k)) * x
    tail = tail * x
    small = np.log1p(tail)
    xb = np.exp(np.maximum(t, 0.0))
    big = d * np.log1p(xb) + np.log1p(-d * xb * np.exp(-d * np.log1p(xb)))
    return np.where(t <= 0, small, big)


def _phi(omega: np.ndarray, checks: tuple[tuple[int, float], ...], tol: float = 1e-10) -> np.ndarray:
    """inf_t sum_d mt_d ln((1+e^t)^d - d e^t) - omega t; convex in t, golden section on [-40, 40]."""
    omega = np.asarray(omega, dtype=float)

    def f(t):
        out = -omega * t
        for d, mt in checks:
            out = out + mt * _log_check_term(t, d)
        return out

    a = np.full(omega.shape, -40.0)
    b = np.full(omega.shape, 40.0)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while np.max(b - a) > tol:
        left = fc < fd
        # minimum lies in [a, d] when f(c) < f(d), else in [c, b]
        a, b = np.where(left, a, c), np.where(left, d, b)
        keep_x, keep_f = np.where(left, c, d), np.where(left, fc, fd)
        probe = np.where(left, b - _GOLDEN * (b - a), a + _GOLDEN * (b - a))
        fp = f(probe)
        c, fc = np.where(left, probe, keep_x), np.where(left, fp, keep_f)
        d, fd = np.where(left, keep_x, probe), np.where(left, keep_f, fp)
    return np.minimum(np.minimum(fc, fd), f(0.5 * (a + b)))


@dataclass(frozen=True)
class _GammaModel:
    degs: np.ndarray
    lt: np.ndarray
    checks: tuple[tuple[int, float], ...]
    r1: float

    @classmethod
    def of(cls, dist: DegreeDistribution) -> "_GammaModel":
        var_frac, _ = node_fractions(dist)
        r1 = dist.edges_per_var
        checks = tuple((d, float(r1 * w / d)) for d, w in dist.rho_coeffs)
        return cls(
            np.array(list(var_frac), dtype=float),
            np.array([float(f) for f in var_frac.values()]),
            checks,
            float(r1),
        )

    def objective(self, beta: np.ndarray) -> np.ndarray:
        """Exponent for a degree allocation ``beta`` of shape (..., J)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(self.lt > 0, beta / self.lt, 0.0)
        ent = np.sum(self.lt * _h(ratio), axis=-1)
        omega = beta @ self.degs
        return ent + _phi(omega, self.checks) - self.r1 * _h(omega / self.r1)


@lru_cache(maxsize=32)
def _model(dist: DegreeDistribution) -> _GammaModel:
    return _GammaModel.of(dist)


def gamma(alpha, dist: DegreeDistribution, *, grid_points: int = 17, step_tol: float = 1e-8,
          max_sweeps: int = 50):
    """Growth rate of the average stopping-set count at size alpha * n.

    Vectorized over ``alpha``. For ensembles with several variable degrees the
    allocation is found by pairwise coordinate ascent started from the
    proportional split, each pair move located by nested grid refinement down
    to ``step_tol``.
    """
    scalar = np.ndim(alpha) == 0
    al = np.atleast_1d(np.asarray(alpha, dtype=float))
    if np.any((al < 0) | (al > 1)):
        raise ValueError("alpha outside [0, 1]")
    mdl = _model(dist)
    beta = al[:, None] * mdl.lt[None, :]
    cur = mdl.objective(beta)
    J = len(mdl.lt)
    if J > 1:
        K = grid_points
        for _ in range(max_sweeps):
            gain = np.zeros_like(cur)
            for i, j in combinations(range(J), 2):
                # shift mass delta from degree j to degree i
                lo = -np.minimum(beta[:, i], mdl.lt[j] - beta[:, j])
                hi = np.minimum(beta[:, j], mdl.lt[i] - beta[:, i])
                a, b = lo.copy(), hi.copy()
                best_d = np.zeros_like(cur)
                best_v = cur.copy()
                while np.max(b - a) > step_tol:
                    steps = a[:, None] + (b - a)[:, None] * np.linspace(0, 1, K)[None, :]
                    cand = np.repeat(beta[:, None, :], K, axis=1)
                    cand[:, :, i] += steps
                    cand[:, :, j] -= steps
                    np.clip(cand, 0.0, mdl.lt, out=cand)
                    vals = mdl.objective(cand)
                    k = np.argmax(vals, axis=1)
                    rows = np.arange(len(al))
                    top = vals[rows, k]
                    better = top > best_v
                    best_v = np.where(better, top, best_v)
                    best_d = np.where(better, steps[rows, k], best_d)
                    width = (b - a) / (K - 1)
                    centre = steps[rows, k]
                    a = np.maximum(lo, centre - width)
                    b = np.minimum(hi, centre + width)
                beta[:, i] += best_d
                beta[:, j] -= best_d
                np.clip(beta, 0.0, mdl.lt, out=beta)
                new = mdl.objective(beta)
                gain += np.maximum(new - cur, 0.0)
                cur = new
            if np.max(gain) < 1e-13:
                break
    out = np.where(al <= 0, 0.0, cur)
    return float(out[0]) if scalar else out


def finite_growth(dist: DegreeDistribution, alpha: float, n: int) -> float:
    """(1/n) ln E(alpha n) from the exact average at block length n."""
    s = round(alpha * n)
    if abs(s - alpha * n) > 1e-9:
        raise ValueError(f"alpha*n = {alpha * n} is not an integer")
    e = expected_stopping_sets_exact(EnsembleSpec(n, dist), s)
    if e == 0:
        return -math.inf
    return (math.log(e.numerator) - math.log(e.denominator)) / n


def extrapolate_growth(dist: DegreeDistribution, alpha: float,
                       n_list: Sequence[int] = (100, 200, 400, 800)) -> tuple[float, float]:
    """Large-n limit of (1/n) ln E(alpha n).

    Returns the least-squares intercept on the basis (1, ln n / n, 1 / n) and
    the two-point Richardson value 2 v(n_max) - v(n_max / 2).
    """
    ns = sorted(n_list)
    vals = np.array([finite_growth(dist, alpha, n) for n in ns])
    A = np.array([[1.0, math.log(n) / n, 1.0 / n] for n in ns])
    coef = np.linalg.lstsq(A, vals, rcond=None)[0]
    if ns[-1] % 2 == 0 and ns[-1] // 2 in ns:
        rich = 2 * vals[-1] - vals[ns.index(ns[-1] // 2)]
    else:
        rich = math.nan
    return float(coef[0]), float(rich)


def alpha_star(dist: DegreeDistribution, tol: float = 1e-6) -> float:
    """inf {alpha > 0 : gamma(alpha) >= 0}; 0 when gamma is nonnegative near 0."""
    grid = np.geomspace(1e-6, 1 - 1e-6, 600)
    vals = gamma(grid, dist)
    hits = np.flatnonzero(vals >= 0)
    if len(hits) == 0:
        return 1.0
    i = int(hits[0])
    if i == 0:
        return 0.0
    lo, hi = grid[i - 1], grid[i]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gamma(mid, dist) >= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def eps_ef_objective(dist: DegreeDistribution, eps: float, grid_points: int = 512) -> float:
    """max over alpha in (0, eps] of gamma(alpha) + (1-alpha) h((eps-alpha)/(1-alpha)) - h(eps)."""
    if eps <= 0:
        return 0.0
    he = float(_h(eps))

    def D(al):
        al = np.asarray(al, dtype=float)
        inner = np.where(al < 1, (eps - al) / np.where(al < 1, 1 - al, 1.0), 0.0)
        return gamma(al, dist) + (1 - al) * _h(inner) - he

    al = eps * np.arange(1, grid_points + 1) / grid_points
    vals = D(al)
    k = int(np.argmax(vals))
    best = float(vals[k])
    a = al[k - 1] if k > 0 else 0.5 * al[0]
    b = al[min(k + 1, len(al) - 1)]
    # golden-section refinement around the best grid point
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = float(D(c)), float(D(d))
    while b - a > 1e-9:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = float(D(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = float(D(d))
    return max(best, fc, fd)


def eps_ef(dist: DegreeDistribution, tol: float = 1e-4, grid_points: int = 512) -> float:
    """sup of eps whose inner maximum stays <= 0, by bisection."""
    lo, hi = 0.0, 1.0 - 1e-9
    if eps_ef_objective(dist, hi, grid_points) <= 0:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if eps_ef_objective(dist, mid, grid_points) <= 0:
            lo = mid
        else:
            hi = mid
    return lo


def exponent_bound(l_min: int, k: int) -> int:
    """ceil(l_min k / 2) - k."""
    if l_min < 1 or k < 2:
        raise ValueError("need l_min >= 1 and k >= 2")
    return -(-l_min * k // 2) - k


def union_bound_prediction(spec: EnsembleSpec, eps: float, i_max: int, i_min: int | None = None) -> float:
    """sum_{i=i_min}^{i_max} E(i) eps^i with exact E(i); i_min defaults to k.

    Only the small-stopping-set part of the union bound; larger sets are not
    included.
    """
    i_min = spec.k if i_min is None else max(int(i_min), 1)
    if eps == 0:
        return 0.0
    total = Fraction(0)
    e = Fraction(eps)
    for i in range(i_min, min(i_max, spec.n) + 1):
        total += expected_stopping_sets_exact(spec, i) * e**i
    return float(total)


@dataclass(frozen=True)
class ThresholdReport:
    dist: DegreeDistribution
    eps_th: float
    eps_ef: float
    alpha_star: float
    design_rate: float

    def __post_init__(self):
        if not 0 <= self.eps_ef <= self.eps_th + 1e-9 or self.eps_th > 1:
            raise ValueError(f"inconsistent thresholds eps_ef={self.eps_ef} eps_th={self.eps_th}")

    @property
    def weak_interval(self) -> tuple[float, float]:
        return 1 - self.eps_th, 1 - self.eps_ef

    @property
    def strong_region_start(self) -> float:
        return 1 - self.eps_ef

    def to_json(self) -> dict:
        d = self.dist.to_json()
        return {
            "lambda": d["lambda"],
            "rho": d["rho"],
            "eps_th": self.eps_th,
            "eps_ef": self.eps_ef,
            "alpha_star": self.alpha_star,
            "design_rate": self.design_rate,
            "weak_interval": list(self.weak_interval),
            "strong_from": self.strong_region_start,
        }


def threshold_report(dist: DegreeDistribution, tol: float = 1e-4) -> ThresholdReport:
    return ThresholdReport(
        dist,
        eps_th=de_threshold(dist, tol=min(tol, 1e-6)),
        eps_ef=eps_ef(dist, tol=tol),
        alpha_star=alpha_star(dist),
        design_rate=float(dist.design_rate),
    )
