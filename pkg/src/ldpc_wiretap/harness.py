"""Seeded Monte Carlo experiments: block error, decay fits, stopping-set scans, leakage."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.stats import binomtest

from . import analysis, secrecy
from .decoder import enumerate_stopping_sets, peel_batch
from .ensemble import (
    DegreeDistribution,
    EnsembleSpec,
    GirthSwitchChain,
    TannerGraph,
    biregular_girth_fraction,
    sample_girth_restricted,
    valid_sizes,
)
from .errors import ConfigError, InsufficientData

CSV_VERSION = "block-error/1"
CSV_COLUMNS = ("n", "eps", "trials", "failures", "p_hat", "ci_lo", "ci_hi", "seed", "graphs", "stderr")
SAMPLERS = ("auto", "rejection", "switch")


@dataclass(frozen=True)
class ExperimentConfig:
    dist: DegreeDistribution
    min_girth: int = 0
    n_list: tuple[int, ...] = (100,)
    eps_list: tuple[float, ...] = (0.25,)
    trials: int = 10_000
    master_seed: int = 0
    sampler: str = "auto"
    patterns_per_graph: int = 1
    fixed_graph: bool = False
    chunk_trials: int = 20_000
    burn_in_sweeps: float = 20.0
    thin_sweeps: float = 1.0
    max_tries: int = 10_000
    enum_budget: int = 10_000_000
    out: str | None = None

    def __post_init__(self):
        a = valid_sizes(self.dist)
        for n in self.n_list:
            if n < 1 or n % a:
                raise ConfigError(f"field 'n': {n} is not a positive multiple of the valid size {a}")
        for e in self.eps_list:
            if not 0 <= e <= 1:
                raise ConfigError(f"field 'eps': {e} outside [0, 1]")
        if self.trials < 1:
            raise ConfigError("field 'trials': must be >= 1")
        if self.min_girth < 0 or self.min_girth % 2:
            raise ConfigError("field 'min_girth': must be a nonnegative even integer")
        if self.sampler not in SAMPLERS:
            raise ConfigError(f"field 'sampler': expected one of {SAMPLERS}")
        if self.patterns_per_graph < 1 or self.chunk_trials < 1:
            raise ConfigError("fields 'patterns_per_graph' and 'chunk_trials' must be >= 1")

    def spec(self, n: int) -> EnsembleSpec:
        return EnsembleSpec(n, self.dist, self.min_girth)

    def resolved_sampler(self) -> str:
        if self.sampler != "auto":
            return self.sampler
        return "rejection" if self.min_girth <= 4 else "switch"

    @classmethod
    def from_dict(cls, obj: Any) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        for key in ("lambda", "rho"):
            if key not in obj:
                raise ConfigError(f"missing field '{key}'")
        try:
            dist = DegreeDistribution.from_json({"lambda": obj["lambda"], "rho": obj["rho"]})
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise ConfigError(f"field 'lambda'/'rho': {exc}") from None
        budget = obj.get("budget", {}) or {}
        if not isinstance(budget, dict):
            raise ConfigError("field 'budget': expected an object")
        known = {"lambda", "rho", "min_girth", "n", "eps", "trials", "master_seed", "budget", "sampler",
                 "patterns_per_graph", "fixed_graph", "chunk_trials", "burn_in_sweeps", "thin_sweeps", "out"}
        extra = sorted(set(obj) - known)
        if extra:
            raise ConfigError(f"unknown field '{extra[0]}'")

        def ints(name, value):
            vals = value if isinstance(value, list) else [value]
            out = []
            for i, v in enumerate(vals):
                if isinstance(v, bool) or not isinstance(v, int):
                    raise ConfigError(f"field '{name}[{i}]': expected an integer, got {v!r}")
                out.append(v)
            return tuple(out)

        def floats(name, value):
            vals = value if isinstance(value, list) else [value]
            out = []
            for i, v in enumerate(vals):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    raise ConfigError(f"field '{name}[{i}]': expected a number, got {v!r}")
                out.append(float(v))
            return tuple(out)

        def one_int(name, value):
            return ints(name, value)[0] if not isinstance(value, list) else _bad(name)

        def _bad(name):
            raise ConfigError(f"field '{name}': expected a scalar")

        kwargs: dict[str, Any] = {"dist": dist}
        if "min_girth" in obj:
            kwargs["min_girth"] = one_int("min_girth", obj["min_girth"])
        if "n" in obj:
            kwargs["n_list"] = ints("n", obj["n"])
        if "eps" in obj:
            kwargs["eps_list"] = floats("eps", obj["eps"])
        for key in ("trials", "master_seed", "patterns_per_graph", "chunk_trials"):
            if key in obj:
                kwargs[key] = one_int(key, obj[key])
        for key in ("burn_in_sweeps", "thin_sweeps"):
            if key in obj:
                kwargs[key] = floats(key, obj[key])[0]
        if "sampler" in obj:
            kwargs["sampler"] = str(obj["sampler"])
        if "fixed_graph" in obj:
            kwargs["fixed_graph"] = bool(obj["fixed_graph"])
        if "out" in obj:
            kwargs["out"] = str(obj["out"])
        if "max_tries" in budget:
            kwargs["max_tries"] = one_int("budget.max_tries", budget["max_tries"])
        if "enum_nodes" in budget:
            kwargs["enum_budget"] = one_int("budget.enum_nodes", budget["enum_nodes"])
        return cls(**kwargs)

    @classmethod
    def from_json_text(cls, text: str) -> "ExperimentConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(obj)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.from_json_text(text)

    def to_dict(self) -> dict:
        d = self.dist.to_json()
        return {
            "lambda": d["lambda"], "rho": d["rho"], "min_girth": self.min_girth,
            "n": list(self.n_list), "eps": list(self.eps_list), "trials": self.trials,
            "master_seed": self.master_seed, "sampler": self.sampler,
            "patterns_per_graph": self.patterns_per_graph, "fixed_graph": self.fixed_graph,
            "chunk_trials": self.chunk_trials, "burn_in_sweeps": self.burn_in_sweeps,
            "thin_sweeps": self.thin_sweeps,
            "budget": {"max_tries": self.max_tries, "enum_nodes": self.enum_budget},
        }


def derive_seed(master: int, *keys) -> np.random.SeedSequence:
    """Seed stream keyed by (master, keys); floats enter through 1e-12 rounding."""
    words = [int(master) & 0xFFFFFFFFFFFFFFFF]
    for k in keys:
        if isinstance(k, float):
            k = int(round(k * 1e12))
        elif isinstance(k, str):
            k = int.from_bytes(k.encode(), "little")
        words.append(int(k) & 0xFFFFFFFFFFFFFFFF)
    return np.random.SeedSequence(words)


def _children(ss: np.random.SeedSequence, k: int) -> list[np.random.SeedSequence]:
    # spawn from a fresh copy so the caller's sequence is never mutated
    return np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key).spawn(k)


def _seed_int(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(2, dtype=np.uint32) @ np.array([1, 1 << 32], dtype=np.uint64)) >> 1


# ---------------------------------------------------------------------------
# block error


@dataclass(frozen=True)
class BlockErrorEstimate:
    n: int
    eps: float
    trials: int
    failures: int
    seed: int
    graphs: int
    stderr: float
    ci_lo: float = field(init=False)
    ci_hi: float = field(init=False)

    def __post_init__(self):
        lo, hi = wilson_interval(self.failures, self.trials)
        object.__setattr__(self, "ci_lo", lo)
        object.__setattr__(self, "ci_hi", hi)

    @property
    def p_hat(self) -> float:
        return self.failures / self.trials

    def row(self) -> list:
        return [self.n, repr(self.eps), self.trials, self.failures, repr(self.p_hat),
                repr(self.ci_lo), repr(self.ci_hi), self.seed, self.graphs, repr(self.stderr)]


def wilson_interval(failures: int, trials: int) -> tuple[float, float]:
    """95% Wilson interval; with no failures the upper end is the rule-of-three 3/trials."""
    if failures == 0:
        return 0.0, min(1.0, 3.0 / trials)
    ci = binomtest(failures, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class _ChunkTask:
    dist: DegreeDistribution
    n: int
    eps: float
    min_girth: int
    sampler: str
    graphs: int
    patterns: int
    seed: np.random.SeedSequence
    graph_seed: np.random.SeedSequence | None
    burn_in_sweeps: float
    thin_sweeps: float
    max_tries: int


def _draw_graphs(spec: EnsembleSpec, sampler: str, count: int, seed, burn_in: float, thin: float,
                 max_tries: int) -> Iterable[TannerGraph]:
    if sampler == "switch" and spec.min_girth > 2:
        chain = GirthSwitchChain(spec, seed, burn_in_sweeps=burn_in, thin_sweeps=thin)
        for _ in range(count):
            yield chain.sample()
    else:
        for child in _children(seed, count):
            yield sample_girth_restricted(spec, child, max_tries)[0]


def _run_chunk(task: _ChunkTask) -> np.ndarray:
    """Failure count for each graph in the chunk."""
    spec = EnsembleSpec(task.n, task.dist, task.min_girth)
    gseed, pseed = _children(task.seed, 2)
    rng = np.random.default_rng(pseed)
    if task.graph_seed is not None:
        fixed = next(iter(_draw_graphs(spec, task.sampler, 1, task.graph_seed, task.burn_in_sweeps,
                                       task.thin_sweeps, task.max_tries)))
        graphs: Iterable[TannerGraph] = (fixed for _ in range(task.graphs))
    else:
        graphs = _draw_graphs(spec, task.sampler, task.graphs, gseed, task.burn_in_sweeps,
                              task.thin_sweeps, task.max_tries)
    out = np.zeros(task.graphs, dtype=np.int64)
    for i, g in enumerate(graphs):
        if task.eps <= 0:
            continue
        erased = rng.random((task.patterns, task.n)) < task.eps
        out[i] = int(np.count_nonzero(peel_batch(g, erased, inplace=True)))
    return out


def _map(fn, tasks: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _cell_tasks(cfg: ExperimentConfig, n: int, eps: float) -> tuple[list[_ChunkTask], int]:
    P = cfg.patterns_per_graph
    total_graphs = -(-cfg.trials // P)
    per_chunk = max(1, cfg.chunk_trials // P)
    cell = derive_seed(cfg.master_seed, n, float(eps))
    graph_seed = derive_seed(cfg.master_seed, n, "fixed-graph") if cfg.fixed_graph else None
    tasks = []
    for c, lo in enumerate(range(0, total_graphs, per_chunk)):
        tasks.append(_ChunkTask(
            cfg.dist, n, float(eps), cfg.min_girth, cfg.resolved_sampler(), min(per_chunk, total_graphs - lo), P,
            derive_seed(cfg.master_seed, n, float(eps), c), graph_seed,
            cfg.burn_in_sweeps, cfg.thin_sweeps, cfg.max_tries,
        ))
    return tasks, _seed_int(cell)


def block_error_mc(cfg: ExperimentConfig, jobs: int = 1) -> list[BlockErrorEstimate]:
    """Ensemble-average block error of peeling for every (n, eps) cell.

    Each trial is one erasure pattern; a fresh graph is drawn every
    ``patterns_per_graph`` trials (or once per n with ``fixed_graph``). The
    reported ``stderr`` treats graphs as independent clusters.
    """
    cells = [(n, e) for n in cfg.n_list for e in cfg.eps_list]
    plan = [_cell_tasks(cfg, n, e) for n, e in cells]
    flat = [t for tasks, _ in plan for t in tasks]
    results = iter(_map(_run_chunk, flat, jobs))
    out = []
    for (n, e), (tasks, seed) in zip(cells, plan):
        per_graph = np.concatenate([next(results) for _ in tasks])
        trials = len(per_graph) * cfg.patterns_per_graph
        failures = int(per_graph.sum())
        se = _cluster_stderr(per_graph, cfg.patterns_per_graph)
        out.append(BlockErrorEstimate(n, float(e), trials, failures, seed, len(per_graph), se))
    return out


def _cluster_stderr(per_graph: np.ndarray, patterns: int) -> float:
    G = len(per_graph)
    if G < 2:
        return math.nan
    return float(np.std(per_graph / patterns, ddof=1) / math.sqrt(G))


def write_block_error_csv(estimates: Sequence[BlockErrorEstimate], cfg: ExperimentConfig | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# {CSV_VERSION}\n")
    if cfg is not None:
        buf.write("# config " + json.dumps(cfg.to_dict(), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for est in estimates:
        w.writerow(est.row())
    return buf.getvalue()


def read_block_error_csv(text: str) -> list[BlockErrorEstimate]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines:
        raise ConfigError("empty block-error CSV")
    reader = csv.DictReader(lines)
    missing = set(CSV_COLUMNS[:8]) - set(reader.fieldnames or ())
    if missing:
        raise ConfigError(f"CSV missing columns {sorted(missing)}")
    out = []
    for i, row in enumerate(reader, start=2):
        try:
            trials = int(row["trials"])
            out.append(BlockErrorEstimate(
                int(row["n"]), float(row["eps"]), trials, int(row["failures"]), int(row["seed"]),
                int(row.get("graphs") or trials), float(row.get("stderr") or "nan"),
            ))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"CSV row {i}: {exc}") from None
    return out


# ---------------------------------------------------------------------------
# decay exponent


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    stderr: float
    intercept: float
    chi2: float
    points: int

    @property
    def ci95(self) -> tuple[float, float]:
        return self.slope - 1.96 * self.stderr, self.slope + 1.96 * self.stderr

    def to_json(self) -> dict:
        lo, hi = self.ci95
        return {"slope": self.slope, "stderr": self.stderr, "ci95": [lo, hi], "intercept": self.intercept,
                "chi2": self.chi2, "points": self.points}


def fit_loglog(n, p, sigma_log) -> ExponentFit:
    """Weighted least squares of ln p on ln n with known per-point sd of ln p."""
    x = np.log(np.asarray(n, dtype=float))
    y = np.log(np.asarray(p, dtype=float))
    w = 1.0 / np.asarray(sigma_log, dtype=float) ** 2
    X = np.column_stack([np.ones_like(x), x])
    A = X.T @ (w[:, None] * X)
    cov = np.linalg.inv(A)
    beta = cov @ (X.T @ (w * y))
    resid = y - X @ beta
    return ExponentFit(float(beta[1]), float(math.sqrt(cov[1, 1])), float(beta[0]),
                       float(np.sum(w * resid**2)), len(x))


def exponent_fit(estimates: Sequence[BlockErrorEstimate], min_failures: int = 3) -> ExponentFit:
    """Slope of ln p_hat against ln n at a single eps.

    Cells with fewer than ``min_failures`` failures are dropped. The variance
    of each ln p_hat is the larger of the binomial and graph-cluster values.
    """
    eps = {e.eps for e in estimates}
    if len(eps) > 1:
        raise ValueError(f"estimates span several eps values {sorted(eps)}")
    usable = sorted((e for e in estimates if e.failures >= min_failures), key=lambda e: e.n)
    if len({e.n for e in usable}) < 3:
        raise InsufficientData(f"need >= 3 block lengths with >= {min_failures} failures, have {len(usable)}")
    sig = []
    for e in usable:
        p = e.p_hat
        var = p * (1 - p) / e.trials
        if not math.isnan(e.stderr):
            var = max(var, e.stderr**2)
        sig.append(math.sqrt(var) / p)
    return fit_loglog([e.n for e in usable], [e.p_hat for e in usable], sig)


# ---------------------------------------------------------------------------
# stopping-set scan


@dataclass(frozen=True)
class StoppingScanRow:
    n: int
    s: int
    graphs: int
    mean: float
    stderr: float
    exact_unrestricted: float
    restricted_bound: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def small_stopping_scan(cfg: ExperimentConfig, s_max: int, graphs: int, jobs: int = 1) -> list[StoppingScanRow]:
    """Mean number of stopping sets of each size <= s_max across sampled graphs.

    Alongside, the exact unrestricted average and the bound obtained by
    dividing it by the asymptotic probability of the girth restriction.
    """
    if s_max > 8:
        raise ValueError("s_max is meant to stay small (<= 8)")
    sampler = cfg.resolved_sampler()
    rows: list[StoppingScanRow] = []
    for n in cfg.n_list:
        spec = cfg.spec(n)
        seed = derive_seed(cfg.master_seed, n, "scan")
        counts = np.array([
            enumerate_stopping_sets(g, s_max, cfg.enum_budget)
            for g in _draw_graphs(spec, sampler, graphs, seed, cfg.burn_in_sweeps, cfg.thin_sweeps, cfg.max_tries)
        ], dtype=float)
        p = 1.0
        if cfg.min_girth > 2 and cfg.dist.is_regular:
            l, r = cfg.dist.l_min, cfg.dist.r_max
            p = biregular_girth_fraction(l, r, cfg.min_girth - 2)
        unrestricted = EnsembleSpec(n, cfg.dist)
        for s in range(1, s_max + 1):
            col = counts[:, s]
            exact = float(analysis.expected_stopping_sets_exact(unrestricted, s))
            se = float(col.std(ddof=1) / math.sqrt(len(col))) if len(col) > 1 else math.nan
            rows.append(StoppingScanRow(n, s, len(col), float(col.mean()), se, exact, exact / p))
    return rows


# ---------------------------------------------------------------------------
# secrecy


def secrecy_region(dist: DegreeDistribution, tol: float = 1e-4) -> analysis.ThresholdReport:
    return analysis.threshold_report(dist, tol)


def _leak_task(args):
    cfg, n, eps, seed = args
    gseed, pseed = _children(derive_seed(cfg.master_seed, n, float(eps), "leak"), 2)
    spec = cfg.spec(n)
    graph = next(iter(_draw_graphs(spec, cfg.resolved_sampler(), 1, gseed, cfg.burn_in_sweeps,
                                   cfg.thin_sweeps, cfg.max_tries)))
    code = secrecy.build_coset_code(graph.parity_check())
    return secrecy.leakage_mc(code, eps, cfg.trials, _seed_int(pseed))


def secrecy_sim(cfg: ExperimentConfig, jobs: int = 1) -> list[secrecy.LeakageEstimate]:
    """Leakage of the dual coset code of one sampled graph per (n, eps) cell."""
    tasks = [(cfg, n, float(e), cfg.master_seed) for n in cfg.n_list for e in cfg.eps_list]
    return _map(_leak_task, tasks, jobs)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    kw = {k: v for k, v in kw.items() if v is not None}
    return replace(cfg, **kw) if kw else cfg
