"""Command-line entry point: ``ldpc-wiretap <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis, harness
from .decoder import enumerate_stopping_sets, peel, sample_erasures
from .ensemble import (
    DegreeDistribution,
    EnsembleSpec,
    GirthSwitchChain,
    TannerGraph,
    girth,
    sample_girth_restricted,
    valid_sizes,
)
from .errors import BudgetExceeded, ConfigError, InsufficientData, TriesExhausted

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_DATA = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--trials", type=int, default=None, help="trial count override")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    return p


def _ensemble_args(p: argparse.ArgumentParser, need_n: bool = False) -> None:
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--lambda", dest="lam", help="edge-perspective variable polynomial, e.g. x^2")
    p.add_argument("--rho", help="edge-perspective check polynomial, e.g. x^5")
    p.add_argument("--min-girth", type=int, default=None)
    if need_n:
        p.add_argument("--n", type=int, default=None, help="block length (rounded up to a valid size)")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = _Parser(prog="ldpc-wiretap", description="LDPC ensembles on the erasure wiretap channel")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", parents=[common], help="draw a Tanner graph")
    _ensemble_args(p, need_n=True)
    p.add_argument("--sampler", choices=harness.SAMPLERS, default="auto")

    p = sub.add_parser("girth", parents=[common], help="girth of a saved graph")
    p.add_argument("graph", help="graph JSON from `sample`")

    p = sub.add_parser("decode", parents=[common], help="peel random erasure patterns on a saved graph")
    p.add_argument("graph")
    p.add_argument("--eps", type=float, required=True)

    p = sub.add_parser("stopping", parents=[common], help="stopping-set counts of a graph or ensemble")
    p.add_argument("graph", nargs="?", help="graph JSON; omit to use the exact ensemble average")
    _ensemble_args(p, need_n=True)
    p.add_argument("--s-max", type=int, default=4)

    for name, text in (("thresholds", "erasure thresholds and stopping ratio"),
                       ("region", "guaranteed secrecy regions of the dual coset scheme")):
        p = sub.add_parser(name, parents=[common], help=text)
        _ensemble_args(p)
        p.add_argument("--tol", type=float, default=1e-4)

    p = sub.add_parser("block-error", parents=[common], help="Monte Carlo ensemble block error")
    p.add_argument("--config", required=True)
    p.add_argument("--fixed-graph", action="store_true")

    p = sub.add_parser("fit", parents=[common], help="decay exponent from a block-error CSV")
    p.add_argument("csv")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--min-failures", type=int, default=3)

    p = sub.add_parser("secrecy-sim", parents=[common], help="leakage of dual coset codes")
    p.add_argument("--config", required=True)
    return ap


def _dist(args) -> tuple[DegreeDistribution, harness.ExperimentConfig | None]:
    if getattr(args, "config", None):
        cfg = harness.ExperimentConfig.load(args.config)
        return cfg.dist, cfg
    if not (args.lam and args.rho):
        raise ConfigError("give --config or both --lambda and --rho")
    try:
        return DegreeDistribution.from_polynomials(args.lam, args.rho), None
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad degree distribution: {exc}") from None


def _spec(args) -> EnsembleSpec:
    dist, cfg = _dist(args)
    n = args.n if args.n is not None else (cfg.n_list[0] if cfg else None)
    if n is None:
        raise ConfigError("block length required (--n)")
    a = valid_sizes(dist)
    if n % a:
        rounded = -(-n // a) * a
        print(f"warning: n={n} rounded up to {rounded} (multiple of {a})", file=sys.stderr)
        n = rounded
    g = args.min_girth if args.min_girth is not None else (cfg.min_girth if cfg else 0)
    try:
        return EnsembleSpec(n, dist, g)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _load_graph(path: str) -> TannerGraph:
    try:
        return TannerGraph.from_json(json.loads(Path(path).read_text()))
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load graph {path}: {exc}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_lines(records) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def _cmd_sample(args) -> str:
    spec = _spec(args)
    seed = 0 if args.seed is None else args.seed
    sampler = args.sampler
    if sampler == "auto":
        sampler = "rejection" if spec.min_girth <= 4 else "switch"
    if sampler == "switch" and spec.min_girth > 2:
        g = GirthSwitchChain(spec, seed).sample()
        g = TannerGraph(g.var_degrees, g.check_degrees, g.perm, seed)
    else:
        g, _ = sample_girth_restricted(spec, seed)
    return json.dumps(g.to_json(), sort_keys=True) + "\n"


def _cmd_girth(args) -> str:
    g = girth(_load_graph(args.graph))
    return json.dumps({"girth": None if g == float("inf") else g}) + "\n"


def _cmd_decode(args) -> str:
    graph = _load_graph(args.graph)
    master = 0 if args.seed is None else args.seed
    trials = 1 if args.trials is None else args.trials
    recs = []
    for t in range(trials):
        pat = sample_erasures(graph.n, args.eps, harness.derive_seed(master, graph.n, float(args.eps), t))
        rec = peel(graph, pat).to_json()
        rec.update(trial=t, erased=len(pat.erased))
        recs.append(rec)
    return _json_lines(recs)


def _cmd_stopping(args) -> str:
    if args.graph:
        graph = _load_graph(args.graph)
        counts = enumerate_stopping_sets(graph, args.s_max)
        return json.dumps({"n": graph.n, "counts": counts}) + "\n"
    spec = _spec(args)
    exact = analysis.stopping_expectation(spec, args.s_max)
    return json.dumps({"n": spec.n, "expected": {str(s): float(v) for s, v in exact.values.items()},
                       "exact": {str(s): str(v) for s, v in exact.values.items()}}, sort_keys=True) + "\n"


def _cmd_thresholds(args) -> str:
    dist, _ = _dist(args)
    return json.dumps(analysis.threshold_report(dist, args.tol).to_json(), sort_keys=True) + "\n"


def _cmd_region(args) -> str:
    dist, _ = _dist(args)
    rep = harness.secrecy_region(dist, args.tol)
    lo, hi = rep.weak_interval
    body = {"design_rate": rep.design_rate, "weak_interval": [lo, hi], "strong_from": rep.strong_region_start,
            "eps_th": rep.eps_th, "eps_ef": rep.eps_ef}
    return json.dumps(body, sort_keys=True) + "\n"


def _experiment(args) -> harness.ExperimentConfig:
    cfg = harness.ExperimentConfig.load(args.config)
    kw = {"master_seed": args.seed, "trials": args.trials}
    if getattr(args, "fixed_graph", False):
        kw["fixed_graph"] = True
    return harness.with_overrides(cfg, **kw)


def _cmd_block_error(args) -> str:
    cfg = _experiment(args)
    est = harness.block_error_mc(cfg, jobs=args.jobs)
    return harness.write_block_error_csv(est, cfg)


def _cmd_fit(args) -> str:
    try:
        text = Path(args.csv).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {args.csv}: {exc.strerror}") from None
    est = harness.read_block_error_csv(text)
    eps_values = sorted({e.eps for e in est})
    if args.eps is not None:
        eps_values = [e for e in eps_values if abs(e - args.eps) < 1e-12]
        if not eps_values:
            raise InsufficientData(f"no rows at eps={args.eps}")
    recs = []
    for e in eps_values:
        fit = harness.exponent_fit([x for x in est if x.eps == e], args.min_failures)
        recs.append({"eps": e, **fit.to_json()})
    return _json_lines(recs)


def _cmd_secrecy_sim(args) -> str:
    cfg = _experiment(args)
    return _json_lines(r.to_json() for r in harness.secrecy_sim(cfg, jobs=args.jobs))


COMMANDS = {
    "sample": _cmd_sample, "girth": _cmd_girth, "decode": _cmd_decode, "stopping": _cmd_stopping,
    "thresholds": _cmd_thresholds, "region": _cmd_region, "block-error": _cmd_block_error,
    "fit": _cmd_fit, "secrecy-sim": _cmd_secrecy_sim,
}


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.jobs < 1 or (args.trials is not None and args.trials < 1):
            raise ConfigError("--jobs and --trials must be >= 1")
        _emit(COMMANDS[args.cmd](args), args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetExceeded, TriesExhausted) as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InsufficientData as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
