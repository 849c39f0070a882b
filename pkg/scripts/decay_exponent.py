"""Block-error decay of girth-restricted (3,6) ensembles against the union-bound proxy.

    python scripts/decay_exponent.py --trials 1000000 --jobs 4 --out results/decay.csv
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from ldpc_wiretap.analysis import exponent_bound, union_bound_prediction
from ldpc_wiretap.ensemble import DegreeDistribution, EnsembleSpec
from ldpc_wiretap.harness import ExperimentConfig, block_error_mc, exponent_fit, fit_loglog, write_block_error_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, nargs="+", default=[50, 100, 200, 400])
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--min-girth", type=int, default=6)
    ap.add_argument("--trials", type=int, default=1_000_000)
    ap.add_argument("--patterns-per-graph", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    dist = DegreeDistribution.regular(3, 6)
    cfg = ExperimentConfig(dist, args.min_girth, tuple(args.n), (args.eps,), args.trials, args.seed,
                           patterns_per_graph=args.patterns_per_graph)
    t0 = time.time()
    est = block_error_mc(cfg, jobs=args.jobs)
    text = write_block_error_csv(est, cfg)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(text, end="")
    fit = exponent_fit(est)
    k = max(args.min_girth // 2, 1)
    proxy = [union_bound_prediction(EnsembleSpec(n, dist, args.min_girth), args.eps, k + 1) for n in args.n]
    pfit = fit_loglog(args.n, proxy, np.ones(len(proxy)))
    print(json.dumps({
        "predicted_exponent": exponent_bound(3, k),
        "mc_fit": fit.to_json(),
        "proxy": proxy,
        "proxy_slope": pfit.slope,
        "seconds": round(time.time() - t0, 1),
    }, indent=1))


if __name__ == "__main__":
    main()
