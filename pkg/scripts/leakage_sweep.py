"""Leakage of the dual coset code across eavesdropper erasure rates.

    python scripts/leakage_sweep.py --n 100 200 --eps 0.55 0.6 0.65 0.7 0.8 --trials 100000
"""

from __future__ import annotations

import argparse
import json

from ldpc_wiretap.ensemble import DegreeDistribution
from ldpc_wiretap.harness import ExperimentConfig, secrecy_sim


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, nargs="+", default=[100, 200])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.55, 0.6, 0.65, 0.7, 0.8])
    ap.add_argument("--min-girth", type=int, default=0)
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    cfg = ExperimentConfig(DegreeDistribution.regular(3, 6), args.min_girth, tuple(args.n), tuple(args.eps),
                           args.trials, args.seed)
    for est in secrecy_sim(cfg, jobs=args.jobs):
        rec = est.to_json()
        rec["leakage_rate"] = est.leakage_bits / est.n
        rec["nonfull_rank_bound"] = est.k * est.p_nf
        print(json.dumps(rec, sort_keys=True))


if __name__ == "__main__":
    main()
