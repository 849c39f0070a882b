"""Mean small stopping-set counts of girth-restricted graphs against exact ensemble averages.

    python scripts/stopping_scan.py --n 50 100 200 --min-girth 6 --graphs 500
"""

from __future__ import annotations

import argparse
import json

from ldpc_wiretap.ensemble import DegreeDistribution
from ldpc_wiretap.harness import ExperimentConfig, small_stopping_scan


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, nargs="+", default=[50, 100, 200])
    ap.add_argument("--min-girth", type=int, default=6)
    ap.add_argument("--s-max", type=int, default=5)
    ap.add_argument("--graphs", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cfg = ExperimentConfig(DegreeDistribution.regular(3, 6), args.min_girth, tuple(args.n), master_seed=args.seed)
    for row in small_stopping_scan(cfg, args.s_max, args.graphs):
        print(json.dumps(row.to_json(), sort_keys=True))


if __name__ == "__main__":
    main()
