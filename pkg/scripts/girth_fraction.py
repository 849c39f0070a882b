"""Fraction of (d,d)-regular configuration graphs with girth above 2 and 4.

    python scripts/girth_fraction.py --n 500 --samples 200000
"""

from __future__ import annotations

import argparse
import json
import math

from ldpc_wiretap.ensemble import DegreeDistribution, EnsembleSpec, biregular_girth_fraction, girth, sample_graph
from ldpc_wiretap.harness import derive_seed


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spec = EnsembleSpec(args.n, DegreeDistribution.regular(args.d, args.d))
    hist: dict[str, int] = {}
    for i in range(args.samples):
        g = girth(sample_graph(spec, derive_seed(args.seed, args.n, i)), cap=6)
        key = "6+" if math.isinf(g) else str(int(g))
        hist[key] = hist.get(key, 0) + 1
    above2 = args.samples - hist.get("2", 0)
    above4 = hist.get("6+", 0)
    for g, count in ((2, above2), (4, above4)):
        f = count / args.samples
        print(json.dumps({
            "girth_above": g, "fraction": f, "stderr": math.sqrt(f * (1 - f) / args.samples),
            "predicted": biregular_girth_fraction(args.d, args.d, g), "samples": args.samples,
        }))
    print(json.dumps({"histogram": hist}))


if __name__ == "__main__":
    main()
