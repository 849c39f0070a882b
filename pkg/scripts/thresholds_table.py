"""Erasure thresholds, stopping ratio and secrecy regions for a list of ensembles.

    python scripts/thresholds_table.py "x^2:x^5" "x^2:x^3" "1/2x+1/2x^2:x^5"
"""

from __future__ import annotations

import argparse
import json
import time

from ldpc_wiretap.analysis import threshold_report
from ldpc_wiretap.ensemble import DegreeDistribution

DEFAULTS = ("x^2:x^5", "x^2:x^3", "x^3:x^7", "x^2:x^4")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("ensembles", nargs="*", default=list(DEFAULTS), help="lambda:rho pairs")
    ap.add_argument("--tol", type=float, default=1e-4)
    args = ap.parse_args()
    for item in args.ensembles:
        lam, rho = item.split(":")
        t0 = time.perf_counter()
        rep = threshold_report(DegreeDistribution.from_polynomials(lam, rho), args.tol).to_json()
        rep["seconds"] = round(time.perf_counter() - t0, 2)
        print(json.dumps(rep, sort_keys=True))


if __name__ == "__main__":
    main()
