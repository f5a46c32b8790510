#!/usr/bin/env python3
"""Run the desk-scale validation sweep: simulate seeded production-like
fleets, estimate every station's meter error and score the verdicts
against the known ground truth.

Example:
    python scripts/run_desk_validation.py --seeds 20
    python scripts/run_desk_validation.py --seeds 5 --defective 0.10 --json out.json
"""
import argparse
import json
import time

import numpy as np

from chargeaudit.model import ModelConfig
from chargeaudit.simulator import (desk_scale_scenario, run_validation)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20,
                    help="number of seeded scenarios (seeds 1..N)")
    ap.add_argument("--defective", type=float, default=0.15,
                    help="fraction of defective stations")
    ap.add_argument("--json", default=None,
                    help="optional path for a JSON summary")
    args = ap.parse_args()

    cfg = ModelConfig()
    rows = []
    for seed in range(1, args.seeds + 1):
        t0 = time.time()
        scn = desk_scale_scenario(seed, fraction_defective=args.defective)
        report, _ = run_validation(scn, cfg)
        dt = time.time() - t0
        rows.append({"seed": seed, "accuracy_pct": report.accuracy_pct,
                     "coverage_pct": report.coverage_pct,
                     "n_estimated": report.n_fcs_estimated,
                     "n_unreliable": report.n_unreliable,
                     "n_rcs": report.n_rcs, "seconds": round(dt, 1)})
        print(f"seed {seed:3d}: accuracy {report.accuracy_pct:5.1f} %  "
              f"coverage {report.coverage_pct:5.1f} %  "
              f"estimated {report.n_fcs_estimated:3d}  "
              f"unreliable {report.n_unreliable:3d}  [{dt:.1f} s]")

    accs = [r["accuracy_pct"] for r in rows]
    covs = [r["coverage_pct"] for r in rows]
    summary = {"mean_accuracy_pct": round(float(np.mean(accs)), 2),
               "min_accuracy_pct": float(min(accs)),
               "mean_coverage_pct": round(float(np.mean(covs)), 2),
               "scenarios": rows}
    print(f"\nmean accuracy {summary['mean_accuracy_pct']:.2f} %  "
          f"(min {summary['min_accuracy_pct']:.1f} %)  "
          f"mean coverage {summary['mean_coverage_pct']:.2f} %")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2)
        print(f"wrote {args.json}")


if __name__ == "__main__":
    main()
