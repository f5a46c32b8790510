#!/usr/bin/env python3
"""Tabulate how conditioning on pairwise agreement sharpens the
probability that every member of a candidate reference cluster has an
acceptable meter error.

For each cluster size n, prints the unconditioned probability that all n
station errors fall inside the acceptable band, and the probability
conditioned on every pairwise relative error being below the threshold.

Example:
    python scripts/run_cluster_probability.py --max-n 10 --threshold 0.005
"""
import argparse

from chargeaudit.estimator import (cluster_probability,
                                   unconditioned_band_probability)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-n", type=int, default=10)
    ap.add_argument("--gamma0", type=float, default=0.02,
                    help="acceptable error band half-width")
    ap.add_argument("--threshold", type=float, default=0.005,
                    help="pairwise relative-error threshold l")
    ap.add_argument("--sigma", type=float, default=0.0162,
                    help="population std of station errors")
    ap.add_argument("--fleets", type=int, default=1_000_000)
    args = ap.parse_args()

    print(f"gamma0={args.gamma0:.4f}  l={args.threshold:.4f}  "
          f"sigma={args.sigma:.4f}")
    print(f"{'n':>3}  {'unconditioned':>14}  {'conditioned':>12}")
    for n in range(1, args.max_n + 1):
        unc = unconditioned_band_probability(n, args.gamma0, args.sigma)
        cond = cluster_probability(n, args.gamma0, args.threshold,
                                   args.sigma, fleets=args.fleets)
        print(f"{n:>3}  {unc:>14.4f}  {cond:>12.4f}")


if __name__ == "__main__":
    main()
