#!/usr/bin/env python3
"""Moment-estimator error versus replication count at fixed n, across noise
levels."""

import argparse

from shufreg.bench import run_study


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output", default="results/replication_curve")
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--seed", type=int, default=5)
    parser.add_argument("--nsr-db", type=float, nargs="*", default=[-20.0, -10.0, 0.0, 10.0])
    args = parser.parse_args()
    study = {
        "kind": "replication_curve",
        "d": 4,
        "n": 1000,
        "nsr_db": args.nsr_db,
        "R": [1, 2, 4, 6, 8],
        "trials": args.trials,
        "seed": args.seed,
        "fit": {"starts": 6, "step": 0.01, "convergence_threshold": 1e-9, "max_iters": 2500},
        "output_name": "fig5",
    }
    for path in run_study(study, args.output):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
