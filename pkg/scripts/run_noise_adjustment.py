#!/usr/bin/env python3
"""Moment estimator with and without the true noise variance folded into the
second-moment constraint, across noise-to-signal ratios."""

import argparse

from shufreg.bench import run_study


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output", default="results/noise_adjustment")
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    study = {
        "kind": "noise_adjustment",
        "n": 1000,
        "nsr_db": [-20.0, -10.0, -5.0, 0.0, 5.0],
        "w0": [1.0, -1.0],
        "trials": args.trials,
        "seed": args.seed,
        "output_name": "fig7",
    }
    for path in run_study(study, args.output):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
