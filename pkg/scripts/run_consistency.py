#!/usr/bin/env python3
"""Error of the sorted-LS, moment, and aligned-OLS estimators versus sample
size for a scalar weight. The sorted-LS curve flattens at its biased limit
while the moment curve keeps dropping toward zero."""

import argparse

from shufreg.bench import run_study


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output", default="results/consistency")
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--seed", type=int, default=2)
    args = parser.parse_args()
    study = {
        "kind": "sweep",
        "n_values": [64, 128, 256, 512, 1024, 2048, 4096],
        "d_values": [1],
        "noise_kind": "nsr",
        "noise_db": [0.0],
        "trials": args.trials,
        "estimators": ["ls", "sm", "ols"],
        "fit": {"starts": 6, "step": 1e-4, "convergence_threshold": 1e-8, "max_iters": 3000},
        "seed": args.seed,
        "output_name": "fig2",
    }
    for path in run_study(study, args.output):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
