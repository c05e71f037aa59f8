#!/usr/bin/env python3
"""Effect of L2 regularization on the moment estimator as zero weights are
appended to a two-weight truth."""

import argparse

from shufreg.bench import run_study


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output", default="results/regularization")
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--seed", type=int, default=8)
    args = parser.parse_args()
    study = {
        "kind": "regularization",
        "n": 1000,
        "sparsity": [0, 2, 4, 8],
        "lambda2": [0.0, 0.01, 0.1],
        "sigma": 0.1,
        "trials": args.trials,
        "seed": args.seed,
        "fit": {"starts": 6, "step": 1e-3, "convergence_threshold": 1e-8, "max_iters": 2000},
        "output_name": "fig8",
    }
    for path in run_study(study, args.output):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
