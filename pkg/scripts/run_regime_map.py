#!/usr/bin/env python3
"""Winner map between the moment estimator and the 1-D projection hybrid over
a grid of sample sizes and dimensions (or replication counts with --by-R),
at a fixed SNR."""

import argparse

from shufreg.bench import run_study


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output", default="results/regime_map")
    parser.add_argument("--trials", type=int, default=5)
    parser.add_argument("--seed", type=int, default=4)
    parser.add_argument("--snr-db", type=float, default=15.0)
    parser.add_argument(
        "--by-R",
        action="store_true",
        help="sweep replications at 100 points per replication instead of n",
    )
    args = parser.parse_args()
    study = {
        "kind": "sweep",
        "noise_kind": "snr",
        "noise_db": [args.snr_db],
        "trials": args.trials,
        "estimators": ["sm", "p1"],
        "fit": {"starts": 6, "step": 0.01, "convergence_threshold": 1e-8, "max_iters": 1500},
        "seed": args.seed,
    }
    if args.by_R:
        study.update(
            d_values=[2, 3, 4, 5, 6],
            R_values=[1, 2, 4, 6, 8],
            points_per_replication=100,
            output_name="fig6",
        )
    else:
        study.update(
            n_values=[64, 256, 1024],
            d_values=[1, 2, 3, 4, 5, 6],
            output_name="fig4",
        )
    for path in run_study(study, args.output):
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
