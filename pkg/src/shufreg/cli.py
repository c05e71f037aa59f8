"""Command-line front end.

Subcommands:
  fit       estimate weights from a CSV dataset, emit a JSON result
  simulate  materialize a scenario JSON into a dataset CSV
  sweep     run a grid sweep study from a study JSON
  bench     run any named study from a study JSON
  control   run the negative-control baseline

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
Identical invocations produce byte-identical output artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import bench
from .core import normalize_minmax, read_dataset_csv, write_dataset_csv
from .errors import EstimationError
from .estimators import ESTIMATOR_KINDS, EstimatorChoice, estimate
from .losses import LossSpec
from .optim import FitConfig
from .synth import Scenario, run_scenario

USAGE_ERROR = 1
NUMERICAL_ERROR = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract reserves 2 for
    # numerical failures, so remap.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _read_json_arg(value: str) -> dict:
    """Accept inline JSON or a path to a JSON file."""
    text = value.strip()
    if not text.startswith("{"):
        text = Path(value).read_text(encoding="utf-8")
    return json.loads(text)


def _dump_json(obj, path: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shufreg", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fit = sub.add_parser("fit", help="estimate weights from a CSV dataset")
    fit.add_argument("--input", required=True, help="dataset CSV path")
    fit.add_argument("--output", help="result JSON path (default: stdout)")
    fit.add_argument("--label-col", default="y", help="label column name")
    fit.add_argument("--replication-col", help="replication id column name")
    fit.add_argument(
        "--estimator", default="auto", help=f"one of {', '.join(ESTIMATOR_KINDS)}"
    )
    fit.add_argument("--loss-spec", help="loss spec as inline JSON or a file path")
    fit.add_argument("--fit-config", help="fit config as inline JSON or a file path")
    fit.add_argument("--seed", type=int, help="override the fit config seed")
    fit.add_argument(
        "--normalize",
        action="store_true",
        help="min-max normalize features and labels before fitting",
    )

    sim = sub.add_parser("simulate", help="materialize a scenario JSON as CSV")
    sim.add_argument("--input", required=True, help="scenario JSON path")
    sim.add_argument("--output", required=True, help="dataset CSV path")
    sim.add_argument("--seed", type=int, help="override the scenario master seed")

    for name, help_text in (
        ("sweep", "run a grid sweep study"),
        ("bench", "run a named study"),
        ("control", "run the negative-control baseline"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--study", required=True, help="study JSON (inline or path)")
        cmd.add_argument("--output", required=True, help="output directory")
        cmd.add_argument("--seed", type=int, help="override the study seed")
    return parser


def _cmd_fit(args) -> int:
    ds = read_dataset_csv(
        args.input, label_col=args.label_col, replication_col=args.replication_col
    )
    if args.normalize:
        ds, _ = normalize_minmax(ds)
    if args.estimator not in ESTIMATOR_KINDS:
        print(
            f"unknown estimator {args.estimator!r}; valid: {', '.join(ESTIMATOR_KINDS)}",
            file=sys.stderr,
        )
        return USAGE_ERROR
    loss_spec = (
        LossSpec.from_dict(_read_json_arg(args.loss_spec)) if args.loss_spec else LossSpec()
    )
    fit_config = (
        FitConfig(**_read_json_arg(args.fit_config)) if args.fit_config else FitConfig()
    )
    if args.seed is not None:
        fit_config = fit_config.with_seed(args.seed)
    choice = EstimatorChoice(kind=args.estimator, loss_spec=loss_spec, fit_config=fit_config)
    result = estimate(ds, choice)
    payload = {
        "weights": [float(v) for v in result.weights],
        "loss": float(result.loss),
        "estimator_resolved": result.diagnostics.get("estimator", args.estimator),
        "diagnostics": {
            **{k: v for k, v in result.diagnostics.items()},
            "start_index": result.start_index,
            "iterations_per_start": list(result.iterations_per_start),
            "converged": [bool(c) for c in result.converged],
        },
    }
    _dump_json(payload, args.output)
    return 0


def _cmd_simulate(args) -> int:
    scenario = Scenario.from_json(Path(args.input).read_text(encoding="utf-8"))
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    ds, w0, sigma = run_scenario(scenario)
    write_dataset_csv(ds, args.output)
    _dump_json({"w0": [float(v) for v in w0], "sigma": float(sigma), "n": ds.n, "d": ds.d}, None)
    return 0


def _cmd_study(args, force_kind: str | None = None) -> int:
    config = _read_json_arg(args.study)
    if force_kind is not None:
        config["kind"] = force_kind
    if args.seed is not None:
        config["seed"] = args.seed
    written = bench.run_study(config, args.output)
    for path in written:
        print(path)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "sweep":
            return _cmd_study(args, force_kind="sweep")
        if args.command == "control":
            return _cmd_study(args, force_kind="negative_control")
        return _cmd_study(args)
    except EstimationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
