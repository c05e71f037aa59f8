"""Experiment harness: estimator comparisons over synthetic grids, replication
curves, noise-adjustment and regularization studies, and the shuffle-and-refit
protocol for real datasets (plus its negative control).

Every study is a pure function of its configuration and master seed: per-cell
and per-trial streams are derived with the package seed discipline, so results
are bit-reproducible regardless of execution order. Study tables are written
as CSV next to a JSON manifest recording the configuration and versions.

The winner of a grid cell is the estimator with the lowest mean relative
error; when the top estimators agree within WINNER_TIE_MARGIN the one that
did the least work wins. Work is counted in loss evaluations rather than wall
clock so that winner maps are reproducible; wall-clock timings are kept in
memory as informational extras only.
"""

from __future__ import annotations

import csv
import itertools
import json
import platform
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import (
    Dataset,
    EvalReport,
    normalize_minmax,
    ols_fit,
    partition_replications,
    read_dataset_csv,
    relative_error,
    shuffle_within_replications,
)
from .errors import EstimationError
from .estimators import EstimatorChoice, estimate
from .losses import LossSpec, gaussian_noise_moments
from .optim import FitConfig
from .rng import derive_seed, spawn_rng
from .synth import GaussianDesignSpec, NoiseSpec, generate_design

WINNER_TIE_MARGIN = 0.02


def make_shuffled_instance(
    n: int,
    d: int,
    w0,
    noise: NoiseSpec,
    seed: int,
    means=1.0,
    stds=1.0,
    R: int = 1,
) -> tuple[Dataset, Dataset, float]:
    """One synthetic instance: Gaussian design, aligned noisy labels, then a
    within-replication shuffle.

    Returns (shuffled, aligned, sigma); the aligned dataset serves as the
    with-ordering reference.
    """
    w0 = np.asarray(w0, dtype=float)
    design = GaussianDesignSpec(
        n=n,
        means=np.broadcast_to(np.atleast_1d(means), (d,)),
        stds=np.broadcast_to(np.atleast_1d(stds), (d,)),
    )
    x = generate_design(design, derive_seed(seed, "design"))
    signal = x @ w0
    sigma = noise.resolve_sigma(w0, signal)
    if sigma > 0:
        e = spawn_rng(seed, "noise").normal(0.0, sigma, n)
    else:
        e = np.zeros(n)
    aligned = Dataset(x, signal + e)
    if R > 1:
        aligned = partition_replications(aligned, R, derive_seed(seed, "partition"))
    shuffled = shuffle_within_replications(aligned, derive_seed(seed, "shuffle"))
    return shuffled, aligned, sigma


@dataclass(frozen=True)
class SweepGrid:
    """Axes and settings of a grid sweep. Cells are the product of
    (n, d, R, noise_db, lambda2) in that nesting order.

    When points_per_replication is set, each cell's n is R times that value
    and n_values is ignored. The lambda2 axis overrides each estimator's
    loss_spec.lambda2 per cell.
    """

    n_values: tuple = (256,)
    d_values: tuple = (1, 2, 3)
    R_values: tuple = (1,)
    noise_db: tuple = (15.0,)
    noise_kind: str = "snr"
    lambda2_values: tuple = (0.0,)
    trials: int = 5
    estimators: tuple = (EstimatorChoice(kind="sm"), EstimatorChoice(kind="p1"))
    seed: int = 0
    means: float = 1.0
    stds: float = 1.0
    points_per_replication: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.noise_kind not in ("snr", "nsr"):
            raise ValueError("noise_kind must be 'snr' or 'nsr'")
        if not self.estimators:
            raise ValueError("at least one estimator is required")
        for name in ("n_values", "d_values", "R_values", "noise_db", "lambda2_values"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")

    @staticmethod
    def from_config(obj: dict) -> "SweepGrid":
        fit_default = (
            FitConfig(**obj["fit"]) if "fit" in obj else FitConfig()
        )
        estimators = []
        for entry in obj.get("estimators", ["sm", "p1"]):
            if isinstance(entry, str):
                estimators.append(EstimatorChoice(kind=entry, fit_config=fit_default))
            else:
                estimators.append(
                    EstimatorChoice(
                        kind=entry["kind"],
                        loss_spec=LossSpec.from_dict(entry.get("loss_spec", {})),
                        fit_config=(
                            FitConfig(**entry["fit"]) if "fit" in entry else fit_default
                        ),
                        projection_dim=entry.get("projection_dim"),
                    )
                )
        return SweepGrid(
            n_values=tuple(obj.get("n_values", [256])),
            d_values=tuple(obj.get("d_values", [1, 2, 3])),
            R_values=tuple(obj.get("R_values", [1])),
            noise_db=tuple(obj.get("noise_db", [15.0])),
            noise_kind=obj.get("noise_kind", "snr"),
            lambda2_values=tuple(obj.get("lambda2_values", [0.0])),
            trials=int(obj.get("trials", 5)),
            estimators=tuple(estimators),
            seed=int(obj.get("seed", 0)),
            means=float(obj.get("means", 1.0)),
            stds=float(obj.get("stds", 1.0)),
            points_per_replication=obj.get("points_per_replication"),
        )


@dataclass
class CellResult:
    """Per-cell comparison: coordinates, per-estimator reports, and the
    winner under the tie rule."""

    coords: dict
    reports: dict  # estimator name -> EvalReport
    failures: dict  # estimator name -> failed trials
    work: dict  # estimator name -> total loss evaluations (deterministic)
    runtime: dict  # estimator name -> seconds, informational only
    winner: str


def _estimator_names(estimators) -> list[str]:
    names, seen = [], {}
    for choice in estimators:
        seen[choice.kind] = seen.get(choice.kind, 0) + 1
        names.append(
            choice.kind if seen[choice.kind] == 1 else f"{choice.kind}{seen[choice.kind]}"
        )
    return names


def _pick_winner(names, reports, failures, work) -> str:
    means = {
        name: reports[name].relative_error
        for name in names
        if reports[name].trials > 0
    }
    if not means:
        return ""
    best = min(means.values())
    contenders = [n for n in names if n in means and means[n] <= best + WINNER_TIE_MARGIN]
    return min(contenders, key=lambda n: (work.get(n, 0), names.index(n)))


def run_sweep(grid: SweepGrid) -> list[CellResult]:
    """Run every estimator on every grid cell.

    Each trial draws w0 ~ N(0, I_d), builds a fresh shuffled instance at the
    cell's noise level, and scores each estimator by relative error against
    w0. The "ols" estimator is special-cased to fit the aligned (unshuffled)
    instance, serving as the with-ordering reference curve. Estimator
    failures are recorded per cell, not raised.
    """
    names = _estimator_names(grid.estimators)
    cells = list(
        itertools.product(
            grid.n_values, grid.d_values, grid.R_values, grid.noise_db, grid.lambda2_values
        )
    )
    results = []
    for ci, (n, d, R, db, lam) in enumerate(cells):
        if grid.points_per_replication is not None:
            n = grid.points_per_replication * R
        noise = NoiseSpec(snr_db=db) if grid.noise_kind == "snr" else NoiseSpec(nsr_db=db)
        errors = {name: [] for name in names}
        failures = {name: 0 for name in names}
        work = {name: 0 for name in names}
        runtime = {name: 0.0 for name in names}
        losses = {name: [] for name in names}
        for t in range(grid.trials):
            w0 = spawn_rng(grid.seed, "cell", ci, "trial", t, "w0").normal(0.0, 1.0, d)
            shuffled, aligned, _ = make_shuffled_instance(
                n, d, w0, noise,
                derive_seed(grid.seed, "cell", ci, "trial", t, "instance"),
                grid.means, grid.stds, R,
            )
            for name, choice in zip(names, grid.estimators):
                t0 = time.perf_counter()
                try:
                    if choice.kind == "ols":
                        w = ols_fit(aligned)
                        evals, loss = 1, float("nan")
                    else:
                        fit_seed = derive_seed(
                            grid.seed, "cell", ci, "trial", t, "fit", name
                        )
                        res = estimate(
                            shuffled,
                            replace(
                                choice,
                                fit_config=choice.fit_config.with_seed(fit_seed),
                                loss_spec=choice.loss_spec.with_lambda2(lam),
                            ),
                        )
                        w = res.weights
                        evals = res.diagnostics.get("loss_evals", 1)
                        loss = res.loss
                    errors[name].append(relative_error(w, w0))
                    losses[name].append(loss)
                    work[name] += evals
                except EstimationError:
                    failures[name] += 1
                runtime[name] += time.perf_counter() - t0
        reports = {
            name: EvalReport(
                name,
                tuple(errors[name]),
                final_loss=float(np.mean(losses[name])) if losses[name] else float("nan"),
            )
            for name in names
        }
        winner = _pick_winner(names, reports, failures, work)
        results.append(
            CellResult(
                coords={"n": n, "d": d, "R": R, "db": db, "lambda2": lam},
                reports=reports,
                failures=failures,
                work=work,
                runtime=runtime,
                winner=winner,
            )
        )
    return results


def sweep_rows(results: list[CellResult]) -> list[dict]:
    """Flatten cell results to CSV-ready rows, one per (cell, estimator)."""
    rows = []
    for cell in results:
        for name, rep in cell.reports.items():
            errs = np.asarray(rep.per_trial_errors, dtype=float)
            rows.append(
                {
                    **cell.coords,
                    "estimator": name,
                    "mean_error": float(errs.mean()) if errs.size else float("nan"),
                    "std_error": float(errs.std()) if errs.size else float("nan"),
                    "min_error": float(errs.min()) if errs.size else float("nan"),
                    "max_error": float(errs.max()) if errs.size else float("nan"),
                    "trials": int(errs.size),
                    "failures": cell.failures[name],
                    "work": cell.work[name],
                    "winner": cell.winner,
                }
            )
    return rows


def _error_stats_row(errs, failures) -> dict:
    errs = np.asarray(errs, dtype=float)
    return {
        "mean_error": float(errs.mean()) if errs.size else float("nan"),
        "std_error": float(errs.std()) if errs.size else float("nan"),
        "min_error": float(errs.min()) if errs.size else float("nan"),
        "max_error": float(errs.max()) if errs.size else float("nan"),
        "trials": int(errs.size),
        "failures": failures,
        "trial_errors": ";".join(repr(float(e)) for e in errs),
    }


REPLICATION_FIT = FitConfig(
    starts=8, step=1e-3, convergence_threshold=1e-5, max_iters=3000
)


def replication_curve(
    d: int,
    n: int,
    nsr_db_values,
    R_values,
    trials: int,
    seed: int,
    fit_config: FitConfig | None = None,
    means=1.0,
    stds=1.0,
) -> list[dict]:
    """Error of the moment estimator as the replication count grows, with n
    held fixed and w0 = (1, ..., 1).

    Instances are paired across R (same design and noise per trial), so the
    curve isolates the effect of the partition.
    """
    cfg = fit_config or REPLICATION_FIT
    w0 = np.ones(d)
    rows = []
    for dbi, db in enumerate(nsr_db_values):
        for R in R_values:
            if R > n:
                raise ValueError(f"R={R} exceeds n={n}")
            errs, fails = [], 0
            for t in range(trials):
                inst_seed = derive_seed(seed, "db", dbi, "trial", t)
                shuffled, _, _ = make_shuffled_instance(
                    n, d, w0, NoiseSpec(nsr_db=db), inst_seed, means, stds, R
                )
                choice = EstimatorChoice(
                    kind="sm",
                    fit_config=cfg.with_seed(
                        derive_seed(seed, "db", dbi, "R", R, "trial", t, "fit")
                    ),
                )
                try:
                    res = estimate(shuffled, choice)
                    errs.append(relative_error(res.weights, w0))
                except EstimationError:
                    fails += 1
            rows.append({"nsr_db": db, "R": R, **_error_stats_row(errs, fails)})
    return rows


def standard_dataset_protocol(
    ds: Dataset,
    R_values,
    trials: int,
    seed: int,
    fit_config: FitConfig | None = None,
    estimator: str = "auto",
    normalize: bool = True,
    dataset_name: str = "dataset",
) -> list[dict]:
    """Shuffle-and-refit protocol for a real dataset.

    The dataset is min-max normalized (unless already), ordinary least
    squares on the ordered labels provides the reference weights, and for
    each R the labels are re-partitioned and shuffled within replications
    before fitting the chosen estimator. Errors are relative to the OLS
    reference.
    """
    cfg = fit_config or FitConfig(
        starts=8, step=0.01, convergence_threshold=1e-6, max_iters=2000
    )
    if normalize:
        ds, _ = normalize_minmax(ds)
    w_ref = ols_fit(ds)
    rows = []
    for R in R_values:
        errs, fails = [], 0
        for t in range(trials):
            part = partition_replications(ds, R, derive_seed(seed, "R", R, "trial", t, "part"))
            shuf = shuffle_within_replications(
                part, derive_seed(seed, "R", R, "trial", t, "shuffle")
            )
            choice = EstimatorChoice(
                kind=estimator,
                fit_config=cfg.with_seed(derive_seed(seed, "R", R, "trial", t, "fit")),
            )
            try:
                res = estimate(shuf, choice)
                errs.append(relative_error(res.weights, w_ref))
            except EstimationError:
                fails += 1
        rows.append({"dataset": dataset_name, "R": R, **_error_stats_row(errs, fails)})
    return rows


def negative_control(
    ds: Dataset,
    R_values,
    trials: int,
    seed: int,
    normalize: bool = True,
    dataset_name: str = "dataset",
) -> list[dict]:
    """Baseline for the dataset protocol: ordinary least squares fit directly
    to the misaligned pairs after the within-replication shuffle.

    High errors across all R confirm that partitioning alone does not
    disambiguate the label order.
    """
    if normalize:
        ds, _ = normalize_minmax(ds)
    w_ref = ols_fit(ds)
    rows = []
    for R in R_values:
        errs, fails = [], 0
        for t in range(trials):
            part = partition_replications(ds, R, derive_seed(seed, "R", R, "trial", t, "part"))
            shuf = shuffle_within_replications(
                part, derive_seed(seed, "R", R, "trial", t, "shuffle")
            )
            try:
                w = ols_fit(shuf)
                errs.append(relative_error(w, w_ref))
            except EstimationError:
                fails += 1
        rows.append({"dataset": dataset_name, "R": R, **_error_stats_row(errs, fails)})
    return rows


def noise_adjustment_study(
    n: int,
    nsr_db_values,
    trials: int,
    seed: int,
    d: int = 2,
    w0=(1.0, -1.0),
    means=1.0,
    stds=1.0,
    fit_config: FitConfig | None = None,
) -> list[dict]:
    """Moment estimator with and without the true noise variance folded into
    the second-moment constraint, across noise levels.

    Both variants see identical instances per trial. Closed-form fallbacks
    (no real roots) are counted per row.
    """
    cfg = fit_config or FitConfig(starts=6, step=0.01, convergence_threshold=1e-7, max_iters=2000)
    w0 = np.asarray(w0, dtype=float)
    rows = []
    for dbi, db in enumerate(nsr_db_values):
        errs = {False: [], True: []}
        fails = {False: 0, True: 0}
        fallbacks = {False: 0, True: 0}
        for t in range(trials):
            shuffled, _, sigma = make_shuffled_instance(
                n, d, w0, NoiseSpec(nsr_db=db),
                derive_seed(seed, "db", dbi, "trial", t), means, stds, 1,
            )
            for adjusted in (False, True):
                nm = gaussian_noise_moments(sigma, d) if adjusted else None
                choice = EstimatorChoice(
                    kind="sm",
                    loss_spec=LossSpec(noise_moments=nm),
                    fit_config=cfg.with_seed(
                        derive_seed(seed, "db", dbi, "trial", t, "fit", int(adjusted))
                    ),
                )
                try:
                    res = estimate(shuffled, choice)
                    if "fallback" in res.diagnostics:
                        fallbacks[adjusted] += 1
                    errs[adjusted].append(relative_error(res.weights, w0))
                except EstimationError:
                    fails[adjusted] += 1
        for adjusted in (False, True):
            rows.append(
                {
                    "nsr_db": db,
                    "adjusted": adjusted,
                    "fallbacks": fallbacks[adjusted],
                    **_error_stats_row(errs[adjusted], fails[adjusted]),
                }
            )
    return rows


def regularization_study(
    n: int,
    sparsity_values,
    lambda2_values,
    trials: int,
    seed: int,
    sigma: float = 0.1,
    means=1.0,
    stds=1.0,
    fit_config: FitConfig | None = None,
) -> list[dict]:
    """Effect of L2 regularization as zero weights are appended.

    The true weights are two ones followed by `sparsity` zeros (d = sparsity
    + 2); the moment estimator runs once per lambda2 on instances paired
    across lambda2 values.
    """
    cfg = fit_config or FitConfig(starts=6, step=1e-3, convergence_threshold=1e-5, max_iters=2000)
    rows = []
    for si, sparsity in enumerate(sparsity_values):
        d = int(sparsity) + 2
        w0 = np.zeros(d)
        w0[:2] = 1.0
        for li, lam in enumerate(lambda2_values):
            errs, fails = [], 0
            for t in range(trials):
                shuffled, _, _ = make_shuffled_instance(
                    n, d, w0, NoiseSpec(sigma=sigma),
                    derive_seed(seed, "sparsity", si, "trial", t), means, stds, 1,
                )
                choice = EstimatorChoice(
                    kind="sm",
                    loss_spec=LossSpec(lambda2=lam),
                    fit_config=cfg.with_seed(
                        derive_seed(seed, "sparsity", si, "lam", li, "trial", t, "fit")
                    ),
                )
                try:
                    res = estimate(shuffled, choice)
                    errs.append(relative_error(res.weights, w0))
                except EstimationError:
                    fails += 1
            rows.append(
                {
                    "sparsity": int(sparsity),
                    "d": d,
                    "lambda2": lam,
                    **_error_stats_row(errs, fails),
                }
            )
    return rows


def _fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_rows_csv(path, rows: list[dict], columns=None) -> None:
    """Write study rows as CSV with deterministic float formatting."""
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt_cell(row.get(c, "")) for c in columns])


def write_manifest(path, config: dict) -> None:
    """Record the study configuration and versions next to its results."""
    from . import __version__

    payload = {
        "config": config,
        "versions": {
            "shufreg": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load_study_dataset(entry: dict) -> tuple[Dataset, str]:
    if "bundled" in entry:
        from . import data

        return data.load(entry["bundled"]), entry["bundled"]
    path = entry["path"]
    ds = read_dataset_csv(
        path,
        label_col=entry.get("label_col", "y"),
        replication_col=entry.get("replication_col"),
    )
    return ds, entry.get("name", Path(path).stem)


def run_study(config: dict, outdir) -> list[Path]:
    """Run the study described by a JSON-style config dict and write its
    results into outdir.

    config["kind"] selects the study: sweep, replication_curve,
    noise_adjustment, regularization, dataset_protocol, or negative_control.
    Writes results.csv and manifest.json, plus <output_name>.csv when the
    config names its table.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    kind = config.get("kind")
    seed = int(config.get("seed", 0))
    trials = int(config.get("trials", 10))

    if kind == "sweep":
        grid = SweepGrid.from_config(config)
        rows = sweep_rows(run_sweep(grid))
    elif kind == "replication_curve":
        rows = replication_curve(
            d=int(config.get("d", 4)),
            n=int(config.get("n", 1000)),
            nsr_db_values=config.get("nsr_db", [-10.0]),
            R_values=config.get("R", [1, 2, 4, 6, 8]),
            trials=trials,
            seed=seed,
            fit_config=FitConfig(**config["fit"]) if "fit" in config else None,
        )
    elif kind == "noise_adjustment":
        rows = noise_adjustment_study(
            n=int(config.get("n", 1000)),
            nsr_db_values=config.get("nsr_db", [-20.0, -10.0, 0.0, 5.0]),
            trials=trials,
            seed=seed,
            w0=config.get("w0", (1.0, -1.0)),
        )
    elif kind == "regularization":
        rows = regularization_study(
            n=int(config.get("n", 1000)),
            sparsity_values=config.get("sparsity", [0, 2, 4, 8]),
            lambda2_values=config.get("lambda2", [0.0, 0.01, 0.1]),
            trials=trials,
            seed=seed,
            sigma=float(config.get("sigma", 0.1)),
            fit_config=FitConfig(**config["fit"]) if "fit" in config else None,
        )
    elif kind in ("dataset_protocol", "negative_control"):
        rows = []
        for entry in config["datasets"]:
            ds, name = _load_study_dataset(entry)
            if kind == "dataset_protocol":
                rows.extend(
                    standard_dataset_protocol(
                        ds,
                        R_values=config.get("R", [1, 2, 4, 6, 8]),
                        trials=trials,
                        seed=derive_seed(seed, "dataset", name),
                        fit_config=FitConfig(**config["fit"]) if "fit" in config else None,
                        dataset_name=name,
                    )
                )
            else:
                rows.extend(
                    negative_control(
                        ds,
                        R_values=config.get("R", [1, 2, 4, 6, 8]),
                        trials=trials,
                        seed=derive_seed(seed, "dataset", name),
                        dataset_name=name,
                    )
                )
    else:
        raise ValueError(f"unknown study kind {kind!r}")

    written = []
    results_csv = outdir / "results.csv"
    write_rows_csv(results_csv, rows)
    written.append(results_csv)
    name = config.get("output_name")
    if name:
        named = outdir / f"{name}.csv"
        write_rows_csv(named, rows)
        written.append(named)
    manifest = outdir / "manifest.json"
    write_manifest(manifest, config)
    written.append(manifest)
    return written
