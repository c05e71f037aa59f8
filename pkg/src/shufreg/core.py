"""Data model, dataset transformations, and evaluation metrics.

A Dataset couples an (n, d) feature matrix with n labels and a replication
assignment. Within a replication the correspondence between rows and labels
is unknown; across replications it is aligned. All transformations return new
Dataset values; arrays are defensively copied and frozen.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import CsvFormatError, SingularSystemError
from .rng import spawn_rng

# Columns whose range is below this are treated as constant (e.g. a bias
# column of ones) and pass through normalization untouched.
CONSTANT_COLUMN_TOL = 1e-12


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Dataset:
    """Immutable regression dataset with an optional replication structure.

    features: (n, d) real matrix, rows are samples. A column identically equal
        to one may serve as a bias term.
    labels: (n,) real vector. Label order is only meaningful within a
        replication.
    replication_ids: (n,) ints in [0, R); every id in that range occurs at
        least once. Defaults to a single replication.
    """

    features: np.ndarray
    labels: np.ndarray
    replication_ids: np.ndarray = None

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        if x.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {x.shape}")
        n = x.shape[0]
        if n < 1:
            raise ValueError("dataset needs at least one sample")
        y = np.asarray(self.labels, dtype=float)
        if y.shape != (n,):
            raise ValueError(
                f"labels must have shape ({n},), got {y.shape}"
            )
        if self.replication_ids is None:
            rep = np.zeros(n, dtype=np.int64)
        else:
            rep = np.asarray(self.replication_ids)
            if rep.shape != (n,):
                raise ValueError(
                    f"replication_ids must have shape ({n},), got {rep.shape}"
                )
            if not np.issubdtype(rep.dtype, np.integer):
                raise ValueError("replication_ids must be integers")
            rep = rep.astype(np.int64)
        if not np.all(np.isfinite(x)):
            raise ValueError("features contain NaN or Inf")
        if not np.all(np.isfinite(y)):
            raise ValueError("labels contain NaN or Inf")
        if rep.min() != 0 or not np.array_equal(
            np.unique(rep), np.arange(rep.max() + 1)
        ):
            raise ValueError("replication ids must cover 0..R-1, each at least once")
        object.__setattr__(self, "features", _frozen(x))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "replication_ids", _frozen(rep, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def R(self) -> int:
        return int(self.replication_ids.max()) + 1

    def replication_indices(self) -> list[np.ndarray]:
        """Index arrays of each replication, in replication-id order."""
        return [np.flatnonzero(self.replication_ids == r) for r in range(self.R)]

    def with_labels(self, labels) -> "Dataset":
        return Dataset(self.features, labels, self.replication_ids)

    def with_replication_ids(self, replication_ids) -> "Dataset":
        return Dataset(self.features, self.labels, replication_ids)


@dataclass(frozen=True)
class EvalReport:
    """Per-estimator evaluation summary over repeated trials."""

    estimator: str
    per_trial_errors: tuple
    final_loss: float = float("nan")

    @property
    def relative_error(self) -> float:
        return float(np.mean(self.per_trial_errors))

    @property
    def trials(self) -> int:
        return len(self.per_trial_errors)


@dataclass(frozen=True)
class Normalization:
    """Affine column maps used by normalize_minmax, kept so results can be
    mapped back to the original scale: normalized = (value - offset) / scale.
    Constant columns get offset 0, scale 1 (identity).
    """

    feature_offset: np.ndarray
    feature_scale: np.ndarray
    label_offset: float
    label_scale: float

    def apply(self, ds: Dataset) -> Dataset:
        x = (ds.features - self.feature_offset) / self.feature_scale
        y = (ds.labels - self.label_offset) / self.label_scale
        return Dataset(x, y, ds.replication_ids)

    def invert(self, ds: Dataset) -> Dataset:
        x = ds.features * self.feature_scale + self.feature_offset
        y = ds.labels * self.label_scale + self.label_offset
        return Dataset(x, y, ds.replication_ids)


def normalize_minmax(ds: Dataset) -> tuple[Dataset, Normalization]:
    """Map labels and each non-constant feature column affinely onto [0, 1].

    Constant columns (range below CONSTANT_COLUMN_TOL, e.g. a bias column)
    are returned unchanged. Requires n >= 2. Idempotent.
    """
    if ds.n < 2:
        raise ValueError("normalization needs at least two samples")
    x = ds.features
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    span = hi - lo
    const = span < CONSTANT_COLUMN_TOL
    offset = np.where(const, 0.0, lo)
    scale = np.where(const, 1.0, span)
    y_lo, y_hi = ds.labels.min(), ds.labels.max()
    if y_hi - y_lo < CONSTANT_COLUMN_TOL:
        y_off, y_scale = 0.0, 1.0
    else:
        y_off, y_scale = float(y_lo), float(y_hi - y_lo)
    norm = Normalization(_frozen(offset), _frozen(scale), y_off, y_scale)
    return norm.apply(ds), norm


def partition_replications(ds: Dataset, R: int, seed: int) -> Dataset:
    """Assign replication ids uniformly at random with sizes balanced to
    within one. Deterministic given seed."""
    if not 1 <= R <= ds.n:
        raise ValueError(f"R must be in [1, {ds.n}], got {R}")
    base, extra = divmod(ds.n, R)
    sizes = np.full(R, base, dtype=np.int64)
    sizes[:extra] += 1
    ids = np.repeat(np.arange(R, dtype=np.int64), sizes)
    rng = spawn_rng(seed, "partition")
    return ds.with_replication_ids(rng.permutation(ids))


def shuffle_within_replications(ds: Dataset, seed: int) -> Dataset:
    """Permute labels by a uniformly random permutation that maps each
    replication's index set onto itself. Features untouched."""
    rng = spawn_rng(seed, "shuffle")
    labels = ds.labels.copy()
    for idx in ds.replication_indices():
        labels[idx] = labels[rng.permutation(idx)]
    return ds.with_labels(labels)


def relative_error(w_hat, w_ref) -> float:
    """L2 distance between weight vectors, relative to the reference norm."""
    w_hat = np.asarray(w_hat, dtype=float)
    w_ref = np.asarray(w_ref, dtype=float)
    if w_hat.shape != w_ref.shape:
        raise ValueError(f"shape mismatch: {w_hat.shape} vs {w_ref.shape}")
    ref_norm = float(np.linalg.norm(w_ref))
    if ref_norm == 0.0:
        raise ValueError("reference weights have zero norm")
    return float(np.linalg.norm(w_hat - w_ref) / ref_norm)


def ols_fit(ds: Dataset) -> np.ndarray:
    """Ordinary least squares on the dataset as ordered (no permutation
    search). Raises SingularSystemError on rank-deficient features."""
    w, _, rank, _ = np.linalg.lstsq(ds.features, ds.labels, rcond=None)
    if rank < ds.d:
        raise SingularSystemError(
            f"features have rank {rank} < {ds.d}; cannot solve least squares"
        )
    return w


def read_dataset_csv(
    path,
    label_col: str,
    replication_col: str | None = None,
    feature_cols: list[str] | None = None,
) -> Dataset:
    """Read a dataset from a headered CSV file.

    All columns except the label column and the optional replication column
    are treated as features unless feature_cols narrows the selection.
    Values use '.' as the decimal separator; files are UTF-8.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_col not in header:
            raise CsvFormatError(f"{path}: no column named {label_col!r} in header")
        if replication_col is not None and replication_col not in header:
            raise CsvFormatError(
                f"{path}: no column named {replication_col!r} in header"
            )
        if feature_cols is None:
            feature_cols = [
                h for h in header if h != label_col and h != replication_col
            ]
        for name in feature_cols:
            if name not in header:
                raise CsvFormatError(f"{path}: no column named {name!r} in header")
        if not feature_cols:
            raise CsvFormatError(f"{path}: no feature columns left")
        col_of = {name: header.index(name) for name in header}
        feats, labels, reps = [], [], []
        for rownum, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise CsvFormatError(
                    f"{path}: row {rownum} has {len(row)} fields, expected {len(header)}"
                )

            def parse(name, cast=float):
                raw = row[col_of[name]].strip()
                try:
                    return cast(raw)
                except ValueError:
                    raise CsvFormatError(
                        f"{path}: row {rownum}, column {name!r}: "
                        f"cannot parse {raw!r}"
                    ) from None

            feats.append([parse(name) for name in feature_cols])
            labels.append(parse(label_col))
            if replication_col is not None:
                reps.append(parse(replication_col, cast=lambda s: int(float(s))))
    if not feats:
        raise CsvFormatError(f"{path}: no data rows")
    rep_arr = np.asarray(reps, dtype=np.int64) if replication_col else None
    return Dataset(np.asarray(feats), np.asarray(labels), rep_arr)


def write_dataset_csv(
    ds: Dataset,
    path,
    feature_names: list[str] | None = None,
    label_name: str = "y",
    replication_name: str = "rep",
    include_replications: bool | None = None,
) -> None:
    """Write a dataset to CSV in the same dialect read_dataset_csv accepts.

    Floats are written with shortest round-trip repr, so a write/read
    round-trip reproduces the dataset exactly. The replication column is
    included when R > 1 unless include_replications overrides.
    """
    if feature_names is None:
        feature_names = [f"x{i}" for i in range(ds.d)]
    if len(feature_names) != ds.d:
        raise ValueError(f"need {ds.d} feature names, got {len(feature_names)}")
    if include_replications is None:
        include_replications = ds.R > 1
    header = list(feature_names) + [label_name]
    if include_replications:
        header.append(replication_name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.features[i]]
            row.append(repr(float(ds.labels[i])))
            if include_replications:
                row.append(str(int(ds.replication_ids[i])))
            writer.writerow(row)
