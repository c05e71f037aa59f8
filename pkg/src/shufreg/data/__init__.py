"""Bundled synthetic datasets for the dataset protocol and its negative
control. Each file is already min-max normalized, starts with a bias column
identically one, and has an ordered-fit R^2 of at least 0.9. Regenerate with
scripts/make_datasets.py.
"""

from __future__ import annotations

from importlib import resources

from ..core import Dataset, read_dataset_csv

NAMES = ("synthetic_d4_n100", "synthetic_d5_n200", "synthetic_d6_n400")


def dataset_path(name: str):
    if name not in NAMES:
        raise ValueError(f"unknown bundled dataset {name!r}; available: {NAMES}")
    return resources.files(__package__).joinpath(f"{name}.csv")


def load(name: str) -> Dataset:
    with resources.as_file(dataset_path(name)) as path:
        return read_dataset_csv(path, label_col="y")
