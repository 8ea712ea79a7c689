"""Tabular datasets with a binary outcome: CSV loading, validation, splitting.

No standardization or imputation happens here; downstream diagnostics (VIF,
coefficients) are computed on the raw feature values.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

# Minimum rows-per-feature required when loading a full dataset; guards
# against degenerate fits. Split outputs only need d+1 rows each.
MIN_ROWS_PER_DIM = 10


@dataclass(frozen=True)
class Dataset:
    """Immutable named feature matrix with a {0,1} outcome vector."""

    variable_names: tuple[str, ...]
    features: np.ndarray
    outcome: np.ndarray

    def __post_init__(self):
        names = tuple(str(v) for v in self.variable_names)
        X = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        y = np.ascontiguousarray(np.asarray(self.outcome, dtype=np.float64))
        if X.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError("outcome length must match the number of feature rows")
        if X.shape[1] < 2:
            raise DataError("at least 2 variables are required")
        if len(names) != X.shape[1]:
            raise DataError("variable_names length must match feature columns")
        if any(n == "" for n in names):
            raise DataError("variable names must be nonempty")
        if len(set(names)) != len(names):
            raise DataError("variable names must be unique")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain missing or non-finite values")
        bad = np.flatnonzero((y != 0.0) & (y != 1.0))
        if bad.size:
            raise DataError(
                "outcome must be 0/1; offending rows (0-based): "
                + ", ".join(str(i) for i in bad[:20])
            )
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "variable_names", names)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "outcome", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(self.variable_names, self.features[rows], self.outcome[rows])


@dataclass(frozen=True)
class SplitSpec:
    """Train fraction plus the seed that fixes the row permutation."""

    train_fraction: float
    seed: int

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise ConfigError("train_fraction must lie strictly between 0 and 1")
        if int(self.seed) < 0:
            raise ConfigError("seed must be a nonnegative integer")
        object.__setattr__(self, "seed", int(self.seed))


def load_csv(path, outcome_column: str, enforce_size: bool = True) -> Dataset:
    """Load a comma-separated file with a header row into a Dataset.

    The outcome column is removed from the feature matrix; feature column
    order is preserved. Errors name the offending row/column. enforce_size
    applies the 10*d row minimum; intermediate split files skip it.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty, expected a header row")
        rows = list(reader)

    if outcome_column not in header:
        raise DataError(
            f"{path}: outcome column {outcome_column!r} not found; "
            f"available columns: {', '.join(header)}"
        )
    out_idx = header.index(outcome_column)
    names = tuple(h for i, h in enumerate(header) if i != out_idx)

    n = len(rows)
    values = np.empty((n, len(header)), dtype=np.float64)
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(
                f"{path}: row {r + 2} has {len(row)} cells, expected {len(header)}"
            )
        for c, cell in enumerate(row):
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: cannot parse cell at row {r + 2}, "
                    f"column {header[c]!r}: {cell!r}"
                ) from None

    y = values[:, out_idx]
    bad = np.flatnonzero((y != 0.0) & (y != 1.0))
    if bad.size:
        listed = ", ".join(str(i + 2) for i in bad[:20])
        raise DataError(
            f"{path}: outcome column {outcome_column!r} must contain only 0/1; "
            f"offending rows: {listed}"
        )

    feat_cols = [i for i in range(len(header)) if i != out_idx]
    X = values[:, feat_cols]
    d = X.shape[1]
    if enforce_size and n < MIN_ROWS_PER_DIM * d:
        raise DataError(
            f"{path}: need at least {MIN_ROWS_PER_DIM}*d = {MIN_ROWS_PER_DIM * d} "
            f"rows for d={d} variables, got {n}"
        )
    return Dataset(names, X, y)


def write_csv(dataset: Dataset, path, outcome_column: str = "outcome") -> None:
    """Write a Dataset back to CSV; reloading yields bit-identical matrices."""
    if outcome_column in dataset.variable_names:
        raise DataError(f"outcome column name {outcome_column!r} collides with a feature")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.variable_names) + [outcome_column])
        for i in range(dataset.n):
            row = [repr(float(v)) for v in dataset.features[i]]
            row.append(str(int(dataset.outcome[i])))
            writer.writerow(row)


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Deterministic train/test partition; train size is round-half-up of f*n."""
    n = dataset.n
    n_train = int(math.floor(spec.train_fraction * n + 0.5))
    n_test = n - n_train
    min_rows = dataset.d + 1
    if n_train < min_rows or n_test < min_rows:
        raise DataError(
            f"split of n={n} at fraction {spec.train_fraction} leaves "
            f"train={n_train}, test={n_test}; both need at least d+1={min_rows} rows"
        )
    perm = np.random.default_rng(spec.seed).permutation(n)
    train_rows = np.sort(perm[:n_train])
    test_rows = np.sort(perm[n_train:])
    return dataset.subset(train_rows), dataset.subset(test_rows)
