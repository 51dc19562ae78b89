"""CSV ingestion, train/validation splitting, and feature standardization.

The CSV dialect is plain: UTF-8, comma-separated, first row is the header,
floats with a decimal point, no quoting.  Leading lines starting with ``#``
are provenance comments and are skipped on load.  Labels must be exactly
``0`` or ``1`` (no coercion); missing or non-numeric cells are errors, not
imputation targets.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .rng import Rng


class CsvFormatError(ValueError):
    """Raised for malformed dataset files; the message names row and column."""


@dataclass
class DatasetTable:
    """Named numeric feature columns plus binary flag labels, row-major.

    ``labels`` holds the ground-truth flag (1 = flagged account) for each
    row of ``features``.  ``row_ids`` are opaque strings carried through
    splits and projections; they are optional.
    """

    feature_names: list[str]
    features: np.ndarray  # (rows, cols) float64
    labels: np.ndarray  # (rows,) of {0, 1}
    row_ids: list[str] | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.features.shape}")
        if len(self.feature_names) != self.features.shape[1]:
            raise ValueError(
                f"{len(self.feature_names)} feature names for "
                f"{self.features.shape[1]} feature columns"
            )
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("feature names must be unique")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError(
                f"labels shape {self.labels.shape} does not match "
                f"{self.features.shape[0]} rows"
            )
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        self.labels = self.labels.astype(np.int64)
        if self.row_ids is not None and len(self.row_ids) != self.features.shape[0]:
            raise ValueError("row_ids length does not match row count")

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> tuple[int, int]:
        """(negative, positive) row counts."""
        pos = int(self.labels.sum())
        return self.n_rows - pos, pos

    def take_rows(self, indices: np.ndarray) -> "DatasetTable":
        ids = [self.row_ids[i] for i in indices] if self.row_ids is not None else None
        return DatasetTable(
            feature_names=list(self.feature_names),
            features=self.features[indices],
            labels=self.labels[indices],
            row_ids=ids,
        )


@dataclass
class StandardizeStats:
    """Per-feature training mean and population standard deviation."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ValueError("mean/std must be equal-length vectors")
        if (self.std < 0).any():
            raise ValueError("std must be >= 0")


def csv_header(path: str | Path) -> list[str]:
    """The header row of a dataset CSV (comment lines skipped)."""
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if row and row[0].startswith("#"):
                continue
            return [h.strip() for h in row]
    raise CsvFormatError(f"{path}: empty file")


def load_csv(
    path: str | Path,
    label_column: str,
    exclude_columns: Sequence[str] = (),
) -> DatasetTable:
    """Load a dataset CSV, dropping excluded columns and parsing the rest.

    Row numbers in error messages are 1-based file lines (the header of a
    comment-free file is row 1).
    """
    path = Path(path)
    exclude = set(exclude_columns)
    with open(path, newline="", encoding="utf-8") as fh:
        line_no = 0
        reader = csv.reader(fh)
        header = None
        for row in reader:
            line_no += 1
            if row and row[0].startswith("#"):
                continue  # provenance comment
            header = row
            break
        if header is None:
            raise CsvFormatError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if label_column not in header:
            raise CsvFormatError(f"{path}: label column {label_column!r} not in header")
        unknown = exclude - set(header)
        if unknown:
            raise CsvFormatError(f"{path}: excluded columns not in header: {sorted(unknown)}")
        label_idx = header.index(label_column)
        keep = [
            i
            for i, name in enumerate(header)
            if i != label_idx and name not in exclude
        ]
        names = [header[i] for i in keep]
        rows: list[list[float]] = []
        labels: list[int] = []
        for row in reader:
            line_no += 1
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise CsvFormatError(
                    f"{path}: row {line_no} has {len(row)} cells, expected {len(header)}"
                )
            token = row[label_idx].strip()
            if token not in ("0", "1"):
                raise CsvFormatError(
                    f"{path}: row {line_no}, column {label_column!r}: "
                    f"label must be 0 or 1, got {token!r}"
                )
            labels.append(int(token))
            parsed = []
            for i in keep:
                cell = row[i].strip()
                try:
                    value = float(cell)
                except ValueError:
                    raise CsvFormatError(
                        f"{path}: row {line_no}, column {header[i]!r}: "
                        f"non-numeric value {cell!r}"
                    ) from None
                if cell == "" or not np.isfinite(value):
                    raise CsvFormatError(
                        f"{path}: row {line_no}, column {header[i]!r}: "
                        f"missing or non-finite value {cell!r}"
                    )
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    return DatasetTable(
        feature_names=names,
        features=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
    )


def save_csv(
    table: DatasetTable,
    path: str | Path,
    label_column: str = "flag",
    extra_columns: dict[str, Iterable[str]] | None = None,
    provenance: Sequence[str] = (),
) -> None:
    """Write a table in the dialect :func:`load_csv` reads.

    Floats are written with ``repr`` so a load/save/load round trip is
    value-exact.  ``extra_columns`` (e.g. reason codes) are appended after
    the label column; ``provenance`` lines are emitted as leading ``#``
    comments.
    """
    path = Path(path)
    extras = extra_columns or {}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in provenance:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(table.feature_names) + [label_column] + list(extras))
        extra_cols = [list(v) for v in extras.values()]
        for i in range(table.n_rows):
            row = [repr(float(v)) for v in table.features[i]]
            row.append(str(int(table.labels[i])))
            row.extend(col[i] for col in extra_cols)
            writer.writerow(row)


def round_half_up(x: float) -> int:
    """Round to nearest integer with halves going up (not banker's)."""
    return int(np.floor(x + 0.5))


def split_train_valid(
    table: DatasetTable, valid_fraction: float, rng: Rng
) -> tuple[DatasetTable, DatasetTable]:
    """Random disjoint train/validation split via a seeded shuffle.

    The validation set gets ``round_half_up(rows * valid_fraction)`` rows.
    Row order inside each part follows the original table, so the split is
    fully determined by (table, fraction, seed).
    """
    if not 0.0 < valid_fraction < 1.0:
        raise ValueError(f"valid_fraction must be in (0, 1), got {valid_fraction}")
    if table.n_rows == 0:
        raise ValueError("cannot split an empty table")
    n_valid = round_half_up(table.n_rows * valid_fraction)
    perm = rng.permutation(table.n_rows)
    valid_idx = np.sort(perm[:n_valid])
    train_idx = np.sort(perm[n_valid:])
    return table.take_rows(train_idx), table.take_rows(valid_idx)


def standardize(
    train: DatasetTable, others: Sequence[DatasetTable] = ()
) -> tuple[DatasetTable, list[DatasetTable], StandardizeStats]:
    """Z-score all tables using the training split's statistics.

    Uses the population standard deviation.  Constant training features
    (std 0) map to all-zeros everywhere, so no division blows up and the
    column carries no information, which is what it had.
    """
    if train.n_rows == 0:
        raise ValueError("cannot standardize an empty training table")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)  # population (ddof=0)
    stats = StandardizeStats(mean=mean, std=std)
    out_train = apply_standardize(train, stats)
    out_others = [apply_standardize(t, stats) for t in others]
    return out_train, out_others, stats


def apply_standardize(table: DatasetTable, stats: StandardizeStats) -> DatasetTable:
    """Apply previously computed standardization stats to a table."""
    if stats.mean.shape[0] != table.n_features:
        raise ValueError(
            f"stats cover {stats.mean.shape[0]} features, table has {table.n_features}"
        )
    safe = np.where(stats.std == 0.0, 1.0, stats.std)
    scaled = (table.features - stats.mean) / safe
    scaled[:, stats.std == 0.0] = 0.0
    return DatasetTable(
        feature_names=list(table.feature_names),
        features=scaled,
        labels=table.labels.copy(),
        row_ids=list(table.row_ids) if table.row_ids is not None else None,
    )
