"""CSV ingestion and standardization for the classification experiments."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

__all__ = ["Dataset", "ingest_iris"]


class DatasetFormatError(ValueError):
    """Raised on malformed rows or wrong column counts."""


@dataclass(frozen=True)
class Dataset:
    """Standardized feature matrix with a stratified train/test split.

    ``features`` are already normalized with the train-split statistics
    stored in ``mean``/``std`` (raw = features * std + mean).
    """

    features: np.ndarray
    labels: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        for name in ("features", "labels", "train_idx", "test_idx", "mean", "std"):
            getattr(self, name).setflags(write=False)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def split(self, which: str):
        idx = self.train_idx if which == "train" else self.test_idx
        return self.features[idx], self.labels[idx]


def _parse_rows(text: str, num_features: int):
    rows = []
    reader = csv.reader(io.StringIO(text))
    for line_no, row in enumerate(reader, start=1):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != num_features + 1:
            raise DatasetFormatError(
                f"line {line_no}: expected {num_features + 1} columns, got {len(row)}"
            )
        try:
            values = [float(v) for v in row[:num_features]]
        except ValueError:
            if line_no == 1:
                continue  # header
            raise DatasetFormatError(f"line {line_no}: non-numeric feature value")
        if not all(np.isfinite(values)):
            raise DatasetFormatError(f"line {line_no}: non-finite feature value")
        rows.append((values, row[num_features].strip()))
    if not rows:
        raise DatasetFormatError("no data rows found")
    return rows


def ingest_iris(
    path, num_features: int = 4, test_fraction: float = 0.2, seed: int = 0
) -> Dataset:
    """Load a CSV of numeric features plus a class column (Iris layout).

    Features are standardized to zero mean and unit variance on the train
    split of a stratified 80/20 split drawn with the given seed.
    """
    with open(path, "r", encoding="utf-8") as fh:
        rows = _parse_rows(fh.read(), num_features)

    X = np.array([r[0] for r in rows])
    names = sorted({r[1] for r in rows})
    name_to_id = {n: k for k, n in enumerate(names)}
    y = np.array([name_to_id[r[1]] for r in rows], dtype=int)

    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for k in range(len(names)):
        members = np.flatnonzero(y == k)
        members = members[rng.permutation(len(members))]
        n_test = max(1, int(round(test_fraction * len(members))))
        test_idx.extend(members[:n_test])
        train_idx.extend(members[n_test:])
    train_idx = np.sort(np.array(train_idx, dtype=int))
    test_idx = np.sort(np.array(test_idx, dtype=int))

    mean = X[train_idx].mean(axis=0)
    std = X[train_idx].std(axis=0)
    std = np.where(std > 0, std, 1.0)  # constant features pass through
    features = (X - mean) / std

    return Dataset(
        features=features,
        labels=y,
        train_idx=train_idx,
        test_idx=test_idx,
        mean=mean,
        std=std,
        class_names=tuple(names),
    )
