"""Dataset ingestion, preprocessing, splitting protocols, and synthetic
generators.

Preprocessing follows the usual tabular recipe: a per-feature quantile
transform onto a standard normal (fit on training rows only), followed
by standardization with training statistics.  Splitting covers the
10k/10k subsampling rule (halves below 20k rows) and the 80/20
class-ratio split used for merging experiments.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtri

PREPROCESS_FORMAT_VERSION = 1


@dataclass
class Dataset:
    features: np.ndarray  # (N, F) float64
    labels: np.ndarray  # (N,) int64
    feature_names: list[str] = field(default_factory=list)
    provenance: str = ""
    classes_override: int | None = None

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must align with feature rows")
        if self.features.shape[0] < 1:
            raise ValueError("dataset must contain at least one row")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain NaN or Inf")
        if self.labels.min() < 0:
            raise ValueError("labels must be nonnegative class indices")
        if self.classes_override is not None and self.classes_override <= self.labels.max():
            raise ValueError("explicit class count is smaller than the largest label")
        if not self.feature_names:
            self.feature_names = [f"x{i}" for i in range(self.features.shape[1])]

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        """max label + 1, unless an explicit count was given at load time."""
        if self.classes_override is not None:
            return self.classes_override
        return int(self.labels.max()) + 1

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.features[idx],
            self.labels[idx],
            list(self.feature_names),
            self.provenance,
            self.classes_override,
        )


def load_csv(path, classes: int | None = None) -> Dataset:
    """Read a dataset from CSV: a header row, float feature columns, and
    a final integer column named "label"."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        if not header or header[-1] != "label":
            raise ValueError(f"{path}: final column must be named 'label'")
        n_cols = len(header)
        features, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != n_cols:
                raise ValueError(f"{path}:{line_no}: expected {n_cols} columns, got {len(row)}")
            try:
                features.append([float(v) for v in row[:-1]])
            except ValueError:
                raise ValueError(f"{path}:{line_no}: non-numeric feature value") from None
            try:
                labels.append(int(row[-1]))
            except ValueError:
                raise ValueError(f"{path}:{line_no}: label must be an integer") from None
    return Dataset(
        np.array(features, dtype=np.float64),
        np.array(labels, dtype=np.int64),
        header[:-1],
        provenance=str(path),
        classes_override=classes,
    )


def save_csv(dataset: Dataset, path) -> None:
    """Write a dataset back out; float formatting round-trips exactly."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.feature_names) + ["label"])
        for row, label in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


@dataclass
class QuantileTransform:
    """Per-feature monotone map onto an (approximately) standard normal.

    A value is ranked against the sorted training references with the
    plotting position (i+1)/(n+1), linearly interpolated and clamped to
    [1/(n+1), n/(n+1)], pushed through the normal quantile function, and
    finally standardized with training statistics.  Features that are
    constant on the training data map to all-zeros.
    """

    references: list[np.ndarray]
    means: np.ndarray
    stds: np.ndarray
    constant: np.ndarray

    def apply(self, dataset: Dataset) -> Dataset:
        X = dataset.features
        if X.shape[1] != len(self.references):
            raise ValueError("feature count differs from the fitted transform")
        out = np.empty_like(X)
        for f in range(X.shape[1]):
            if self.constant[f]:
                out[:, f] = 0.0
                continue
            refs = self.references[f]
            n = refs.shape[0]
            positions = np.arange(1, n + 1) / (n + 1)
            p = np.interp(X[:, f], refs, positions)
            out[:, f] = (ndtri(p) - self.means[f]) / self.stds[f]
        return Dataset(out, dataset.labels, list(dataset.feature_names), dataset.provenance)


def fit_quantile_transform(train: Dataset) -> QuantileTransform:
    """Fit on training rows only; applying never consults other data."""
    X = train.features
    n_features = X.shape[1]
    references, means, stds = [], np.zeros(n_features), np.ones(n_features)
    constant = np.zeros(n_features, dtype=bool)
    for f in range(n_features):
        refs = np.sort(X[:, f])
        references.append(refs)
        if refs[0] == refs[-1]:
            constant[f] = True
            continue
        n = refs.shape[0]
        # stats are taken through the map itself so duplicate values
        # (which collapse ranks under interpolation) are handled the same
        # way at fit and apply time
        positions = np.interp(refs, refs, np.arange(1, n + 1) / (n + 1))
        transformed = ndtri(positions)
        means[f] = transformed.mean()
        std = transformed.std()
        if std == 0.0:
            constant[f] = True
            continue
        stds[f] = std
    return QuantileTransform(references, means, stds, constant)


def subsample_protocol(full: Dataset, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint train/test draw: 10,000 rows each when the dataset has at
    least 20,000 rows, otherwise a random split into halves."""
    n = full.n_rows
    if n < 2:
        raise ValueError("need at least two rows to split")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5B5A]))
    order = rng.permutation(n)
    if n >= 20_000:
        train_idx, test_idx = order[:10_000], order[10_000:20_000]
    else:
        train_idx, test_idx = order[: n // 2], order[n // 2 :]
    return full.subset(np.sort(train_idx)), full.subset(np.sort(test_idx))


def class_ratio_split(train: Dataset, seed: int) -> tuple[Dataset, Dataset]:
    """Binary-label 80/20 split: the first part takes 80% of the negative
    and 20% of the positive rows, the second part the complements.  The
    outcome depends only on the data and this seed, never on training
    seeds."""
    labels = train.labels
    if not set(np.unique(labels)) <= {0, 1}:
        raise ValueError("class-ratio split requires binary labels {0, 1}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x8020]))
    neg = np.flatnonzero(labels == 0)
    pos = np.flatnonzero(labels == 1)
    neg = neg[rng.permutation(neg.shape[0])]
    pos = pos[rng.permutation(pos.shape[0])]
    n_neg_first = int(round(0.8 * neg.shape[0]))
    n_pos_first = int(round(0.2 * pos.shape[0]))
    first = np.sort(np.concatenate([neg[:n_neg_first], pos[:n_pos_first]]))
    second = np.sort(np.concatenate([neg[n_neg_first:], pos[n_pos_first:]]))
    return train.subset(first), train.subset(second)


def synth_gaussian_blobs(
    n: int, features: int, classes: int, separation: float, seed: int
) -> Dataset:
    """Balanced Gaussian blobs with unit noise around class centers laid
    out `separation` apart along the coordinate axes."""
    if n < classes:
        raise ValueError("need at least one row per class")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xB10B]))
    centers = np.zeros((classes, features))
    for c in range(classes):
        axis = c % features
        centers[c, axis] = separation * (1 + c // features) * (1 if (c // features) % 2 == 0 else -1)
    counts = np.full(classes, n // classes)
    counts[: n % classes] += 1
    labels = np.repeat(np.arange(classes), counts)
    X = rng.normal(size=(n, features)) + centers[labels]
    order = rng.permutation(n)
    return Dataset(
        X[order],
        labels[order],
        provenance=f"blobs(n={n},F={features},C={classes},sep={separation},seed={seed})",
    )


def write_preprocessed_cache(
    out_dir, train: Dataset, test: Dataset, qt: QuantileTransform, seeds: dict
) -> None:
    """Persist preprocessed splits plus a sidecar describing the fitted
    transform and the seeds that produced the splits."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_csv(train, out_dir / "train.csv")
    save_csv(test, out_dir / "test.csv")
    sidecar = {
        "format_version": PREPROCESS_FORMAT_VERSION,
        "seeds": seeds,
        "transform": {
            "references": [r.tolist() for r in qt.references],
            "means": qt.means.tolist(),
            "stds": qt.stds.tolist(),
            "constant": qt.constant.astype(int).tolist(),
        },
    }
    (out_dir / "preprocess.json").write_text(json.dumps(sidecar), encoding="utf-8")
