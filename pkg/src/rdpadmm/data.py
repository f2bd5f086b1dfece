"""Datasets: CSV loading, preprocessing, the correlated-Gaussian synthetic
generator, and k-fold splitting."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class PreprocessRecord:
    col_min: tuple[float, ...]
    col_max: tuple[float, ...]
    intercept: bool
    row_cap: float = 1.0


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = ()
    record: PreprocessRecord | None = None
    relevant: tuple[int, ...] | None = None  # known support, synthetic data only

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        if X.ndim != 2:
            raise DataError("features must be a 2-d array")
        if y.shape != (X.shape[0],):
            raise DataError(f"expected {X.shape[0]} labels, got {y.shape}")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise DataError("labels must be -1 or +1")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        if not self.feature_names:
            object.__setattr__(self, "feature_names", tuple(f"f{j}" for j in range(X.shape[1])))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.n

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return replace(self, features=self.features[idx], labels=self.labels[idx])


def _parse_label(cell: str, row: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"row {row}: label {cell!r} is not numeric") from None
    if value not in (-1.0, 0.0, 1.0):
        raise DataError(f"row {row}: label {cell!r} is not one of -1, 0, 1")
    return value


def load_csv(path, label_column: int | str = -1, has_header: bool = False) -> Dataset:
    """Read a numeric CSV.  Labels in {0, 1} are remapped to {-1, +1}.

    ``label_column`` is an index (negative counts from the end) or, with a
    header row, a column name.  Row numbers in errors are 1-based file lines.
    """
    with open(path, newline="") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: empty file")
    names = None
    if has_header:
        names = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: header but no data rows")
    width = len(rows[0][1])
    if names is not None and len(names) != width:
        raise DataError(f"{path}: header has {len(names)} columns, data has {width}")
    if isinstance(label_column, str):
        if names is None or label_column not in names:
            raise DataError(f"label column {label_column!r} not found")
        label_column = names.index(label_column)
    if not -width <= label_column < width:
        raise DataError(f"label column {label_column} out of range for {width} columns")
    label_column %= width

    feats, labels = [], []
    for lineno, row in rows:
        if len(row) != width:
            raise DataError(f"{path}: row {lineno} has {len(row)} columns, expected {width}")
        values = []
        for j, cell in enumerate(row):
            if j == label_column:
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise DataError(f"{path}: row {lineno}, column {j + 1}: {cell!r} is not numeric") from None
        feats.append(values)
        labels.append(_parse_label(row[label_column], lineno))

    y = np.asarray(labels)
    if np.any(y == 0.0):
        if np.any(y == -1.0):
            raise DataError("labels mix 0 and -1")
        y = np.where(y == 0.0, -1.0, 1.0)
    fnames = tuple(n for j, n in enumerate(names) if j != label_column) if names else ()
    return Dataset(np.asarray(feats, dtype=float).reshape(len(feats), width - 1), y, fnames)


def save_csv(data: Dataset, path, metadata: dict | None = None) -> None:
    """Write features and label (last column) with a header; optional JSON
    sidecar at ``<path>.meta.json``."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(data.feature_names) + ["label"])
        for s, l in zip(data.features, data.labels):
            w.writerow([repr(float(v)) for v in s] + [int(l)])
    if metadata is not None:
        Path(str(path) + ".meta.json").write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n")


def preprocess(raw: Dataset, add_intercept: bool = True) -> Dataset:
    """Min-max scale columns to [0, 1], optionally append an intercept of
    ones, then shrink any row with L2 norm above 1 onto the unit sphere.

    Constant columns map to 0.  Data that already carries a preprocessing
    record is returned unchanged, so the transform is idempotent.
    """
    if raw.record is not None:
        return raw
    X = raw.features
    lo = X.min(axis=0) if raw.n else np.zeros(raw.p)
    hi = X.max(axis=0) if raw.n else np.zeros(raw.p)
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    Z = np.where(span > 0, (X - lo) / safe, 0.0)
    names = raw.feature_names
    if add_intercept:
        Z = np.hstack([Z, np.ones((raw.n, 1))])
        names = names + ("intercept",)
    norms = np.linalg.norm(Z, axis=1, keepdims=True)
    Z = np.where(norms > 1.0, Z / np.maximum(norms, 1.0), Z)
    # float round-off can leave a scaled row a hair above 1
    over = np.linalg.norm(Z, axis=1) > 1.0
    if np.any(over):
        Z[over] /= np.nextafter(np.linalg.norm(Z[over], axis=1, keepdims=True), np.inf)
    record = PreprocessRecord(tuple(lo.tolist()), tuple(hi.tolist()), add_intercept)
    return replace(raw, features=Z, feature_names=names, record=record)


@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 40_000
    p: int = 100
    ar: float = 0.5
    seed: int = 0
    true_model: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.n < 1:
            raise DataError("n must be >= 1")
        if not self.true_model:
            object.__setattr__(self, "true_model", tuple(default_true_model(self.p).tolist()))
        if len(self.true_model) != self.p:
            raise DataError("true model length must equal p")


def default_true_model(p: int = 100) -> np.ndarray:
    """0.5, 1, ..., 5 on the first ten coordinates, their negatives on the
    next ten, zero elsewhere."""
    if p < 20:
        raise DataError("the default true model needs p >= 20")
    x = np.zeros(p)
    x[:10] = 0.5 * np.arange(1, 11)
    x[10:20] = -x[:10]
    return x


def ar_covariance(p: int, ar: float) -> np.ndarray:
    idx = np.arange(p)
    return ar ** np.abs(idx[:, None] - idx[None, :])


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """Rows ``s ~ N(0, Sigma)`` with ``Sigma_ij = ar^|i-j|``; label +1 with
    probability ``1 / (1 + exp(-x*^T s + iota))``, ``iota ~ N(0, 1)`` per row."""
    rng = np.random.default_rng(spec.seed)
    L = np.linalg.cholesky(ar_covariance(spec.p, spec.ar))
    S = rng.standard_normal((spec.n, spec.p)) @ L.T
    x_true = np.asarray(spec.true_model)
    iota = rng.standard_normal(spec.n)
    prob = 1.0 / (1.0 + np.exp(-(S @ x_true) + iota))
    labels = np.where(rng.random(spec.n) < prob, 1.0, -1.0)
    relevant = tuple(int(i) for i in np.flatnonzero(x_true))
    return Dataset(S, labels, relevant=relevant)


def kfold_split(data: Dataset, k: int, seed: int = 0) -> list[tuple[Dataset, Dataset]]:
    if not 2 <= k <= data.n:
        raise DataError(f"k must satisfy 2 <= k <= n={data.n}, got {k}")
    return [(data.subset(tr), data.subset(te)) for tr, te in kfold_indices(data.n, k, seed)]


def kfold_indices(n: int, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    if not 2 <= k <= n:
        raise DataError(f"k must satisfy 2 <= k <= n={n}, got {k}")
    perm = np.random.default_rng(seed).permutation(n)
    folds = np.array_split(perm, k)
    out = []
    for i, test in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        out.append((np.sort(train), np.sort(test)))
    return out


def default_batch_size(n: int) -> int:
    return max(1, math.ceil(math.sqrt(n)))
