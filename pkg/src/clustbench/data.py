"""Dataset ingestion, preprocessing, distances and partition handling.

Every other module works on the three containers defined here:
:class:`Dataset`, :class:`DistanceMatrix` and :class:`Partition`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

MISSING_TOKENS = frozenset({"", "na"})


class DataError(ValueError):
    """Raised for malformed input data or partitions."""


@dataclass(frozen=True)
class Dataset:
    """An n x p numeric matrix with column names and optional truth labels.

    ``values`` may contain NaN for missing cells until :func:`impute_mean`
    has been applied. ``preprocessing`` records the steps applied so far.
    """

    values: np.ndarray
    column_names: tuple
    truth: Optional["Partition"] = None
    name: str = "dataset"
    preprocessing: tuple = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DataError(f"values must be 2-D, got shape {values.shape}")
        n, p = values.shape
        if n < 2 or p < 1:
            raise DataError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if len(self.column_names) != p:
            raise DataError(
                f"{len(self.column_names)} column names for {p} columns"
            )
        if self.truth is not None and self.truth.n != n:
            raise DataError(f"truth has {self.truth.n} labels for {n} rows")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_names", tuple(self.column_names))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.values).any())


@dataclass(frozen=True)
class DistanceMatrix:
    """Condensed Euclidean distances, row-major over pairs i < j.

    The layout is the one used by :func:`scipy.spatial.distance.squareform`.
    """

    n: int
    entries: np.ndarray
    _square: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if self.n < 1:
            raise DataError("distance matrix needs at least one observation")
        expected = self.n * (self.n - 1) // 2
        if entries.shape != (expected,):
            raise DataError(
                f"expected {expected} condensed entries for n={self.n}, "
                f"got shape {entries.shape}"
            )
        if expected and (entries.min() < 0 or not np.isfinite(entries).all()):
            raise DataError("distances must be finite and nonnegative")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_square(cls, square) -> "DistanceMatrix":
        square = np.asarray(square, dtype=float)
        n = square.shape[0]
        iu = np.triu_indices(n, k=1)
        return cls(n, square[iu])

    def index(self, i: int, j: int) -> int:
        """Position of pair (i, j), i != j, in the condensed vector."""
        if i == j:
            raise IndexError("diagonal entries are not stored")
        if i > j:
            i, j = j, i
        return self.n * i - i * (i + 1) // 2 + (j - i - 1)

    def __getitem__(self, ij) -> float:
        i, j = ij
        if i == j:
            return 0.0
        return float(self.entries[self.index(i, j)])

    def square(self) -> np.ndarray:
        """Full symmetric n x n matrix (cached, read-only)."""
        if self._square is None:
            sq = np.zeros((self.n, self.n))
            iu = np.triu_indices(self.n, k=1)
            sq[iu] = self.entries
            sq.T[iu] = self.entries
            sq.setflags(write=False)
            object.__setattr__(self, "_square", sq)
        return self._square


@dataclass(frozen=True)
class Partition:
    """Crisp assignment of n observations to clusters labelled 1..K."""

    labels: np.ndarray
    K: int
    sizes: np.ndarray
    original_labels: tuple = field(default=(), compare=False)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def codes(self) -> np.ndarray:
        """Zero-based cluster codes (labels - 1)."""
        return self.labels - 1

    def members(self, k: int) -> np.ndarray:
        """Observation indices of cluster ``k`` (1-based)."""
        return self.groups[k - 1]

    @cached_property
    def groups(self) -> tuple:
        """Ascending member indices of every cluster, in label order."""
        order = np.argsort(self.labels, kind="stable")
        return tuple(np.split(order, np.cumsum(self.sizes)[:-1]))

    def onehot(self) -> np.ndarray:
        out = np.zeros((self.n, self.K))
        out[np.arange(self.n), self.codes] = 1.0
        return out


def validate_partition(labels, n: Optional[int] = None) -> Partition:
    """Relabel arbitrary labels to 1..K in order of first appearance.

    Parameters
    ----------
    labels : sequence or Partition
        Raw labels of any hashable type.
    n : int, optional
        Expected number of observations.
    """
    if isinstance(labels, Partition):
        labels = labels.labels
    if not isinstance(labels, list):
        labels = list(np.asarray(labels, dtype=object).ravel())
    raw = labels
    if len(raw) == 0:
        raise DataError("partition is empty")
    if n is not None and len(raw) != n:
        raise DataError(f"partition has {len(raw)} labels, expected {n}")
    mapping: dict = {}
    codes = np.empty(len(raw), dtype=np.int64)
    for i, lab in enumerate(raw):
        key = lab.item() if isinstance(lab, np.generic) else lab
        if key not in mapping:
            mapping[key] = len(mapping) + 1
        codes[i] = mapping[key]
    K = len(mapping)
    sizes = np.bincount(codes, minlength=K + 1)[1:]
    codes.setflags(write=False)
    sizes.setflags(write=False)
    return Partition(codes, K, sizes, tuple(mapping))


def _is_missing(cell: str) -> bool:
    return cell.strip().lower() in MISSING_TOKENS


def _select_column(header: Sequence[str], selector) -> int:
    if isinstance(selector, (int, np.integer)) and not isinstance(selector, bool):
        idx = int(selector)
        if not -len(header) <= idx < len(header):
            raise DataError(f"truth column index {idx} out of range")
        return idx % len(header)
    if selector in header:
        return list(header).index(selector)
    if isinstance(selector, str) and selector.lstrip("-").isdigit():
        return _select_column(header, int(selector))
    raise DataError(f"truth column {selector!r} not found in header {list(header)}")


def load_csv(
    path: Union[str, Path],
    truth_column=None,
    name: Optional[str] = None,
) -> Dataset:
    """Read a comma separated file with a header row.

    Parameters
    ----------
    path : path-like
    truth_column : int or str, optional
        Column holding the reference labels (name or 0-based position).
        It is removed from the feature matrix.
    name : str, optional
        Dataset identifier; defaults to the file stem.

    Empty cells and ``NA`` (any case) are read as missing (NaN).
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
            )
    truth_idx = None if truth_column is None else _select_column(header, truth_column)
    feature_idx = [j for j in range(len(header)) if j != truth_idx]
    if not feature_idx:
        raise DataError(f"{path}: no feature columns")

    values = np.empty((len(body), len(feature_idx)))
    for r, row in enumerate(body):
        for c, j in enumerate(feature_idx):
            cell = row[j]
            if _is_missing(cell):
                values[r, c] = np.nan
                continue
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}:{r + 2}: non-numeric value {cell!r} "
                    f"in column {header[j]!r}"
                ) from None
            if not np.isfinite(values[r, c]):
                raise DataError(
                    f"{path}:{r + 2}: non-finite value in column {header[j]!r}"
                )

    truth = None
    if truth_idx is not None:
        raw = [row[truth_idx].strip() for row in body]
        if any(_is_missing(v) for v in raw):
            raise DataError(f"{path}: truth column has missing labels")
        truth = validate_partition([_maybe_int(v) for v in raw], len(body))
        if truth.K < 2:
            raise DataError(f"{path}: truth column has a single distinct value")

    return Dataset(
        values,
        tuple(header[j] for j in feature_idx),
        truth=truth,
        name=name or path.stem,
    )


def _maybe_int(token: str):
    try:
        return int(token)
    except ValueError:
        return token


def impute_mean(d: Dataset) -> Dataset:
    """Replace every missing cell by the mean of its column's observed values."""
    X = np.array(d.values)
    mask = np.isnan(X)
    if not mask.any():
        return d
    observed = (~mask).sum(axis=0)
    empty = [d.column_names[j] for j in np.flatnonzero(observed == 0)]
    if empty:
        raise DataError(f"columns with no observed values: {empty}")
    means = np.nanmean(X, axis=0)
    rows, cols = np.nonzero(mask)
    X[rows, cols] = means[cols]
    return replace(d, values=X, preprocessing=d.preprocessing + ("impute_mean",))


def scale_zscore(d: Dataset) -> Dataset:
    """Scale every column to mean 0 and sample variance 1 (ddof=1)."""
    if d.has_missing:
        raise DataError("impute missing values before scaling")
    X = d.values
    mean = X.mean(axis=0)
    centred = X - mean
    sd = np.sqrt((centred**2).sum(axis=0) / (d.n - 1))
    # tolerance relative to the column magnitude catches float-noise "variance"
    scale_ref = np.maximum(np.abs(mean), 1.0)
    constant = sd <= 1e-12 * scale_ref
    if constant.any():
        names = [d.column_names[j] for j in np.flatnonzero(constant)]
        raise DataError(f"constant column(s) cannot be scaled: {names}")
    Z = centred / sd
    # second pass removes the O(eps) residual mean of the first
    Z = Z - Z.mean(axis=0)
    Z = Z / np.sqrt((Z**2).sum(axis=0) / (d.n - 1))
    return replace(d, values=Z, preprocessing=d.preprocessing + ("scale_zscore",))


def euclidean_distances(d: Union[Dataset, np.ndarray]) -> DistanceMatrix:
    """Condensed Euclidean distance matrix of the rows of ``d``."""
    X = d.values if isinstance(d, Dataset) else np.asarray(d, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if not np.isfinite(X).all():
        raise DataError("distances need a fully imputed, finite dataset")
    n = X.shape[0]
    out = np.empty(n * (n - 1) // 2)
    pos = 0
    # row blocks keep memory at O(n) per row; each entry is computed directly
    # from coordinate differences, so the result is independent of blocking
    for i in range(n - 1):
        diff = X[i + 1 :] - X[i]
        row = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        out[pos : pos + row.size] = row
        pos += row.size
    return DistanceMatrix(n, out)


def read_partition_file(path: Union[str, Path], n: Optional[int] = None) -> Partition:
    """Read one label per line, with an optional single header line.

    With ``n`` given, a file of n + 1 lines is taken to start with a header.
    Without it, a non-numeric first line above numeric labels is a header.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    labels = [ln.strip().strip('"').strip("'") for ln in lines if ln.strip()]
    if not labels:
        raise DataError(f"{path}: partition file is empty")
    if len(labels) > 1 and _looks_like_header(labels, n):
        labels = labels[1:]
    if n is not None and len(labels) != n:
        raise DataError(f"{path}: {len(labels)} labels, expected {n}")
    return validate_partition([_maybe_int(v) for v in labels], n)


def _looks_like_header(labels: list, n: Optional[int]) -> bool:
    if n is not None:
        return len(labels) == n + 1
    return not _is_float(labels[0]) and all(_is_float(v) for v in labels[1:])


def _is_float(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


class MeanImputer(TransformerMixin, BaseEstimator):
    """Column-mean imputation as a scikit-learn transformer.

    Missing entries are NaN. Means are learned in ``fit`` from the observed
    entries of each column.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_all_finite="allow-nan")
        observed = (~np.isnan(X)).sum(axis=0)
        if (observed == 0).any():
            raise DataError(
                f"columns with no observed values: {np.flatnonzero(observed == 0).tolist()}"
            )
        self.statistics_ = np.nanmean(X, axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "statistics_")
        X = check_array(X, dtype=float, ensure_all_finite="allow-nan", copy=True)
        rows, cols = np.nonzero(np.isnan(X))
        X[rows, cols] = self.statistics_[cols]
        return X


class ZScoreScaler(TransformerMixin, BaseEstimator):
    """Standardise columns to mean 0 and sample variance 1.

    Unlike :class:`sklearn.preprocessing.StandardScaler` this uses the
    n - 1 denominator and refuses constant columns.
    """

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_samples=2)
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0, ddof=1)
        constant = self.scale_ <= 1e-12 * np.maximum(np.abs(self.mean_), 1.0)
        if constant.any():
            raise DataError(
                f"constant column(s) cannot be scaled: {np.flatnonzero(constant).tolist()}"
            )
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_array(X, dtype=float)
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "scale_")
        return np.asarray(X, dtype=float) * self.scale_ + self.mean_
