"""Binary-classification datasets: two synthetic generators, CSV loading
with schema inference, standardization, and stratified splitting.

Arrays inside a :class:`Dataset` are write-protected; every transformation
returns a new instance.
"""

import csv
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DataError, SchemaError
from .fileio import atomic_write


@dataclass(frozen=True)
class Standardization:
    """Per-feature location and scale, plus which columns were constant.

    Constant columns get scale 1 so they pass through (shifted to zero)
    instead of dividing by zero.
    """

    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with optional binary labels.

    ``standardization`` records the statistics already applied to X, so a
    dataset knows whether it is in raw or standardized coordinates.
    ``rejected_rows`` counts CSV rows dropped during loading.
    """

    X: np.ndarray
    t: np.ndarray | None
    feature_names: tuple[str, ...]
    standardization: Standardization | None = None
    rejected_rows: int = 0

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise DataError(f"feature matrix must be 2-D, got shape {X.shape}")
        if len(self.feature_names) != X.shape[1]:
            raise DataError(
                f"{len(self.feature_names)} feature names for {X.shape[1]} columns"
            )
        if not np.isfinite(X).all():
            raise DataError("feature matrix contains non-finite values")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if self.t is not None:
            t = np.ascontiguousarray(self.t, dtype=np.float64)
            if t.shape != (X.shape[0],):
                raise DataError(f"labels {t.shape} do not match {X.shape[0]} rows")
            if not np.isin(t, (0.0, 1.0)).all():
                raise DataError("labels must be 0 or 1")
            t.setflags(write=False)
            object.__setattr__(self, "t", t)

    def __len__(self):
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


def make_circles(n: int = 1000, factor: float = 0.5, noise_sd: float = 0.05,
                 seed: int = 0) -> Dataset:
    """Concentric circles: outer ring is class 0, inner (radius ``factor``)
    is class 1. Points sit at evenly spaced angles before Gaussian noise
    of scale ``noise_sd`` is added to both coordinates.
    """
    if n < 2:
        raise ConfigError(f"need at least 2 samples, got {n}")
    if not 0.0 < factor < 1.0:
        raise ConfigError(f"inner radius factor must be in (0, 1), got {factor}")
    if noise_sd < 0:
        raise ConfigError(f"noise scale must be non-negative, got {noise_sd}")
    n_in = n // 2
    n_out = n - n_in  # odd counts favor the outer ring
    theta_out = np.linspace(0.0, 2.0 * np.pi, n_out, endpoint=False)
    theta_in = np.linspace(0.0, 2.0 * np.pi, n_in, endpoint=False)
    X = np.vstack([
        np.column_stack([np.cos(theta_out), np.sin(theta_out)]),
        factor * np.column_stack([np.cos(theta_in), np.sin(theta_in)]),
    ])
    t = np.concatenate([np.zeros(n_out), np.ones(n_in)])
    if noise_sd > 0:
        X = X + np.random.default_rng(seed).normal(0.0, noise_sd, X.shape)
    return Dataset(X=X, t=t, feature_names=("x1", "x2"))


def make_moons(n: int = 1000, noise_sd: float = 0.1, seed: int = 0) -> Dataset:
    """Two interleaved half-circles: upper arc is class 0, lower shifted
    arc is class 1, with Gaussian noise of scale ``noise_sd``.
    """
    if n < 2:
        raise ConfigError(f"need at least 2 samples, got {n}")
    if noise_sd < 0:
        raise ConfigError(f"noise scale must be non-negative, got {noise_sd}")
    n_out = n // 2
    n_in = n - n_out
    theta_out = np.linspace(0.0, np.pi, n_out)
    theta_in = np.linspace(0.0, np.pi, n_in)
    X = np.vstack([
        np.column_stack([np.cos(theta_out), np.sin(theta_out)]),
        np.column_stack([1.0 - np.cos(theta_in), 1.0 - np.sin(theta_in) - 0.5]),
    ])
    t = np.concatenate([np.zeros(n_out), np.ones(n_in)])
    if noise_sd > 0:
        X = X + np.random.default_rng(seed).normal(0.0, noise_sd, X.shape)
    return Dataset(X=X, t=t, feature_names=("x1", "x2"))


def standardize(dataset: Dataset) -> Dataset:
    """Shift each feature to zero mean and unit population scale.

    A dataset that already carries standardization statistics is returned
    as-is, so applying this twice equals applying it once.
    """
    if dataset.standardization is not None:
        return dataset
    if len(dataset) < 2:
        raise DataError(f"cannot estimate scale from {len(dataset)} sample(s)")
    lo, hi = dataset.X.min(axis=0), dataset.X.max(axis=0)
    constant = lo == hi
    # the rounded mean of a constant column is off by an ulp, which the
    # tiny std would blow up to order one; pin the exact value instead
    mean = np.where(constant, lo, dataset.X.mean(axis=0))
    std = np.where(constant, 1.0, dataset.X.std(axis=0))  # population, ddof 0
    stats = Standardization(mean=mean, std=std, constant=constant)
    return apply_standardization(dataset, stats)


def apply_standardization(dataset: Dataset, stats: Standardization) -> Dataset:
    """Re-express a dataset in the coordinates of ``stats`` (typically the
    training split's), overwriting any previous statistics."""
    if stats.mean.shape != (dataset.n_features,):
        raise DataError(
            f"statistics for {stats.mean.shape[0]} features, "
            f"dataset has {dataset.n_features}"
        )
    X = (dataset.X - stats.mean) / stats.std
    return replace(dataset, X=X, standardization=stats)


def split(dataset: Dataset, test_fraction: float, seed: int = 0
          ) -> tuple[Dataset, Dataset]:
    """Stratified train/test split.

    Each class contributes round(test_fraction * class size) samples to
    the test split, drawn after a seeded shuffle, so class balance is
    preserved. Both splits are then re-permuted so classes interleave.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError(f"test fraction must be in (0, 1), got {test_fraction}")
    if dataset.t is None:
        raise DataError("cannot stratify an unlabeled dataset")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for cls in (0.0, 1.0):
        members = np.flatnonzero(dataset.t == cls)
        if members.size == 0:
            raise DataError(f"class {int(cls)} has no samples to split")
        n_test = round(test_fraction * members.size)
        if n_test == 0 or n_test == members.size:
            raise DataError(
                f"class {int(cls)} would leave an empty split "
                f"({members.size} samples at fraction {test_fraction})"
            )
        members = rng.permutation(members)
        test_idx.append(members[:n_test])
        train_idx.append(members[n_test:])
    train_idx = rng.permutation(np.concatenate(train_idx))
    test_idx = rng.permutation(np.concatenate(test_idx))

    def take(idx):
        return replace(
            dataset, X=dataset.X[idx],
            t=None if dataset.t is None else dataset.t[idx],
        )

    return take(train_idx), take(test_idx)


def save_csv(dataset: Dataset, path: str) -> None:
    """Write features and labels with a header row; floats keep full
    round-trip precision."""

    def emit(handle):
        writer = csv.writer(handle, lineterminator="\n")
        header = list(dataset.feature_names)
        if dataset.t is not None:
            header.append("label")
        writer.writerow(header)
        for i in range(len(dataset)):
            row = [repr(float(v)) for v in dataset.X[i]]
            if dataset.t is not None:
                row.append(str(int(dataset.t[i])))
            writer.writerow(row)

    atomic_write(path, emit)


def _parse_finite(cell: str) -> float | None:
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if np.isfinite(value) else None


def load_csv(path: str, label_column: str | None = "label",
             positive_label: str | None = None,
             max_onehot: int = 32) -> Dataset:
    """Read a table, inferring which columns are numeric.

    A column counts as numeric when at least 90% of its non-empty cells
    parse as finite numbers; every other column is categorical and gets
    one-hot encoded, categories sorted, as ``name=value`` features.
    Categorical columns with more than ``max_onehot`` values are dropped
    with a warning.

    Rows are dropped (and counted) rather than failing the whole load
    when they have the wrong number of fields, a numeric cell that does
    not parse to a finite value, an empty categorical cell, or a bad
    label. Labels are 0/1 as written, or, when ``positive_label`` is
    given, 1 exactly on that string and 0 otherwise. ``label_column=None``
    reads an unlabeled table: every column is a feature.
    """
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = list(reader)

    header = [h.strip() for h in header]
    if label_column is None:
        label_pos = None
    elif label_column in header:
        label_pos = header.index(label_column)
    else:
        raise SchemaError(f"{path}: no {label_column!r} column in {header}")
    feature_cols = [i for i, name in enumerate(header) if i != label_pos]
    width = len(header)

    candidates = [r for r in rows if len(r) == width]
    if not candidates:
        raise DataError(f"{path}: no rows match the {width}-column header")

    numeric = {}
    for col in feature_cols:
        cells = [r[col].strip() for r in candidates]
        nonempty = [c for c in cells if c]
        parsed = sum(1 for c in nonempty if _parse_finite(c) is not None)
        numeric[col] = bool(nonempty) and parsed >= 0.9 * len(nonempty)

    kept: list[list] = []
    labels: list[float] = []
    rejected = len(rows) - len(candidates)
    for row in candidates:
        values = []
        ok = True
        for col in feature_cols:
            cell = row[col].strip()
            if numeric[col]:
                value = _parse_finite(cell)
                if value is None:
                    ok = False
                    break
                values.append(value)
            else:
                if not cell:
                    ok = False
                    break
                values.append(cell)
        label = None
        if ok and label_pos is not None:
            raw = row[label_pos].strip()
            if positive_label is not None:
                label = 1.0 if raw == positive_label else 0.0 if raw else None
            else:
                parsed = _parse_finite(raw)
                label = parsed if parsed in (0.0, 1.0) else None
            if label is None:
                ok = False
        if not ok:
            rejected += 1
            continue
        kept.append(values)
        if label_pos is not None:
            labels.append(label)

    if not kept:
        raise DataError(f"{path}: every row was rejected")

    # Expand categorical columns over the categories the surviving rows use.
    names: list[str] = []
    columns: list[np.ndarray] = []
    for j, col in enumerate(feature_cols):
        raw = [row[j] for row in kept]
        if numeric[col]:
            names.append(header[col])
            columns.append(np.array(raw, dtype=np.float64))
            continue
        categories = sorted(set(raw))
        if len(categories) > max_onehot:
            warnings.warn(
                f"{path}: dropping column {header[col]!r} "
                f"({len(categories)} categories exceeds the {max_onehot} cap)"
            )
            continue
        for cat in categories:
            names.append(f"{header[col]}={cat}")
            columns.append(np.array([1.0 if v == cat else 0.0 for v in raw]))

    if not columns:
        raise DataError(f"{path}: no usable feature columns")

    return Dataset(
        X=np.column_stack(columns),
        t=np.array(labels) if label_pos is not None else None,
        feature_names=tuple(names),
        rejected_rows=rejected,
    )
