"""Tabular dataset model: CSV ingestion, stratified sampling and splitting,
and the classification accuracy metric.

A :class:`Dataset` stores features column-major. Numeric columns are float64
arrays with NaN as the missing-value sentinel; categorical columns are object
arrays of tokens with None as the sentinel. Labels are always tokens and never
missing. Datasets are immutable: every operation returns a new value.
"""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

NUMERIC = "numeric"
CATEGORICAL = "categorical"

# Fraction of non-missing tokens that must parse as finite reals for a CSV
# column to be inferred numeric.
NUMERIC_INFERENCE_THRESHOLD = 0.9


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # NUMERIC | CATEGORICAL


@dataclass(frozen=True)
class Dataset:
    """Immutable tabular classification dataset.

    ``cells[i]`` holds column ``i``: float64 (NaN = missing) for numeric
    columns, object tokens (None = missing) for categorical ones.
    """

    columns: tuple[Column, ...]
    cells: tuple[np.ndarray, ...]
    labels: np.ndarray

    def __post_init__(self):
        if len(self.cells) != len(self.columns):
            raise DataError("cell columns do not match the declared schema")
        n = len(self.labels)
        for col, arr in zip(self.columns, self.cells):
            if len(arr) != n:
                raise DataError(f"column {col.name!r} has {len(arr)} cells, expected {n}")
            if col.kind == NUMERIC:
                if arr.dtype != np.float64:
                    raise DataError(f"numeric column {col.name!r} must be float64")
                finite = np.isfinite(arr) | np.isnan(arr)
                if not finite.all():
                    raise DataError(f"numeric column {col.name!r} contains non-finite values")
            arr.setflags(write=False)
        for tok in self.labels:
            if tok is None or tok == "":
                raise DataError("labels must not be missing")
        self.labels.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return len(self.columns)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    @cached_property
    def classes(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.labels.tolist())))

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def column(self, name: str) -> np.ndarray:
        for col, arr in zip(self.columns, self.cells):
            if col.name == name:
                return arr
        raise DataError(f"no column named {name!r}")

    def take(self, rows: Sequence[int] | np.ndarray) -> "Dataset":
        """New dataset holding the given rows, in the given order."""
        idx = np.asarray(rows, dtype=np.intp)
        return Dataset(
            columns=self.columns,
            cells=tuple(arr[idx].copy() for arr in self.cells),
            labels=self.labels[idx].copy(),
        )

    def numeric_matrix(self) -> np.ndarray:
        """Feature cells as an (n_rows, n_features) float64 matrix.

        Requires a fully numeric, fully observed dataset.
        """
        if any(c.kind != NUMERIC for c in self.columns):
            raise DataError("dataset has categorical columns")
        if self.n_features == 0:
            raise DataError("dataset has no feature columns")
        mat = np.column_stack(self.cells)
        if np.isnan(mat).any():
            raise DataError("dataset has missing cells")
        return mat

    def has_missing(self) -> bool:
        for col, arr in zip(self.columns, self.cells):
            if col.kind == NUMERIC:
                if np.isnan(arr).any():
                    return True
            elif any(v is None for v in arr.tolist()):
                return True
        return False


@dataclass(frozen=True)
class SplitPair:
    """Train/validation partition produced by :func:`split_train_valid`."""

    train: Dataset
    valid: Dataset
    seed: int


def _as_object_array(values: Iterable) -> np.ndarray:
    vals = list(values)
    arr = np.empty(len(vals), dtype=object)
    arr[:] = vals
    return arr


def make_dataset(
    columns: Sequence[tuple[str, str, Sequence]],
    labels: Sequence[str],
) -> Dataset:
    """Build a dataset from (name, kind, values) column triples.

    Numeric values may contain None/NaN for missing; categorical values use
    None for missing.
    """
    cols = []
    cells = []
    for name, kind, values in columns:
        cols.append(Column(name, kind))
        if kind == NUMERIC:
            arr = np.array([math.nan if v is None else float(v) for v in values], dtype=np.float64)
        else:
            arr = _as_object_array([None if v is None else str(v) for v in values])
        cells.append(arr)
    return Dataset(tuple(cols), tuple(cells), _as_object_array([str(t) for t in labels]))


def _parse_real(token: str) -> float | None:
    """Parse a finite real from a cell token, or None."""
    try:
        value = float(token)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_csv(
    path: str | Path,
    target_column: str,
    schema_hints: Mapping[str, str] | None = None,
) -> Dataset:
    """Load an RFC-4180-style UTF-8 CSV with a header row.

    Empty cells become missing. A column is numeric when at least 90% of its
    non-missing tokens parse as finite reals, unless a hint overrides the
    inference; unparseable non-empty tokens in numeric columns become missing.
    The target column supplies the labels and is removed from the features.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    hints = dict(schema_hints or {})
    for name, kind in hints.items():
        if kind not in (NUMERIC, CATEGORICAL):
            raise DataError(f"schema hint for {name!r} must be {NUMERIC!r} or {CATEGORICAL!r}")

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column names in header")
        if target_column not in header:
            raise DataError(f"{path}: target column {target_column!r} not in header")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            rows.append(row)

    if not rows:
        raise DataError(f"{path}: no data rows")

    target_idx = header.index(target_column)
    labels = []
    for i, row in enumerate(rows):
        tok = row[target_idx]
        if tok == "":
            raise DataError(f"{path}: empty label in data row {i + 1}")
        labels.append(tok)
    if len(set(labels)) < 2:
        raise DataError(f"{path}: fewer than 2 distinct labels")

    columns = []
    for j, name in enumerate(header):
        if j == target_idx:
            continue
        tokens = [row[j] for row in rows]
        present = [t for t in tokens if t != ""]
        if name in hints:
            kind = hints[name]
        elif not present:
            kind = CATEGORICAL
        else:
            parsed = sum(1 for t in present if _parse_real(t) is not None)
            kind = NUMERIC if parsed >= NUMERIC_INFERENCE_THRESHOLD * len(present) else CATEGORICAL
        if kind == NUMERIC:
            values = [None if t == "" else _parse_real(t) for t in tokens]
        else:
            values = [None if t == "" else t for t in tokens]
        columns.append((name, kind, values))

    return make_dataset(columns, labels)


def class_counts(d: Dataset) -> dict[str, int]:
    counts: dict[str, int] = {}
    for tok in d.labels.tolist():
        counts[tok] = counts.get(tok, 0) + 1
    return counts


def largest_remainder(
    n: int,
    counts: Mapping[str, int],
    *,
    floor: int = 0,
    cap: Mapping[str, int] | None = None,
) -> dict[str, int]:
    """Apportion ``n`` units over classes proportionally to ``counts``.

    Standard largest-remainder allocation with remainder ties broken by
    lexicographic token order, then adjusted so that every class holds at
    least ``floor`` units (demoting the largest allocations, largest first,
    ties to the lexicographically smaller token) and, when ``cap`` is given,
    no class exceeds its cap.
    """
    tokens = sorted(counts)
    total = sum(counts[t] for t in tokens)
    if total <= 0:
        raise DataError("cannot apportion over empty classes")
    if n < floor * len(tokens):
        raise DataError(f"cannot allocate {n} units over {len(tokens)} classes with floor {floor}")
    capacity = {t: (cap[t] if cap is not None else n) for t in tokens}
    if n > sum(capacity.values()):
        raise DataError("allocation exceeds per-class capacity")

    quota = {t: n * counts[t] / total for t in tokens}
    alloc = {t: min(int(math.floor(quota[t])), capacity[t]) for t in tokens}
    leftover = n - sum(alloc.values())
    by_remainder = sorted(tokens, key=lambda t: (-(quota[t] - math.floor(quota[t])), t))
    while leftover > 0:
        progressed = False
        for t in by_remainder:
            if leftover == 0:
                break
            if alloc[t] < capacity[t]:
                alloc[t] += 1
                leftover -= 1
                progressed = True
        if not progressed:
            raise DataError("allocation exceeds per-class capacity")

    # Enforce the floor by demoting the largest allocations.
    needy = sorted(t for t in tokens if alloc[t] < floor)
    for t in needy:
        while alloc[t] < floor:
            donor = min((u for u in tokens if alloc[u] > floor), key=lambda u: (-alloc[u], u))
            alloc[donor] -= 1
            alloc[t] += 1
    return alloc


def stratified_sample(d: Dataset, n: int, seed: int) -> Dataset:
    """Class-distribution-preserving random sample of ``n`` rows.

    Per-class counts follow largest-remainder apportionment with a floor of
    one row per class; rows within a class are chosen uniformly at random and
    the output order is a seeded shuffle. Requesting more rows than exist
    returns the dataset unchanged.
    """
    if n > d.n_rows:
        return d
    counts = class_counts(d)
    if n < len(counts):
        raise DataError(f"sample size {n} is smaller than the number of classes {len(counts)}")
    alloc = largest_remainder(n, counts, floor=1, cap=counts)

    rng = np.random.default_rng(seed)
    labels = d.labels
    chosen: list[np.ndarray] = []
    for tok in sorted(counts):
        rows = np.flatnonzero(labels == tok)
        take = alloc[tok]
        chosen.append(rows if take == len(rows) else rng.choice(rows, size=take, replace=False))
    idx = np.concatenate(chosen)
    rng.shuffle(idx)
    return d.take(idx)


def split_train_valid(d: Dataset, valid_fraction: float, seed: int) -> SplitPair:
    """Deterministic stratified train/validation split.

    The validation side receives ``round(valid_fraction * n_rows)`` rows,
    apportioned over classes by the same largest-remainder rule (capped so
    that the train side keeps at least one row of every class). Row order
    within each side follows the parent dataset.
    """
    if not 0.0 < valid_fraction < 1.0:
        raise DataError("valid_fraction must lie in (0, 1)")
    counts = class_counts(d)
    if len(counts) < 2:
        raise DataError("split requires at least 2 classes")
    n = d.n_rows
    n_valid = int(math.floor(valid_fraction * n + 0.5))
    if n_valid == 0 or n_valid == n:
        raise DataError(f"valid_fraction {valid_fraction} produces an empty part for {n} rows")
    cap = {t: c - 1 for t, c in counts.items()}
    if n_valid > sum(cap.values()):
        raise DataError("validation quota would strip a class from the training side")
    alloc = largest_remainder(n_valid, counts, floor=0, cap=cap)

    rng = np.random.default_rng(seed)
    valid_rows: list[np.ndarray] = []
    for tok in sorted(counts):
        take = alloc[tok]
        if take == 0:
            continue
        rows = np.flatnonzero(d.labels == tok)
        valid_rows.append(rng.choice(rows, size=take, replace=False))
    valid_idx = np.sort(np.concatenate(valid_rows)) if valid_rows else np.empty(0, dtype=np.intp)
    mask = np.zeros(n, dtype=bool)
    mask[valid_idx] = True
    train_idx = np.flatnonzero(~mask)
    return SplitPair(train=d.take(train_idx), valid=d.take(valid_idx), seed=seed)


def accuracy(predicted: Sequence[str], actual: Sequence[str]) -> float:
    """Fraction of exact matches between two equal-length token lists."""
    if len(predicted) != len(actual):
        raise ValueError(f"length mismatch: {len(predicted)} vs {len(actual)}")
    if len(predicted) == 0:
        raise ValueError("accuracy of empty lists is undefined")
    hits = sum(1 for p, a in zip(predicted, actual) if p == a)
    return hits / len(predicted)


def dataset_fingerprint(d: Dataset) -> str:
    """SHA-256 over a canonical byte encoding; equal iff datasets cell-equal."""
    h = hashlib.sha256()
    for col, arr in zip(d.columns, d.cells):
        h.update(f"{col.name}\x00{col.kind}\x1f".encode())
        if col.kind == NUMERIC:
            for v in arr.tolist():
                h.update(b"\x01" if math.isnan(v) else format(v, ".17g").encode())
                h.update(b"\x1e")
        else:
            for v in arr.tolist():
                h.update(b"\x01" if v is None else v.encode())
                h.update(b"\x1e")
    for tok in d.labels.tolist():
        h.update(tok.encode())
        h.update(b"\x1e")
    return h.hexdigest()
