"""Observed-data model, fold bookkeeping, and CSV ingestion.

The on-disk formats are plain CSV with a header row.  A dataset file carries
covariate columns (header order preserved), one integer treatment column, and
one real outcome column.  A scores file carries per-treatment-level columns
named ``pi<level>`` plus an optional ``fold`` column, aligned 1:1 with the
dataset rows.  Reals are written with 17 significant digits so a write/load
round trip is bit-exact.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .validation import as_float_vector, as_int_vector, check_same_length, freeze

__all__ = [
    "Dataset",
    "FoldAssignment",
    "ScoreTable",
    "load_dataset",
    "write_dataset",
    "assign_folds",
    "load_scores",
    "write_scores",
    "write_weights",
]

COMPLEMENT_TOL = 1e-9


@dataclass(frozen=True)
class Dataset:
    """Rows of (covariates, treatment, outcome), all fully observed.

    Treatment labels are nonnegative integers; covariates and outcomes must be
    finite.  Instances are immutable and safe to share across threads.
    """

    covariates: np.ndarray
    treatment: np.ndarray
    outcome: np.ndarray
    covariate_names: tuple[str, ...] = ()

    def __post_init__(self):
        cov = np.ascontiguousarray(self.covariates, dtype=float)
        if cov.ndim != 2:
            raise ValidationError(f"covariates must be a 2-d matrix, got shape {cov.shape}")
        n, d = cov.shape
        if n < 1 or d < 1:
            raise ValidationError("dataset needs at least one row and one covariate")
        if not np.all(np.isfinite(cov)):
            raise ValidationError("covariates contain non-finite values")
        a = as_int_vector("treatment", self.treatment)
        y = as_float_vector("outcome", self.outcome)
        check_same_length(covariates=cov, treatment=a, outcome=y)
        if np.any(a < 0):
            raise ValidationError("treatment labels must be nonnegative integers")
        names = tuple(self.covariate_names) or tuple(f"w{j + 1}" for j in range(d))
        if len(names) != d:
            raise ValidationError(f"expected {d} covariate names, got {len(names)}")
        object.__setattr__(self, "covariates", freeze(cov))
        object.__setattr__(self, "treatment", freeze(a))
        object.__setattr__(self, "outcome", freeze(y))
        object.__setattr__(self, "covariate_names", names)

    @property
    def n(self) -> int:
        return self.covariates.shape[0]

    @property
    def d(self) -> int:
        return self.covariates.shape[1]

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(int(v) for v in np.unique(self.treatment))


@dataclass(frozen=True)
class FoldAssignment:
    """Per-row fold labels in 1..J, every fold nonempty."""

    fold_of: np.ndarray
    J: int

    def __post_init__(self):
        fold_of = as_int_vector("fold_of", self.fold_of)
        if self.J < 1:
            raise ValidationError(f"fold count must be at least 1, got {self.J}")
        if fold_of.size == 0:
            raise ValidationError("fold assignment must cover at least one row")
        present = np.unique(fold_of)
        if present[0] < 1 or present[-1] > self.J:
            raise ValidationError(f"fold labels must lie in 1..{self.J}")
        if present.size != self.J:
            missing = sorted(set(range(1, self.J + 1)) - set(int(v) for v in present))
            raise ValidationError(f"folds {missing} have no rows")
        object.__setattr__(self, "fold_of", freeze(fold_of))

    @property
    def n(self) -> int:
        return self.fold_of.size


@dataclass(frozen=True)
class ScoreTable:
    """Out-of-fold propensity estimates per treatment level, with fold labels.

    ``complementary`` marks binary tables where pi0 and pi1 sum to one within
    tolerance, enabling the single-regression calibration shortcut.
    """

    folds: FoldAssignment
    scores: dict[int, np.ndarray]
    complementary: bool = False

    def __post_init__(self):
        if not self.scores:
            raise ValidationError("score table needs at least one treatment level")
        clean: dict[int, np.ndarray] = {}
        for level, vals in self.scores.items():
            arr = as_float_vector(f"pi{level}", vals)
            check_same_length(fold_of=self.folds.fold_of, scores=arr)
            bad = np.flatnonzero((arr < 0.0) | (arr > 1.0))
            if bad.size:
                i = int(bad[0])
                raise ValidationError(
                    f"pi{level} must lie in [0, 1]; row {i + 1} has value {arr[i]!r}"
                )
            clean[int(level)] = freeze(arr)
        if self.complementary:
            if not (0 in clean and 1 in clean):
                raise ValidationError("complementary tables require levels 0 and 1")
            gap = np.abs(clean[0] + clean[1] - 1.0)
            if np.any(gap > COMPLEMENT_TOL):
                i = int(np.argmax(gap))
                raise ValidationError(
                    f"pi0 + pi1 deviates from 1 by {gap[i]:.3g} at row {i + 1}"
                )
        object.__setattr__(self, "scores", clean)

    @property
    def n(self) -> int:
        return self.folds.n

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(sorted(self.scores))


def _open_rows(path: str):
    if not os.path.exists(path):
        raise ValidationError(f"file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ValidationError(f"empty input: {path} has no header row")
    header = [c.strip() for c in rows[0]]
    return header, rows[1:]


def _parse_cell(cell: str, column: str, row_index: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ValidationError(
            f"could not parse column {column!r} at row {row_index}: {cell!r}"
        ) from None
    if not np.isfinite(value):
        raise ValidationError(f"non-finite value in column {column!r} at row {row_index}")
    return value


def load_dataset(path: str, treatment_column: str = "a", outcome_column: str = "y") -> Dataset:
    """Load a dataset CSV.

    Covariates are every column other than the treatment and outcome columns,
    in header order.  Rows are 1-indexed in error messages (header excluded).

    Raises:
        ValidationError: missing file or column, non-numeric or non-finite
            cell, empty file, or missing treatment level 0/1.
    """
    header, body = _open_rows(path)
    for required in (treatment_column, outcome_column):
        if required not in header:
            raise ValidationError(f"column {required!r} not found in {path} (header: {header})")
    if not body:
        raise ValidationError(f"empty input: {path} has a header but no data rows")
    a_idx = header.index(treatment_column)
    y_idx = header.index(outcome_column)
    cov_idx = [j for j in range(len(header)) if j not in (a_idx, y_idx)]
    if not cov_idx:
        raise ValidationError(f"{path} has no covariate columns")
    cov = np.empty((len(body), len(cov_idx)))
    treatment = np.empty(len(body), dtype=np.int64)
    outcome = np.empty(len(body))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise ValidationError(f"row {i + 1} has {len(row)} cells, expected {len(header)}")
        for k, j in enumerate(cov_idx):
            cov[i, k] = _parse_cell(row[j], header[j], i + 1)
        a_val = _parse_cell(row[a_idx], treatment_column, i + 1)
        if a_val != round(a_val) or a_val < 0:
            raise ValidationError(
                f"treatment must be a nonnegative integer at row {i + 1}: {row[a_idx]!r}"
            )
        treatment[i] = int(round(a_val))
        outcome[i] = _parse_cell(row[y_idx], outcome_column, i + 1)
    levels = set(int(v) for v in np.unique(treatment))
    if not {0, 1} <= levels:
        raise ValidationError(f"treatment column must contain levels 0 and 1, found {sorted(levels)}")
    names = tuple(header[j] for j in cov_idx)
    return Dataset(covariates=cov, treatment=treatment, outcome=outcome, covariate_names=names)


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_dataset(
    dataset: Dataset, path: str, treatment_column: str = "a", outcome_column: str = "y"
) -> None:
    """Write a dataset CSV that round-trips bit-exactly through load_dataset."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(dataset.covariate_names) + [treatment_column, outcome_column])
        for i in range(dataset.n):
            row = [_fmt(v) for v in dataset.covariates[i]]
            row.append(str(int(dataset.treatment[i])))
            row.append(_fmt(dataset.outcome[i]))
            writer.writerow(row)


def assign_folds(n: int, J: int, seed: int) -> FoldAssignment:
    """Partition rows 1..n into J folds of near-equal size.

    Applies a seeded uniform permutation and cuts it into contiguous blocks,
    so fold sizes differ by at most one.  Deterministic given (n, J, seed).
    """
    if J < 1 or J > n:
        raise ValidationError(f"fold count must satisfy 1 <= J <= n, got J={J} with n={n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    sizes = np.full(J, n // J, dtype=np.int64)
    sizes[: n % J] += 1
    fold_of = np.empty(n, dtype=np.int64)
    start = 0
    for j, size in enumerate(sizes, start=1):
        fold_of[perm[start : start + size]] = j
        start += size
    return FoldAssignment(fold_of=fold_of, J=J)


def load_scores(
    path: str,
    levels: tuple[int, ...] = (1, 0),
    fold_assignment: FoldAssignment | None = None,
    n_expected: int | None = None,
) -> ScoreTable:
    """Load a scores CSV with columns ``pi<level>`` and optionally ``fold``.

    A fold column in the file takes precedence; otherwise ``fold_assignment``
    must be supplied.  Scores are validated into [0, 1] and the complementary
    flag is set when both binary levels are present and sum to one within
    tolerance on every row.
    """
    header, body = _open_rows(path)
    if not body:
        raise ValidationError(f"empty input: {path} has a header but no data rows")
    if n_expected is not None and len(body) != n_expected:
        raise ValidationError(f"{path} has {len(body)} rows, expected {n_expected}")
    columns = {}
    for level in levels:
        name = f"pi{level}"
        if name not in header:
            raise ValidationError(f"column {name!r} not found in {path} (header: {header})")
        columns[level] = header.index(name)
    scores = {level: np.empty(len(body)) for level in levels}
    fold_values = None
    if "fold" in header:
        f_idx = header.index("fold")
        fold_values = np.empty(len(body), dtype=np.int64)
    for i, row in enumerate(body):
        for level, j in columns.items():
            scores[level][i] = _parse_cell(row[j], f"pi{level}", i + 1)
        if fold_values is not None:
            f_val = _parse_cell(row[f_idx], "fold", i + 1)
            fold_values[i] = int(round(f_val))
    if fold_values is not None:
        folds = FoldAssignment(fold_of=fold_values, J=int(fold_values.max()))
    elif fold_assignment is not None:
        folds = fold_assignment
        check_same_length(fold_of=folds.fold_of, scores=scores[levels[0]])
    else:
        raise ValidationError(f"{path} has no fold column and no fold assignment was supplied")
    complementary = False
    if 0 in scores and 1 in scores:
        complementary = bool(np.all(np.abs(scores[0] + scores[1] - 1.0) <= COMPLEMENT_TOL))
    return ScoreTable(folds=folds, scores=scores, complementary=complementary)


def write_scores(table: ScoreTable, path: str) -> None:
    """Write a scores CSV (``fold`` plus one ``pi<level>`` column per level)."""
    levels = list(table.levels)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fold"] + [f"pi{level}" for level in levels])
        for i in range(table.n):
            row = [str(int(table.folds.fold_of[i]))]
            row.extend(_fmt(table.scores[level][i]) for level in levels)
            writer.writerow(row)


def write_weights(columns: dict[str, np.ndarray], path: str) -> None:
    """Write aligned weight columns (e.g. alpha1_star, alpha0_star) as CSV."""
    names = list(columns)
    n = check_same_length(**{name: arr for name, arr in columns.items()})
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for i in range(n):
            writer.writerow([_fmt(columns[name][i]) for name in names])
