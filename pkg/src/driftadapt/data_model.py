"""Tabular data representation, CSV ingestion and numeric encoding.

A :class:`Dataset` keeps raw column values (with explicit missingness);
:func:`encode` turns it into an :class:`EncodedMatrix` of float64 values
plus a missing mask. Categorical columns are label-encoded in first-
appearance order with missing as a dedicated extra label; numeric missing
is either imputed to zero or kept masked, depending on the policy.
Datetime and multi-value categorical columns are never encoded: they are
dropped from the matrix and reported.

Datasets and encoded matrices are treated as immutable after
construction and can be shared read-only across workers.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError

# Cell spellings treated as missing (case-insensitive).
MISSING_SPELLINGS = {"", "na", "nan"}

# Reserved codebook labels. Real category values may not collide with these.
MISSING_LABEL = "__missing__"
UNSEEN_LABEL = "__unseen__"


class ColumnKind(str, Enum):
    NUMERICAL = "numerical"
    CATEGORICAL = "categorical"
    DATETIME = "datetime"
    MULTIVALUE_CATEGORICAL = "multivalue_categorical"


MODELABLE_KINDS = (ColumnKind.NUMERICAL, ColumnKind.CATEGORICAL)


@dataclass(frozen=True)
class Column:
    name: str
    kind: ColumnKind


@dataclass
class Dataset:
    """Schema-typed table. Numerical columns are float64 arrays with NaN
    for missing; categorical/datetime/multivalue columns are object arrays
    of strings with None for missing. ``label``, when present, is a binary
    outcome per row and is never part of ``columns``."""

    name: str
    columns: list[Column]
    data: dict[str, np.ndarray]
    n_rows: int
    label: np.ndarray | None = None

    def __post_init__(self):
        for col in self.columns:
            arr = self.data[col.name]
            if len(arr) != self.n_rows:
                raise DataError(
                    f"column {col.name!r} has {len(arr)} cells, expected {self.n_rows}"
                )
        if self.label is not None:
            if len(self.label) != self.n_rows:
                raise DataError("label length does not match row count")
            bad = set(np.unique(self.label)) - {0, 1}
            if bad:
                raise DataError(f"label values outside {{0,1}}: {sorted(bad)}")

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def kind_of(self, name: str) -> ColumnKind:
        for c in self.columns:
            if c.name == name:
                return c.kind
        raise DataError(f"no such column: {name!r}")


@dataclass(frozen=True)
class EncodingPolicy:
    """How missing cells are represented numerically.

    ``keep_missing`` is only valid for learners with native missing
    routing (the boosted trees); zero-imputation matches the tree/forest
    learners that need complete inputs. Categorical missing always
    becomes a dedicated new label.
    """

    numeric_missing: str = "impute_zero"  # or "keep_missing"

    def __post_init__(self):
        if self.numeric_missing not in ("impute_zero", "keep_missing"):
            raise DataError(
                f"unknown numeric_missing policy: {self.numeric_missing!r}"
            )


IMPUTE_ZERO = EncodingPolicy("impute_zero")
KEEP_MISSING = EncodingPolicy("keep_missing")


@dataclass
class EncodedMatrix:
    """Numeric view of a dataset.

    ``values`` is (n, d') float64; ``missing_mask`` is True only where the
    original cell was missing in a numeric column under the keep_missing
    policy. ``codebooks`` maps each categorical column to its label->code
    table (dense codes from 0, in first-appearance order)."""

    values: np.ndarray
    missing_mask: np.ndarray
    feature_names: list[str]
    codebooks: dict[str, dict[str, int]]
    policy: EncodingPolicy
    dropped_columns: list[str] = field(default_factory=list)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]

    def select_features(self, names: Sequence[str]) -> "EncodedMatrix":
        """Column subset, preserving the given order."""
        idx = [self.feature_names.index(n) for n in names]
        return EncodedMatrix(
            values=self.values[:, idx].copy(),
            missing_mask=self.missing_mask[:, idx].copy(),
            feature_names=list(names),
            codebooks={n: dict(self.codebooks[n]) for n in names if n in self.codebooks},
            policy=self.policy,
            dropped_columns=list(self.dropped_columns),
        )

    def select_rows(self, idx: np.ndarray) -> "EncodedMatrix":
        return EncodedMatrix(
            values=self.values[idx],
            missing_mask=self.missing_mask[idx],
            feature_names=list(self.feature_names),
            codebooks={k: dict(v) for k, v in self.codebooks.items()},
            policy=self.policy,
            dropped_columns=list(self.dropped_columns),
        )

    def decode(self, name: str, code: int) -> str:
        """Inverse of the codebook for one categorical column."""
        book = self.codebooks[name]
        for label, c in book.items():
            if c == code:
                return label
        raise DataError(f"code {code} not present in codebook of {name!r}")


def _is_missing_cell(text: str) -> bool:
    return text.strip().lower() in MISSING_SPELLINGS


def _parse_number(text: str) -> float | None:
    try:
        value = float(text)
    except ValueError:
        return None
    return value


def load_schema(path) -> dict[str, ColumnKind]:
    """Read a JSON schema file mapping column name -> kind."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read schema file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed schema file {path}: {exc}") from exc
    schema = {}
    for name, kind in raw.items():
        try:
            schema[name] = ColumnKind(kind)
        except ValueError:
            raise DataError(
                f"unknown column kind {kind!r} for column {name!r}"
            ) from None
    return schema


def load_csv(path, schema: Mapping[str, ColumnKind] | None = None,
             name: str | None = None) -> Dataset:
    """Read a headered CSV into a Dataset.

    With no schema, kinds are inferred per column: every non-missing cell
    parseable as a number means numerical, anything else categorical.
    Empty cells and the NA/NaN spellings are recorded as missing, never
    as zero. Ragged rows are an error naming the offending line.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: file is empty, expected a header row") from None
            raw_rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue  # blank line, not a row of empty cells
                if len(row) != len(header):
                    raise DataError(
                        f"{path}: line {lineno} has {len(row)} cells, "
                        f"expected {len(header)}"
                    )
                raw_rows.append(row)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    if schema is not None:
        missing_cols = [c for c in schema if c not in header]
        if missing_cols:
            raise DataError(
                f"{path}: schema names columns absent from header: {missing_cols}"
            )

    n = len(raw_rows)
    columns: list[Column] = []
    data: dict[str, np.ndarray] = {}
    for j, col_name in enumerate(header):
        cells = [row[j] for row in raw_rows]
        missing = [_is_missing_cell(c) for c in cells]
        if schema is not None and col_name in schema:
            kind = schema[col_name]
        else:
            parsed = [
                _parse_number(c) for c, m in zip(cells, missing) if not m
            ]
            kind = ColumnKind.NUMERICAL if all(
                v is not None for v in parsed
            ) else ColumnKind.CATEGORICAL

        if kind == ColumnKind.NUMERICAL:
            arr = np.full(n, np.nan, dtype=np.float64)
            for i, (cell, m) in enumerate(zip(cells, missing)):
                if not m:
                    value = _parse_number(cell)
                    if value is None:
                        raise DataError(
                            f"{path}: line {i + 2}, column {col_name!r}: "
                            f"cannot parse {cell!r} as a number"
                        )
                    arr[i] = value
        else:
            arr = np.empty(n, dtype=object)
            for i, (cell, m) in enumerate(zip(cells, missing)):
                arr[i] = None if m else cell
        columns.append(Column(col_name, kind))
        data[col_name] = arr

    return Dataset(name=name or str(path), columns=columns, data=data, n_rows=n)


def extract_label(ds: Dataset, label_column: str) -> Dataset:
    """Split a binary outcome column out of the feature columns."""
    if label_column not in ds.column_names:
        raise DataError(f"label column {label_column!r} not in dataset {ds.name!r}")
    raw = ds.data[label_column]
    kind = ds.kind_of(label_column)
    label = np.empty(ds.n_rows, dtype=np.int8)
    for i in range(ds.n_rows):
        cell = raw[i]
        if kind == ColumnKind.NUMERICAL:
            if math.isnan(cell):
                raise DataError(f"label column {label_column!r} has a missing value (row {i})")
            value = cell
        else:
            if cell is None:
                raise DataError(f"label column {label_column!r} has a missing value (row {i})")
            value = _parse_number(cell)
            if value is None:
                raise DataError(
                    f"label column {label_column!r} has non-numeric value {cell!r}"
                )
        if value not in (0.0, 1.0):
            raise DataError(
                f"label column {label_column!r} has non-binary value {value!r}"
            )
        label[i] = int(value)
    columns = [c for c in ds.columns if c.name != label_column]
    data = {k: v for k, v in ds.data.items() if k != label_column}
    return Dataset(name=ds.name, columns=columns, data=data,
                   n_rows=ds.n_rows, label=label)


def _encode_categorical(cells: np.ndarray, book: dict[str, int],
                        extend: bool) -> np.ndarray:
    """Map labels through a codebook. When ``extend`` is False, labels not
    in the book get the shared unseen code (allocated on demand)."""
    codes = np.empty(len(cells), dtype=np.float64)
    for i, cell in enumerate(cells):
        label = MISSING_LABEL if cell is None else str(cell)
        if label in (MISSING_LABEL, UNSEEN_LABEL) and cell is not None:
            raise DataError(
                f"category value {label!r} collides with a reserved token"
            )
        if label not in book:
            if extend:
                book[label] = len(book)
            else:
                if UNSEEN_LABEL not in book:
                    book[UNSEEN_LABEL] = len(book)
                label = UNSEEN_LABEL
        codes[i] = book[label]
    return codes


def encode(ds: Dataset, policy: EncodingPolicy) -> EncodedMatrix:
    """Numeric encoding per the preprocessing policy.

    Categorical labels become dense integer codes in first-appearance
    order with missing as its own label; numeric missing becomes 0 under
    impute_zero or a masked slot under keep_missing. Non-modelable
    columns are dropped and reported in ``dropped_columns``.
    """
    keep = [c for c in ds.columns if c.kind in MODELABLE_KINDS]
    dropped = [c.name for c in ds.columns if c.kind not in MODELABLE_KINDS]
    if not keep:
        raise DataError(f"dataset {ds.name!r} has no modelable columns")

    n, d = ds.n_rows, len(keep)
    values = np.zeros((n, d), dtype=np.float64)
    mask = np.zeros((n, d), dtype=bool)
    codebooks: dict[str, dict[str, int]] = {}
    for j, col in enumerate(keep):
        arr = ds.data[col.name]
        if col.kind == ColumnKind.NUMERICAL:
            miss = np.isnan(arr)
            if policy.numeric_missing == "impute_zero":
                values[:, j] = np.where(miss, 0.0, arr)
            else:
                values[:, j] = np.where(miss, np.nan, arr)
                mask[:, j] = miss
        else:
            book: dict[str, int] = {}
            values[:, j] = _encode_categorical(arr, book, extend=True)
            codebooks[col.name] = book

    return EncodedMatrix(
        values=values,
        missing_mask=mask,
        feature_names=[c.name for c in keep],
        codebooks=codebooks,
        policy=policy,
        dropped_columns=dropped,
    )


def vstack_encoded(mats: Sequence[EncodedMatrix]) -> EncodedMatrix:
    """Row-concatenate matrices sharing a feature set. Codebooks are
    merged (they agree on common labels by construction when all inputs
    were aligned against the same training matrix)."""
    if not mats:
        raise DataError("nothing to concatenate")
    first = mats[0]
    for m in mats[1:]:
        if list(m.feature_names) != list(first.feature_names):
            raise DataError("cannot concatenate matrices with different features")
    books: dict[str, dict[str, int]] = {}
    for m in mats:
        for name, book in m.codebooks.items():
            merged = books.setdefault(name, {})
            for label, code in book.items():
                if merged.setdefault(label, code) != code:
                    raise DataError(
                        f"codebooks disagree on {label!r} in column {name!r}"
                    )
    return EncodedMatrix(
        values=np.vstack([m.values for m in mats]),
        missing_mask=np.vstack([m.missing_mask for m in mats]),
        feature_names=list(first.feature_names),
        codebooks=books,
        policy=first.policy,
        dropped_columns=list(first.dropped_columns),
    )


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def write_csv(ds: Dataset, path, label_column: str | None = None) -> None:
    """Write a dataset back to CSV. Floats use repr (shortest round-trip
    form); missing cells become empty strings. With ``label_column`` the
    label is appended as the last column."""
    header = ds.column_names + ([label_column] if label_column else [])
    if label_column and ds.label is None:
        raise DataError("dataset has no label to write")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(ds.n_rows):
            row = []
            for col in ds.columns:
                cell = ds.data[col.name][i]
                if col.kind == ColumnKind.NUMERICAL:
                    row.append(_format_cell(float(cell)))
                else:
                    row.append(_format_cell(cell))
            if label_column:
                row.append(str(int(ds.label[i])))
            writer.writerow(row)


def align_codebooks(train: EncodedMatrix, test: Dataset,
                    policy: EncodingPolicy | None = None) -> EncodedMatrix:
    """Encode a test dataset with the training codebooks.

    Categories never seen in training map to one dedicated unseen code
    per column (distinct from the missing label). The test dataset must
    carry every training feature column.
    """
    policy = policy or train.policy
    test_cols = set(test.column_names)
    absent = [f for f in train.feature_names if f not in test_cols]
    if absent:
        raise DataError(
            f"test dataset {test.name!r} is missing training columns: {absent}"
        )

    n, d = test.n_rows, train.n_features
    values = np.zeros((n, d), dtype=np.float64)
    mask = np.zeros((n, d), dtype=bool)
    codebooks = {k: dict(v) for k, v in train.codebooks.items()}
    for j, name in enumerate(train.feature_names):
        kind = test.kind_of(name)
        categorical_in_train = name in codebooks
        expected = ColumnKind.CATEGORICAL if categorical_in_train \
            else ColumnKind.NUMERICAL
        if kind != expected:
            raise DataError(
                f"column {name!r} is {kind.value} in the test data but "
                f"{expected.value} in training"
            )
        arr = test.data[name]
        if kind == ColumnKind.NUMERICAL:
            miss = np.isnan(arr)
            if policy.numeric_missing == "impute_zero":
                values[:, j] = np.where(miss, 0.0, arr)
            else:
                values[:, j] = np.where(miss, np.nan, arr)
                mask[:, j] = miss
        else:
            values[:, j] = _encode_categorical(arr, codebooks[name], extend=False)

    return EncodedMatrix(
        values=values,
        missing_mask=mask,
        feature_names=list(train.feature_names),
        codebooks=codebooks,
        policy=policy,
        dropped_columns=[c.name for c in test.columns
                         if c.kind not in MODELABLE_KINDS],
    )
