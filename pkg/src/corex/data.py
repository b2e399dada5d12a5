"""Discrete data tables: parsing, categorical encoding, and column statistics.

Cells are dense integer codes per column; ``MISSING`` (-1) marks absent
values and is never a category of its own. Encoding order is first
appearance within each column, which keeps runs reproducible without a
sort pass.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

MISSING = -1

DEFAULT_MISSING_TOKENS = ("", "?", "NA")


class DataError(ValueError):
    """Malformed input data (ragged rows, bad codes, schema mismatch)."""


@dataclass(frozen=True)
class DataMatrix:
    """Immutable table of categorical codes with per-column cardinalities.

    cells: (n_samples, n_vars) int array, entries in [0, cardinality) or
        MISSING.
    cardinalities: declared alphabet size per column (>= 1).
    column_names: optional labels, one per column.
    codebooks: optional per-column list mapping code -> original token,
        kept so encoded tables round-trip to their source strings.
    """

    cells: np.ndarray
    cardinalities: np.ndarray
    column_names: list[str] | None = None
    codebooks: list[list[str]] | None = field(default=None, repr=False)

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int64)
        cards = np.asarray(self.cardinalities, dtype=np.int64)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "cardinalities", cards)
        if cells.ndim != 2 or cells.shape[0] < 1 or cells.shape[1] < 1:
            raise DataError("data must have at least one sample and one column")
        if cards.shape != (cells.shape[1],):
            raise DataError("one cardinality per column required")
        if np.any(cards < 1):
            raise DataError("cardinalities must be >= 1")
        if np.any(cells < MISSING):
            raise DataError("cell codes must be >= 0 or MISSING")
        over = (cells >= cards[np.newaxis, :]).any(axis=0)
        if over.any():
            bad = int(np.flatnonzero(over)[0])
            raise DataError(
                f"column {self._name(bad)} has a code >= cardinality {cards[bad]}"
            )
        if self.column_names is not None and len(self.column_names) != cells.shape[1]:
            raise DataError("one column name per column required")

    def _name(self, i: int) -> str:
        if self.column_names is not None:
            return repr(self.column_names[i])
        return str(i)

    @property
    def n_samples(self) -> int:
        return self.cells.shape[0]

    @property
    def n_vars(self) -> int:
        return self.cells.shape[1]

    @property
    def constant_columns(self) -> np.ndarray:
        """Boolean mask of columns whose declared cardinality is 1."""
        return self.cardinalities == 1

    def decode(self) -> list[list[str]]:
        """Map codes back to their original tokens (missing -> '')."""
        if self.codebooks is None:
            raise DataError("table carries no code books")
        rows = []
        for r in range(self.n_samples):
            row = []
            for i in range(self.n_vars):
                c = self.cells[r, i]
                row.append("" if c == MISSING else self.codebooks[i][c])
            rows.append(row)
        return rows


def parse_delimited(path, delimiter: str = ",", has_header: bool = True):
    """Read a delimited text file into (column_names, string rows).

    Raises DataError on an empty file or on rows whose field count differs
    from the first row (the offending 1-based row number is reported).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        rows = list(reader)
    rows = [row for row in rows if row]  # tolerate trailing blank lines
    if not rows:
        raise DataError(f"{path}: empty file")
    width = len(rows[0])
    for idx, row in enumerate(rows, start=1):
        if len(row) != width:
            raise DataError(
                f"{path}: row {idx} has {len(row)} fields, expected {width}"
            )
    names = None
    if has_header:
        names = [tok.strip() for tok in rows[0]]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: header only, no data rows")
    return names, rows


def encode_columns(rows, missing_tokens=DEFAULT_MISSING_TOKENS, column_names=None) -> DataMatrix:
    """Encode string rows to dense codes, one code book per column.

    Codes are assigned in order of first appearance among non-missing
    tokens. A column whose every cell is missing gets an empty code book
    and cardinality 1 (it is constant by construction).
    """
    missing = set(missing_tokens)
    n_vars = len(rows[0])
    cells = np.empty((len(rows), n_vars), dtype=np.int64)
    codebooks: list[list[str]] = [[] for _ in range(n_vars)]
    lookups: list[dict] = [{} for _ in range(n_vars)]
    for r, row in enumerate(rows):
        for i, tok in enumerate(row):
            tok = tok.strip()
            if tok in missing:
                cells[r, i] = MISSING
                continue
            code = lookups[i].get(tok)
            if code is None:
                code = len(codebooks[i])
                lookups[i][tok] = code
                codebooks[i].append(tok)
            cells[r, i] = code
    cards = np.array([max(1, len(cb)) for cb in codebooks], dtype=np.int64)
    return DataMatrix(cells, cards, column_names=column_names, codebooks=codebooks)


def encode_with_codebooks(rows, codebooks, missing_tokens=DEFAULT_MISSING_TOKENS,
                          column_names=None) -> DataMatrix:
    """Encode rows against existing code books (e.g. a fitted model's).

    Tokens absent from a column's code book raise DataError naming the
    column; missing tokens map to MISSING as usual.
    """
    missing = set(missing_tokens)
    n_vars = len(codebooks)
    if rows and len(rows[0]) != n_vars:
        raise DataError(
            f"expected {n_vars} columns, file has {len(rows[0])}"
        )
    lookups = [{tok: c for c, tok in enumerate(cb)} for cb in codebooks]
    cells = np.empty((len(rows), n_vars), dtype=np.int64)
    for r, row in enumerate(rows):
        for i, tok in enumerate(row):
            tok = tok.strip()
            if tok in missing:
                cells[r, i] = MISSING
                continue
            code = lookups[i].get(tok)
            if code is None:
                name = column_names[i] if column_names else str(i)
                raise DataError(f"column {name!r}: unseen category {tok!r}")
            cells[r, i] = code
    cards = np.array([max(1, len(cb)) for cb in codebooks], dtype=np.int64)
    return DataMatrix(cells, cards, column_names=column_names,
                      codebooks=[list(cb) for cb in codebooks])


def load_table(path, delimiter: str = ",", missing_tokens=DEFAULT_MISSING_TOKENS,
               has_header: bool = True) -> DataMatrix:
    """Load a CSV/TSV file of categorical data into a DataMatrix."""
    names, rows = parse_delimited(path, delimiter=delimiter, has_header=has_header)
    return encode_columns(rows, missing_tokens=missing_tokens, column_names=names)


def write_table(data: DataMatrix, path, delimiter: str = ",", header: bool = True):
    """Write a DataMatrix back to delimited text (codes or decoded tokens)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        if header:
            names = data.column_names or [f"x{i}" for i in range(data.n_vars)]
            writer.writerow(names)
        if data.codebooks is not None:
            writer.writerows(data.decode())
        else:
            for r in range(data.n_samples):
                writer.writerow(
                    "" if c == MISSING else str(c) for c in data.cells[r]
                )


def discretize_counts(counts, three_level_top: int) -> DataMatrix:
    """Turn a nonnegative count matrix into 2- and 3-level codes.

    Columns must arrive ordered by descending total count. The first
    ``three_level_top`` columns are coded 0 = absent, 1 = present below the
    column's mean count among rows that use it, 2 = at or above that mean
    (ties with the mean round up to 2). Remaining columns are coded 0/1
    for absence/presence.
    """
    counts = np.asarray(counts)
    if counts.ndim != 2:
        raise DataError("counts must be 2-dimensional")
    if np.any(counts < 0):
        raise DataError("counts must be nonnegative")
    n_vars = counts.shape[1]
    if not (0 <= three_level_top <= n_vars):
        raise DataError("three_level_top must be in [0, n_vars]")
    totals = counts.sum(axis=0)
    if np.any(np.diff(totals) > 0):
        raise DataError("columns must be ordered by descending total count")

    cells = (counts > 0).astype(np.int64)
    for i in range(three_level_top):
        col = counts[:, i]
        used = col > 0
        if not used.any():
            continue
        mean = col[used].mean()
        cells[used, i] = np.where(col[used] >= mean, 2, 1)
    cards = np.full(n_vars, 2, dtype=np.int64)
    cards[:three_level_top] = 3
    return DataMatrix(cells, cards)


def column_entropies(data: DataMatrix) -> np.ndarray:
    """Empirical plug-in entropy of each column in nats.

    Missing cells are excluded from that column's distribution; a column
    with no observed cells raises DataError.
    """
    out = np.zeros(data.n_vars)
    for i in range(data.n_vars):
        col = data.cells[:, i]
        col = col[col != MISSING]
        if col.size == 0:
            raise DataError(f"column {data._name(i)} has no observed cells")
        freq = np.bincount(col, minlength=data.cardinalities[i]).astype(float)
        p = freq[freq > 0] / col.size
        out[i] = -np.sum(p * np.log(p))
    return out
