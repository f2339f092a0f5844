"""Typed instance tables: ARFF/CSV parsing, summaries and stratified splitting.

A :class:`Dataset` keeps the non-class attributes as a float matrix ``X``
(nominal cells hold the index of their value, missing cells are NaN) and the
class column as integer codes ``y``. Both arrays are read-only, so datasets can
be shared freely between evaluators.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

MISSING = "?"


class ArffError(ValueError):
    """Malformed ARFF or CSV input. Carries the 1-based line number if known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(ValueError):
    """The declared attributes cannot form a classification dataset."""


@dataclass(frozen=True)
class Attribute:
    name: str
    values: tuple[str, ...] | None = None  # None means numeric

    def __post_init__(self):
        if self.values is not None:
            if not self.values:
                raise SchemaError(f"nominal attribute {self.name!r} has no values")
            if len(set(self.values)) != len(self.values):
                raise SchemaError(f"nominal attribute {self.name!r} has duplicate values")

    @property
    def is_nominal(self) -> bool:
        return self.values is not None

    @property
    def kind(self) -> str:
        return "nominal" if self.is_nominal else "numeric"


class Dataset:
    """Instances over an ordered attribute list with one nominal class attribute."""

    def __init__(self, attributes: Sequence[Attribute], class_index: int,
                 X: np.ndarray, y: np.ndarray, relation: str = "data",
                 row_ids: np.ndarray | None = None):
        self.attributes = tuple(attributes)
        self.class_index = int(class_index)
        self.relation = relation
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaError("attribute names must be unique")
        if not 0 <= self.class_index < len(self.attributes):
            raise SchemaError("class index out of range")
        if not self.class_attribute.is_nominal:
            raise SchemaError(f"class attribute {self.class_attribute.name!r} must be nominal")
        X = np.array(X, dtype=float, copy=True).reshape(len(y), len(self.attributes) - 1)
        y = np.array(y, dtype=np.int64, copy=True)
        for j, att in enumerate(self.features):
            if att.is_nominal:
                col = X[:, j]
                known = col[~np.isnan(col)]
                if known.size and (known.min() < 0 or known.max() >= len(att.values)
                                   or np.any(known != np.floor(known))):
                    raise SchemaError(f"invalid nominal code in column {att.name!r}")
        if y.size and (y.min() < 0 or y.max() >= len(self.classes)):
            raise SchemaError("invalid class code")
        if row_ids is None:
            row_ids = np.arange(len(y))
        row_ids = np.array(row_ids, dtype=np.int64, copy=True)
        for arr in (X, y, row_ids):
            arr.setflags(write=False)
        self.X, self.y, self.row_ids = X, y, row_ids

    @property
    def class_attribute(self) -> Attribute:
        return self.attributes[self.class_index]

    @property
    def classes(self) -> tuple[str, ...]:
        return self.class_attribute.values

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def features(self) -> tuple[Attribute, ...]:
        return tuple(a for i, a in enumerate(self.attributes) if i != self.class_index)

    def __len__(self) -> int:
        return len(self.y)

    def __repr__(self) -> str:
        return (f"Dataset({self.relation!r}, n={len(self)}, "
                f"features={len(self.features)}, classes={self.classes})")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.attributes == other.attributes
                and self.class_index == other.class_index
                and np.array_equal(self.y, other.y)
                and np.array_equal(self.X, other.X, equal_nan=True))

    __hash__ = None

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.n_classes)

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.attributes, self.class_index, self.X[idx], self.y[idx],
                       self.relation, self.row_ids[idx])

    def rows(self) -> list[list]:
        """Cells in declaration order: str for nominal, float for numeric, None if missing."""
        out = []
        feats = self.features
        for i in range(len(self)):
            row, k = [], 0
            for a_idx, att in enumerate(self.attributes):
                if a_idx == self.class_index:
                    row.append(self.classes[self.y[i]])
                    continue
                v = self.X[i, k]
                k += 1
                if math.isnan(v):
                    row.append(None)
                elif feats[k - 1].is_nominal:
                    row.append(att.values[int(v)])
                else:
                    row.append(float(v))
            out.append(row)
        return out


def _from_cells(attributes, class_index, rows, relation, lines=None) -> Dataset:
    """Build a Dataset from string cells, validating every value."""
    n_feat = len(attributes) - 1
    X = np.full((len(rows), n_feat), np.nan)
    y = np.zeros(len(rows), dtype=np.int64)
    lookup = [{v: i for i, v in enumerate(a.values)} if a.is_nominal else None
              for a in attributes]
    for r, cells in enumerate(rows):
        line = lines[r] if lines else None
        if len(cells) != len(attributes):
            raise ArffError(f"expected {len(attributes)} values, got {len(cells)}", line)
        k = 0
        for a_idx, (att, cell) in enumerate(zip(attributes, cells)):
            missing = cell is None
            if a_idx == class_index:
                if missing:
                    raise ArffError(f"missing class value in row {r + 1}", line)
                if cell not in lookup[a_idx]:
                    raise ArffError(f"undeclared class value {cell!r}", line)
                y[r] = lookup[a_idx][cell]
                continue
            if not missing:
                if att.is_nominal:
                    if cell not in lookup[a_idx]:
                        raise ArffError(
                            f"value {cell!r} not declared for attribute {att.name!r}", line)
                    X[r, k] = lookup[a_idx][cell]
                else:
                    try:
                        X[r, k] = float(cell)
                    except ValueError:
                        raise ArffError(
                            f"non-numeric value {cell!r} in column {att.name!r}, row {r + 1}",
                            line) from None
                    if not math.isfinite(X[r, k]):
                        raise ArffError(f"non-finite value in column {att.name!r}", line)
            k += 1
    ds = Dataset(attributes, class_index, X, y, relation)
    if np.count_nonzero(ds.class_counts()) < 2:
        raise SchemaError("at least two distinct class values are required")
    return ds


# --------------------------------------------------------------------------- ARFF

def _split_values(text: str, line: int | None = None) -> list[str]:
    """Split a comma separated list honouring single/double quotes."""
    out, buf, quote, i = [], [], None, 0
    was_quoted = False
    while i < len(text):
        ch = text[i]
        if quote:
            if ch == "\\" and i + 1 < len(text):
                buf.append(text[i + 1])
                i += 2
                continue
            if ch == quote:
                quote = None
            else:
                buf.append(ch)
        elif ch in "'\"":
            if was_quoted or "".join(buf).strip():
                raise ArffError("misplaced quote", line)
            buf, quote, was_quoted = [], ch, True
        elif ch == ",":
            out.append(_finish(buf, was_quoted))
            buf, was_quoted = [], False
        elif was_quoted:
            if not ch.isspace():
                raise ArffError("text after closing quote", line)
        else:
            buf.append(ch)
        i += 1
    if quote:
        raise ArffError("unterminated quote", line)
    out.append(_finish(buf, was_quoted))
    return out


def _finish(buf, was_quoted):
    s = "".join(buf)
    # quoted '?' is a literal value, not the missing marker
    if was_quoted:
        return "\x00" + s
    return s.strip()


def _unquote(s: str) -> str:
    return s[1:] if s.startswith("\x00") else s


def _read_name(rest: str, line: int) -> tuple[str, str]:
    rest = rest.strip()
    if not rest:
        raise ArffError("missing attribute name", line)
    if rest[0] in "'\"":
        end = rest.find(rest[0], 1)
        if end < 0:
            raise ArffError("unterminated attribute name", line)
        return rest[1:end], rest[end + 1:].strip()
    parts = rest.split(None, 1)
    return parts[0], (parts[1].strip() if len(parts) > 1 else "")


def parse_arff(text: str, class_attribute: str | None = None) -> Dataset:
    """Parse the dense ARFF subset: nominal and numeric attributes, '?' missing.

    The class defaults to the last nominal attribute; pass ``class_attribute``
    to pick another one by name.
    """
    relation, attributes, rows, row_lines = "data", [], [], []
    in_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if in_data:
            if line.startswith("{"):
                raise ArffError("sparse ARFF rows are not supported", lineno)
            cells = _split_values(line, lineno)
            rows.append(cells)
            row_lines.append(lineno)
            continue
        low = line.lower()
        if low.startswith("@relation"):
            relation = _unquote_token(line[len("@relation"):].strip())
        elif low.startswith("@attribute"):
            name, spec = _read_name(line[len("@attribute"):], lineno)
            if spec.startswith("{"):
                if not spec.endswith("}"):
                    raise ArffError("unterminated nominal value list", lineno)
                values = tuple(_unquote(v) for v in _split_values(spec[1:-1], lineno))
                if any(v == "" for v in values):
                    raise ArffError("empty nominal value", lineno)
                try:
                    attributes.append(Attribute(name, values))
                except SchemaError as exc:
                    raise ArffError(str(exc), lineno) from None
            elif spec.lower() in ("numeric", "real", "integer"):
                attributes.append(Attribute(name))
            else:
                raise ArffError(f"unsupported attribute type {spec!r}", lineno)
        elif low.startswith("@data"):
            in_data = True
        else:
            raise ArffError(f"unexpected header line {line!r}", lineno)
    if not in_data:
        raise ArffError("no @data section")
    if len({a.name for a in attributes}) != len(attributes):
        raise SchemaError("attribute names must be unique")
    class_index = _pick_class(attributes, class_attribute)
    cells = [[_cell(c) for c in row] for row in rows]
    return _from_cells(attributes, class_index, cells, relation, row_lines)


def _cell(c: str) -> str:
    # quoted cells are literal; unquoted '?' or empty is missing
    if c.startswith("\x00"):
        return c[1:]
    return None if c in (MISSING, "") else c


def _unquote_token(s: str) -> str:
    if len(s) >= 2 and s[0] == s[-1] and s[0] in "'\"":
        return s[1:-1]
    return s


def _pick_class(attributes, class_attribute) -> int:
    if class_attribute is not None:
        for i, a in enumerate(attributes):
            if a.name == class_attribute:
                if not a.is_nominal:
                    raise SchemaError(f"class attribute {class_attribute!r} is not nominal")
                return i
        raise SchemaError(f"no attribute named {class_attribute!r}")
    for i in range(len(attributes) - 1, -1, -1):
        if attributes[i].is_nominal:
            return i
    raise SchemaError("no nominal attribute usable as class")


def _quote(value: str) -> str:
    if value == "" or any(ch in value for ch in " ,'\"{}%\t\\") or value == MISSING:
        return "'" + value.replace("\\", "\\\\").replace("'", "\\'") + "'"
    return value


def serialize_arff(ds: Dataset) -> str:
    out = io.StringIO()
    out.write(f"@relation {_quote(ds.relation)}\n\n")
    for att in ds.attributes:
        if att.is_nominal:
            spec = "{" + ",".join(_quote(v) for v in att.values) + "}"
        else:
            spec = "numeric"
        out.write(f"@attribute {_quote(att.name)} {spec}\n")
    out.write("\n@data\n")
    for row in ds.rows():
        cells = []
        for att, v in zip(ds.attributes, row):
            if v is None:
                cells.append(MISSING)
            elif att.is_nominal:
                cells.append(_quote(v))
            else:
                cells.append(repr(v))
        out.write(",".join(cells) + "\n")
    return out.getvalue()


# --------------------------------------------------------------------------- CSV

class ColumnSpec(NamedTuple):
    name: str
    kind: str  # numeric | nominal | class
    values: tuple[str, ...] | None = None


def parse_schema(text: str) -> list[ColumnSpec]:
    """Sidecar schema: one ``name,kind[,value,...]`` line per column.

    ``kind`` is ``numeric``, ``nominal`` or ``class``. Nominal and class
    columns may list their values; otherwise values are taken in order of
    first appearance in the data.
    """
    cols = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in next(csv.reader([line]))]
        if len(parts) < 2:
            raise ArffError("schema line needs name and kind", lineno)
        name, kind = parts[0], parts[1].lower()
        if kind not in ("numeric", "nominal", "class"):
            raise ArffError(f"unknown column kind {kind!r}", lineno)
        values = tuple(parts[2:]) or None
        if values is not None and kind == "numeric":
            raise ArffError("numeric columns take no value list", lineno)
        cols.append(ColumnSpec(name, kind, values))
    if sum(c.kind == "class" for c in cols) != 1:
        raise SchemaError("schema must declare exactly one class column")
    return cols


def parse_csv(text: str, schema: Sequence[ColumnSpec]) -> Dataset:
    """Parse CSV with a header row; empty cells and '?' are missing."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ArffError("empty CSV input", 1) from None
    if header != [c.name for c in schema]:
        raise ArffError(f"header {header} does not match schema", 1)
    rows, lines = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        rows.append([None if c.strip() in ("", MISSING) else c.strip() for c in row])
        lines.append(lineno)
    attributes = []
    for j, col in enumerate(schema):
        if col.kind == "numeric":
            attributes.append(Attribute(col.name))
            continue
        values = col.values
        if values is None:
            seen = {}
            for row in rows:
                if j < len(row) and row[j] is not None:
                    seen.setdefault(row[j], None)
            values = tuple(seen)
            if not values:
                raise SchemaError(f"nominal column {col.name!r} has no values")
        attributes.append(Attribute(col.name, tuple(values)))
    class_index = next(j for j, c in enumerate(schema) if c.kind == "class")
    return _from_cells(attributes, class_index, rows, "data", lines)


def load_dataset(path, class_attribute: str | None = None) -> Dataset:
    """Load ``*.arff`` directly, or ``*.csv`` with its ``<stem>.schema`` sidecar."""
    from pathlib import Path

    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        schema_path = path.with_suffix(".schema")
        schema = parse_schema(schema_path.read_text())
        ds = parse_csv(text, schema)
        ds.relation = path.stem
        return ds
    return parse_arff(text, class_attribute)


# --------------------------------------------------------------------------- summaries

class DatasetSummary(NamedTuple):
    n_inst: int
    n_num: int
    n_nom: int
    pct_missing: float
    class_bal: float
    n_classes: int


def summarize(ds: Dataset) -> DatasetSummary:
    feats = ds.features
    n_num = sum(not a.is_nominal for a in feats)
    cells = ds.X.size
    pct = 100.0 * np.isnan(ds.X).sum() / cells if cells else 0.0
    counts = ds.class_counts()
    present = counts[counts > 0]
    return DatasetSummary(len(ds), n_num, len(feats) - n_num, float(pct),
                          float(present.min() / present.max()), int(present.size))


# --------------------------------------------------------------------------- splitting

@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: tuple[int, ...]

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.assignments) == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.assignments) != fold)


def stratified_kfold(ds: Dataset, k: int, seed: int) -> FoldPlan:
    """Per-class round robin over a seed-shuffled order.

    Rows are shuffled, stably grouped by class, and dealt to folds
    ``0, 1, ..., k-1, 0, ...`` without restarting between classes, so every
    fold is non-empty and per-class fold counts differ by at most one.
    """
    n = len(ds)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of instances ({n})")
    order = np.random.default_rng(seed).permutation(n)
    order = order[np.argsort(ds.y[order], kind="stable")]
    assign = np.empty(n, dtype=np.int64)
    assign[order] = np.arange(n) % k
    return FoldPlan(k, tuple(int(a) for a in assign))


def _stratified_holdout(y: np.ndarray, n_classes: int, fraction: float,
                        rng: np.random.Generator) -> np.ndarray:
    """Boolean mask of held-out rows; per-class sizes by largest remainder."""
    n = len(y)
    total = int(round(n * fraction))
    counts = np.bincount(y, minlength=n_classes)
    exact = counts * fraction
    alloc = np.floor(exact).astype(int)
    short = total - alloc.sum()
    if short > 0:
        order = np.argsort(-(exact - alloc), kind="stable")
        alloc[order[:short]] += 1
    mask = np.zeros(n, dtype=bool)
    for c in range(n_classes):
        members = np.flatnonzero(y == c)
        if members.size:
            chosen = rng.permutation(members)[:alloc[c]]
            mask[chosen] = True
    return mask


def meta_split(train: Dataset, valid_fraction: float, seed) -> tuple[Dataset, Dataset]:
    """Stratified (meta_train, meta_valid) partition of ``train``."""
    if not 0 < valid_fraction < 1:
        raise ValueError("valid_fraction must lie strictly between 0 and 1")
    mask = _stratified_holdout(train.y, train.n_classes, valid_fraction,
                               np.random.default_rng(seed))
    if mask.all() or not mask.any():
        raise ValueError(f"valid_fraction={valid_fraction} leaves an empty part "
                         f"for {len(train)} instances")
    return train.subset(np.flatnonzero(~mask)), train.subset(np.flatnonzero(mask))
