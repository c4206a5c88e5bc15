"""Mixed-type tabular data model: feature schema, dataset, instances.

Cells are plain Python values: numbers for numeric columns, numbers or
interned string tokens for binary/categorical columns. Everything is
immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

Cell = float | int | str
Row = tuple[Cell, ...]

KINDS = ("numeric", "binary", "categorical")


class SchemaError(ValueError):
    """Schema construction or conformance failure."""


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _domain_sort_key(v):
    # numbers before strings, each group internally ordered
    if _is_number(v):
        return (0, float(v), "")
    return (1, 0.0, str(v))


@dataclass(frozen=True)
class FeatureSpec:
    """One column: name, kind, observed domain, and actionability.

    domain is (min, max) for numeric columns and the tuple of observed
    values (exactly two for binary) otherwise.
    """

    name: str
    kind: str
    domain: tuple
    actionable: bool = True

    def __post_init__(self):
        if not self.name:
            raise SchemaError("feature name must be non-empty")
        if self.kind not in KINDS:
            raise SchemaError(f"unknown kind {self.kind!r} for feature {self.name!r}")
        object.__setattr__(self, "domain", tuple(self.domain))
        if self.kind == "numeric":
            if len(self.domain) != 2 or not all(_is_number(v) for v in self.domain):
                raise SchemaError(f"numeric domain of {self.name!r} must be (min, max)")
            lo, hi = self.domain
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise SchemaError(f"numeric domain of {self.name!r} must have finite min <= max")
        elif self.kind == "binary":
            if len(set(self.domain)) != 2:
                raise SchemaError(f"binary feature {self.name!r} needs exactly two distinct values")
        else:
            if len(self.domain) == 0:
                raise SchemaError(f"categorical feature {self.name!r} has empty domain")
            if len(set(self.domain)) == 2:
                raise SchemaError(
                    f"feature {self.name!r} has a two-value domain; declare it binary"
                )

    @property
    def numeric_range(self) -> float:
        lo, hi = self.domain
        return float(hi) - float(lo)

    def conforms(self, cell: Cell) -> bool:
        if self.kind == "numeric":
            return _is_number(cell) and math.isfinite(float(cell))
        if self.kind == "binary":
            return cell in self.domain
        return _is_number(cell) or isinstance(cell, str)


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature specs shared by every engine stage."""

    features: tuple[FeatureSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")

    def __len__(self) -> int:
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    def __getitem__(self, j: int) -> FeatureSpec:
        return self.features[j]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def index_of(self, name: str) -> int:
        for j, f in enumerate(self.features):
            if f.name == name:
                return j
        raise SchemaError(f"unknown feature {name!r}")

    def non_actionable(self) -> frozenset[int]:
        return frozenset(j for j, f in enumerate(self.features) if not f.actionable)

    def validate_instance(self, values: Sequence[Cell]) -> Row:
        """Check kind conformance and return the values as an immutable row."""
        if len(values) != len(self.features):
            raise SchemaError(
                f"instance has {len(values)} values, schema has {len(self.features)} features"
            )
        for j, (spec, cell) in enumerate(zip(self.features, values)):
            if not spec.conforms(cell):
                raise SchemaError(
                    f"cell {cell!r} does not conform to {spec.kind} feature {spec.name!r} (index {j})"
                )
        return tuple(values)

    def to_json(self, label: str | None = None) -> dict:
        obj = {
            "features": [
                {
                    "name": f.name,
                    "kind": f.kind,
                    "actionable": f.actionable,
                    "domain": list(f.domain),
                }
                for f in self.features
            ]
        }
        if label is not None:
            obj["label"] = label
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureSchema":
        feats = []
        for entry in obj["features"]:
            feats.append(
                FeatureSpec(
                    name=entry["name"],
                    kind=entry["kind"],
                    domain=tuple(entry["domain"]),
                    actionable=bool(entry.get("actionable", True)),
                )
            )
        return cls(tuple(feats))

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Dataset:
    """Row-major mixed-type table with optional 0..C-1 labels."""

    schema: FeatureSchema
    rows: tuple[Row, ...]
    labels: tuple[int, ...] | None = None
    n_classes: int = 2
    _columns: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        for i, row in enumerate(self.rows):
            try:
                self.schema.validate_instance(row)
            except SchemaError as e:
                raise SchemaError(f"row {i}: {e}") from None
        if self.labels is not None:
            labels = tuple(int(v) for v in self.labels)
            if len(labels) != len(self.rows):
                raise SchemaError("labels length must match row count")
            if any(v < 0 or v >= self.n_classes for v in labels):
                raise SchemaError(f"labels must lie in 0..{self.n_classes - 1}")
            object.__setattr__(self, "labels", labels)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_features(self) -> int:
        return len(self.schema)

    def column(self, j: int) -> np.ndarray:
        """Column j; float64 for numeric columns, object array otherwise. Cached."""
        if j not in self._columns:
            spec = self.schema[j]
            cells = [r[j] for r in self.rows]
            if spec.kind == "numeric":
                arr = np.asarray(cells, dtype=np.float64)
            else:
                arr = np.empty(len(cells), dtype=object)
                arr[:] = cells
            arr.flags.writeable = False
            self._columns[j] = arr
        return self._columns[j]

    def label_array(self) -> np.ndarray:
        if self.labels is None:
            raise SchemaError("dataset has no labels")
        return np.asarray(self.labels, dtype=np.int64)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        rows = tuple(self.rows[i] for i in indices)
        labels = tuple(self.labels[i] for i in indices) if self.labels is not None else None
        return Dataset(self.schema, rows, labels, self.n_classes)


def infer_schema(
    names: Sequence[str],
    rows: Sequence[Sequence[Cell]],
    declared: dict[str, dict] | None = None,
) -> FeatureSchema:
    """Build a schema from observed columns.

    Inference per column: exactly two distinct values -> binary; otherwise
    all-numeric -> numeric; otherwise categorical. `declared` may pin
    kind/actionable/domain per feature name; omitted pieces are inferred.
    """
    if not rows:
        raise SchemaError("no data")
    declared = declared or {}
    feats = []
    for j, name in enumerate(names):
        cells = [r[j] for r in rows]
        distinct = set(cells)
        entry = declared.get(name, {})
        kind = entry.get("kind")
        if kind is None:
            if len(distinct) == 2:
                kind = "binary"
            elif all(_is_number(v) for v in distinct):
                kind = "numeric"
            else:
                kind = "categorical"
        domain = entry.get("domain")
        if domain is None:
            if kind == "numeric":
                try:
                    vals = [float(v) for v in cells]
                except (TypeError, ValueError):
                    raise SchemaError(
                        f"feature {name!r} declared numeric but has non-numeric cells"
                    ) from None
                domain = (min(vals), max(vals))
            else:
                domain = tuple(sorted(distinct, key=_domain_sort_key))
        feats.append(
            FeatureSpec(
                name=name,
                kind=kind,
                domain=tuple(domain),
                actionable=bool(entry.get("actionable", True)),
            )
        )
    return FeatureSchema(tuple(feats))


def identify_binary_features(dataset: Dataset) -> frozenset[int]:
    """Indices whose column takes exactly two distinct values and is actionable."""
    if dataset.n_rows == 0:
        raise SchemaError("no data")
    return frozenset(
        j
        for j in binary_feature_values(dataset)
        if dataset.schema[j].actionable
    )


def binary_feature_values(dataset: Dataset) -> dict[int, tuple[Cell, Cell]]:
    """Per-column observed value pair for every column with exactly two distinct values."""
    if dataset.n_rows == 0:
        raise SchemaError("no data")
    out = {}
    for j in range(dataset.n_features):
        distinct = set(r[j] for r in dataset.rows)
        if len(distinct) == 2:
            a, b = sorted(distinct, key=_domain_sort_key)
            out[j] = (a, b)
    return out


# ---------------------------------------------------------------------------
# CSV / JSON I/O.
# CSV: UTF-8, comma separated, '.' decimal point, header row. Rows with
# missing cells are rejected. Schema JSON:
# {"features":[{"name","kind","actionable","domain"}], "label": "<column>"}


def _parse_csv_columns(header: list[str], raw_rows: list[list[str]]) -> list[list[Cell]]:
    parsed_rows: list[list[Cell]] = [list(r) for r in raw_rows]
    for j in range(len(header)):
        cells = [r[j] for r in raw_rows]
        try:
            floats = [float(c) for c in cells]
        except ValueError:
            continue
        for i, v in enumerate(floats):
            parsed_rows[i][j] = v
    return parsed_rows


def load_dataset(
    csv_path,
    schema_json: dict | None = None,
    label_column: str | None = None,
    n_classes: int = 2,
) -> Dataset:
    """Load a CSV into a Dataset, inferring any schema pieces not declared."""
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("no data") from None
        raw_rows = []
        for i, row in enumerate(reader):
            if len(row) != len(header) or any(c == "" for c in row):
                raise SchemaError(f"row {i} has missing cells")
            raw_rows.append(row)
    if not raw_rows:
        raise SchemaError("no data")

    declared: dict[str, dict] = {}
    if schema_json is not None:
        if label_column is None:
            label_column = schema_json.get("label")
        for entry in schema_json.get("features", []):
            d = {"actionable": entry.get("actionable", True)}
            if "kind" in entry:
                d["kind"] = entry["kind"]
            if "domain" in entry:
                d["domain"] = tuple(entry["domain"])
            declared[entry["name"]] = d

    parsed = _parse_csv_columns(header, raw_rows)
    labels = None
    if label_column is not None:
        if label_column not in header:
            raise SchemaError(f"label column {label_column!r} not in CSV header")
        lj = header.index(label_column)
        try:
            labels = tuple(int(r[lj]) for r in parsed)
        except (TypeError, ValueError):
            raise SchemaError(f"label column {label_column!r} must be integer-valued") from None
        names = [h for h in header if h != label_column]
        rows = [tuple(c for j, c in enumerate(r) if j != lj) for r in parsed]
    else:
        names = header
        rows = [tuple(r) for r in parsed]

    schema = infer_schema(names, rows, declared)
    return Dataset(schema, tuple(rows), labels, n_classes)


def _format_cell(cell: Cell) -> str:
    if isinstance(cell, str):
        return cell
    if isinstance(cell, int):
        return str(cell)
    return repr(float(cell))


def save_dataset(dataset: Dataset, csv_path, label_column: str = "label") -> None:
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = list(dataset.schema.names)
        if dataset.labels is not None:
            header.append(label_column)
        writer.writerow(header)
        for i, row in enumerate(dataset.rows):
            out = [_format_cell(c) for c in row]
            if dataset.labels is not None:
                out.append(str(dataset.labels[i]))
            writer.writerow(out)


def save_schema(schema: FeatureSchema, path, label: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema.to_json(label=label), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_schema(path) -> tuple[FeatureSchema, str | None]:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return FeatureSchema.from_json(obj), obj.get("label")
