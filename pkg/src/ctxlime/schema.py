"""Feature context, dataset ingestion and per-feature normalization.

Instances are plain ``float64`` vectors in schema order. Categorical entries
hold the index of the value in the feature's ``categories`` list.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

import numpy as np


class SchemaError(ValueError):
    """Malformed schema file or a feature definition that breaks its invariants."""


class DatasetError(ValueError):
    """CSV contents that cannot be mapped onto the schema."""


class FeatureKind(str, Enum):
    CONTINUOUS = "continuous"
    CYCLIC = "cyclic"
    CATEGORICAL = "categorical"


_KIND_FIELDS = {
    FeatureKind.CONTINUOUS: {"min", "max"},
    FeatureKind.CYCLIC: {"period"},
    FeatureKind.CATEGORICAL: {"categories"},
}
_OPTIONAL_FIELDS = {"min", "max", "period", "categories"}


@dataclass(frozen=True)
class FeatureSchema:
    """Context for one feature.

    Continuous features may be declared without bounds; :func:`load_dataset`
    then fills ``min``/``max`` from the training data.
    """

    name: str
    kind: FeatureKind
    min: float | None = None
    max: float | None = None
    period: float | None = None
    categories: tuple[Any, ...] | None = None

    def __post_init__(self) -> None:
        kind = FeatureKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not self.name:
            raise SchemaError("feature name must be non-empty")
        present = {f for f in _OPTIONAL_FIELDS if getattr(self, f) is not None}
        stray = present - _KIND_FIELDS[kind]
        if stray:
            raise SchemaError(
                f"feature {self.name!r}: fields {sorted(stray)} not allowed for kind {kind.value}"
            )
        if kind is FeatureKind.CONTINUOUS:
            if (self.min is None) != (self.max is None):
                raise SchemaError(f"feature {self.name!r}: give both min and max or neither")
            if self.min is not None:
                if not (math.isfinite(self.min) and math.isfinite(self.max)):
                    raise SchemaError(f"feature {self.name!r}: bounds must be finite")
                if not self.min < self.max:
                    raise SchemaError(f"feature {self.name!r}: min < max violated")
        elif kind is FeatureKind.CYCLIC:
            if self.period is None or not (self.period > 0 and math.isfinite(self.period)):
                raise SchemaError(f"feature {self.name!r}: cyclic feature needs period > 0")
        else:
            cats = self.categories
            if cats is None or len(cats) < 2:
                raise SchemaError(f"feature {self.name!r}: need at least 2 categories")
            labels = [str(c) for c in cats]
            if len(set(labels)) != len(labels):
                raise SchemaError(f"feature {self.name!r}: categories must be distinct")
            object.__setattr__(self, "categories", tuple(cats))

    @property
    def has_bounds(self) -> bool:
        return self.kind is not FeatureKind.CONTINUOUS or self.min is not None

    @property
    def span(self) -> float:
        """Width used to map raw values onto the unit interval."""
        if self.kind is FeatureKind.CONTINUOUS:
            if self.min is None:
                raise SchemaError(f"feature {self.name!r} has no bounds yet")
            return self.max - self.min
        if self.kind is FeatureKind.CYCLIC:
            return self.period
        return 1.0

    def category_index(self, label: Any) -> int:
        key = str(label)
        for i, c in enumerate(self.categories):
            if str(c) == key:
                return i
        raise DatasetError(f"feature {self.name!r}: value {label!r} not in categories")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"name": self.name, "kind": self.kind.value}
        for key in ("min", "max", "period"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        if self.categories is not None:
            out["categories"] = list(self.categories)
        return out


def schema_from_dicts(entries: Sequence[dict[str, Any]]) -> tuple[FeatureSchema, ...]:
    features = []
    seen = set()
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise SchemaError(f"entry {i} is not an object")
        unknown = set(entry) - {"name", "kind"} - _OPTIONAL_FIELDS
        if unknown:
            raise SchemaError(f"entry {i}: unknown fields {sorted(unknown)}")
        if "name" not in entry or "kind" not in entry:
            raise SchemaError(f"entry {i}: 'name' and 'kind' are required")
        try:
            kind = FeatureKind(entry["kind"])
        except ValueError:
            raise SchemaError(f"entry {i}: unknown kind {entry['kind']!r}") from None
        cats = entry.get("categories")
        feature = FeatureSchema(
            name=str(entry["name"]),
            kind=kind,
            min=_as_float(entry.get("min"), entry["name"]),
            max=_as_float(entry.get("max"), entry["name"]),
            period=_as_float(entry.get("period"), entry["name"]),
            categories=tuple(cats) if cats is not None else None,
        )
        if feature.name in seen:
            raise SchemaError(f"duplicate feature name {feature.name!r}")
        seen.add(feature.name)
        features.append(feature)
    if not features:
        raise SchemaError("schema has no features")
    return tuple(features)


def _as_float(value: Any, name: str) -> float | None:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"feature {name!r}: expected a number, got {value!r}")
    return float(value)


def load_schema(path: str | Path) -> tuple[FeatureSchema, ...]:
    """Read a JSON array of feature definitions, preserving file order."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, list):
        raise SchemaError(f"{path}: top level must be a JSON array")
    return schema_from_dicts(raw)


def dump_schema(schema: Sequence[FeatureSchema], path: str | Path) -> None:
    Path(path).write_text(json.dumps([f.to_dict() for f in schema], indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class FeatureStats:
    """Training statistics consumed by the Gaussian baseline sampler.

    ``std`` uses the n-1 denominator. For categorical features ``mean``/``std``
    are NaN and ``frequencies`` holds one entry per category (summing to 1).
    """

    mean: np.ndarray
    std: np.ndarray
    low: np.ndarray
    high: np.ndarray
    frequencies: tuple[np.ndarray | None, ...]

    def frequency_table(self, schema: Sequence[FeatureSchema], j: int) -> dict[str, float]:
        freqs = self.frequencies[j]
        if freqs is None:
            raise KeyError(schema[j].name)
        return {str(c): float(p) for c, p in zip(schema[j].categories, freqs)}


def compute_stats(schema: Sequence[FeatureSchema], X: np.ndarray) -> FeatureStats:
    d = len(schema)
    mean = np.full(d, np.nan)
    std = np.full(d, np.nan)
    freqs: list[np.ndarray | None] = []
    for j, feat in enumerate(schema):
        col = X[:, j]
        if feat.kind is FeatureKind.CATEGORICAL:
            counts = np.bincount(col.astype(np.int64), minlength=len(feat.categories))
            freqs.append(counts / counts.sum())
        else:
            mean[j] = col.mean()
            std[j] = col.std(ddof=1)
            freqs.append(None)
    return FeatureStats(mean=mean, std=std, low=X.min(axis=0), high=X.max(axis=0), frequencies=tuple(freqs))


@dataclass(frozen=True)
class Dataset:
    """Training instances and targets in schema order. Immutable after construction."""

    schema: tuple[FeatureSchema, ...]
    X: np.ndarray
    y: np.ndarray
    stats: FeatureStats = field(repr=False)

    @classmethod
    def from_arrays(cls, schema: Sequence[FeatureSchema], X: Any, y: Any) -> Dataset:
        X = np.array(X, dtype=np.float64, ndmin=2)
        y = np.array(y, dtype=np.float64).ravel()
        schema = tuple(schema)
        if X.shape[1] != len(schema):
            raise DatasetError(f"expected {len(schema)} columns, got {X.shape[1]}")
        if X.shape[0] != y.shape[0]:
            raise DatasetError("instances and targets differ in length")
        if X.shape[0] < 2:
            raise DatasetError("dataset needs at least 2 rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DatasetError("dataset contains missing or non-finite values")
        for j, feat in enumerate(schema):
            if feat.kind is FeatureKind.CATEGORICAL:
                col = X[:, j]
                if np.any(col != np.round(col)) or col.min() < 0 or col.max() >= len(feat.categories):
                    raise DatasetError(f"feature {feat.name!r}: category index out of range")
        schema = tuple(_resolve_bounds(f, X[:, j]) for j, f in enumerate(schema))
        X.setflags(write=False)
        y.setflags(write=False)
        return cls(schema=schema, X=X, y=y, stats=compute_stats(schema, X))

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return len(self.schema)

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.schema]

    def drop_feature(self, name: str) -> Dataset:
        j = self.feature_names.index(name)
        keep = [i for i in range(self.n_features) if i != j]
        return Dataset.from_arrays([self.schema[i] for i in keep], self.X[:, keep], self.y)


def _resolve_bounds(feat: FeatureSchema, col: np.ndarray) -> FeatureSchema:
    if feat.has_bounds:
        return feat
    lo, hi = float(col.min()), float(col.max())
    if not lo < hi:
        # constant column: any non-degenerate span keeps normalization defined
        hi = lo + 1.0
    return replace(feat, min=lo, max=hi)


def load_dataset(path: str | Path, schema: Sequence[FeatureSchema], target_column: str) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        index = {name: i for i, name in enumerate(header)}
        missing = [f.name for f in schema if f.name not in index]
        if target_column not in index:
            missing.append(target_column)
        if missing:
            raise DatasetError(f"{path}: missing columns {missing}")
        rows, targets = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DatasetError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            values = [_parse_cell(row[index[f.name]], f, lineno) for f in schema]
            rows.append(values)
            targets.append(_parse_number(row[index[target_column]], target_column, lineno))
    if len(rows) < 2:
        raise DatasetError(f"{path}: dataset needs at least 2 rows, got {len(rows)}")
    return Dataset.from_arrays(schema, rows, targets)


def _parse_number(cell: str, name: str, lineno: int) -> float:
    text = cell.strip()
    try:
        value = float(text)
    except ValueError:
        raise DatasetError(f"line {lineno}: cannot parse {cell!r} for {name!r}") from None
    if not math.isfinite(value):
        raise DatasetError(f"line {lineno}: missing or non-finite value for {name!r}")
    return value


def _parse_cell(cell: str, feat: FeatureSchema, lineno: int) -> float:
    if feat.kind is FeatureKind.CATEGORICAL:
        text = cell.strip()
        if text == "":
            raise DatasetError(f"line {lineno}: missing value for {feat.name!r}")
        try:
            return float(feat.category_index(text))
        except DatasetError as exc:
            raise DatasetError(f"line {lineno}: {exc}") from None
    return _parse_number(cell, feat.name, lineno)


def normalize(value: Any, feature: FeatureSchema) -> Any:
    """Map a raw value onto the unit scale of its feature.

    Continuous values are min-max scaled and may fall outside [0, 1] when the
    raw value is out of bounds. Cyclic values are reduced modulo the period.
    Categorical indices pass through unchanged.
    """
    if feature.kind is FeatureKind.CONTINUOUS:
        return (value - feature.min) / feature.span
    if feature.kind is FeatureKind.CYCLIC:
        return np.mod(value, feature.period) / feature.period
    return value


def denormalize(value: Any, feature: FeatureSchema) -> Any:
    if feature.kind is FeatureKind.CONTINUOUS:
        return feature.min + value * feature.span
    if feature.kind is FeatureKind.CYCLIC:
        return value * feature.period
    return value


def normalize_matrix(X: np.ndarray, schema: Sequence[FeatureSchema]) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    out = np.empty_like(X)
    for j, feat in enumerate(schema):
        out[..., j] = normalize(X[..., j], feat)
    return out


def instance_from_labels(values: Sequence[Any], schema: Sequence[FeatureSchema]) -> np.ndarray:
    """Build an instance vector from raw values, mapping category labels to indices."""
    if len(values) != len(schema):
        raise DatasetError(f"expected {len(schema)} values, got {len(values)}")
    out = np.empty(len(schema))
    for j, (v, feat) in enumerate(zip(values, schema)):
        out[j] = feat.category_index(v) if feat.kind is FeatureKind.CATEGORICAL else float(v)
    return out


def format_cell(value: float, feature: FeatureSchema) -> str:
    if feature.kind is FeatureKind.CATEGORICAL:
        return str(feature.categories[int(value)])
    return repr(float(value))
