"""Seeded synthetic benchmarks.

``sinusoid``
    ``y = sin(2*pi*v1) + 0.2*v2 + noise`` with ``v1`` cyclic (period 1) and
    ``v2`` continuous in [0, 1].
``piecewise``
    Locally linear, globally non-linear: a triangle wave in ``v1`` whose slope
    flips at fixed knots, a zone-dependent slope on ``v2`` and a categorical
    ``zone``.
``linear``
    ``y = v_lin + 0.7*sin(2*pi*v2) + noise`` where ``v_lin`` is a noisy
    quadratic bowl in ``v1``. The target is globally linear in ``v_lin``;
    dropping that feature leaves a model with the bowl, which is close to
    linear locally but strongly curved across the whole range.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .schema import Dataset, FeatureKind, FeatureSchema, dump_schema, format_cell

TARGET = "y"
BENCHMARKS = ("sinusoid", "piecewise", "linear")


def sinusoid(rows: int, seed: int, noise: float = 0.05) -> Dataset:
    rng = np.random.default_rng(seed)
    v1 = rng.random(rows)
    v2 = rng.random(rows)
    y = np.sin(2 * np.pi * v1) + 0.2 * v2 + noise * rng.standard_normal(rows)
    schema = (
        FeatureSchema("v1", FeatureKind.CYCLIC, period=1.0),
        FeatureSchema("v2", FeatureKind.CONTINUOUS, min=0.0, max=1.0),
    )
    return Dataset.from_arrays(schema, np.column_stack([v1, v2]), y)


def piecewise(rows: int, seed: int, noise: float = 0.02) -> Dataset:
    rng = np.random.default_rng(seed)
    v1 = rng.random(rows)
    v2 = rng.random(rows)
    zone = rng.integers(0, 3, size=rows)
    tri = 1.0 - np.abs(np.mod(4.0 * v1, 2.0) - 1.0)
    slopes = np.array([-1.0, 0.5, 2.0])
    y = 2.0 * tri + slopes[zone] * v2 + noise * rng.standard_normal(rows)
    schema = (
        FeatureSchema("v1", FeatureKind.CONTINUOUS, min=0.0, max=1.0),
        FeatureSchema("v2", FeatureKind.CONTINUOUS, min=0.0, max=1.0),
        FeatureSchema("zone", FeatureKind.CATEGORICAL, categories=("a", "b", "c")),
    )
    return Dataset.from_arrays(schema, np.column_stack([v1, v2, zone.astype(np.float64)]), y)


def linear(rows: int, seed: int, noise: float = 0.02) -> Dataset:
    rng = np.random.default_rng(seed)
    v1 = rng.random(rows)
    v2 = rng.random(rows)
    # v_lin follows a smooth bowl in v1 plus its own variation; the target is
    # linear in v_lin, so without it a model must fall back on the bowl
    v_lin = 3.0 * (2.0 * v1 - 1.0) ** 2 + 0.3 * rng.standard_normal(rows)
    y = v_lin + 0.7 * np.sin(2 * np.pi * v2) + noise * rng.standard_normal(rows)
    schema = (
        FeatureSchema("v1", FeatureKind.CONTINUOUS, min=0.0, max=1.0),
        FeatureSchema("v2", FeatureKind.CONTINUOUS, min=0.0, max=1.0),
        FeatureSchema("v_lin", FeatureKind.CONTINUOUS),
    )
    return Dataset.from_arrays(schema, np.column_stack([v1, v2, v_lin]), y)


_GENERATORS = {"sinusoid": sinusoid, "piecewise": piecewise, "linear": linear}


def generate(name: str, rows: int, seed: int) -> Dataset:
    try:
        gen = _GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; choose from {', '.join(BENCHMARKS)}") from None
    if rows < 2:
        raise ValueError("rows must be >= 2")
    return gen(rows, seed)


def write_benchmark(dataset: Dataset, name: str, out_dir: str | Path) -> tuple[Path, Path]:
    """Write ``<name>.csv`` (features then target) and ``<name>.schema.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{name}.csv"
    schema_path = out / f"{name}.schema.json"
    lines = [",".join(dataset.feature_names + [TARGET])]
    for row, target in zip(dataset.X, dataset.y):
        lines.append(",".join([format_cell(v, f) for v, f in zip(row, dataset.schema)] + [repr(float(target))]))
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    dump_schema(dataset.schema, schema_path)
    return csv_path, schema_path
