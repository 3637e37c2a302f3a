"""Distance and proximity kernels.

Two kernels share the ``exp(-D^2 / sigma^2)`` form and differ in ``D``:

* ``euclidean`` (the LIME baseline): Euclidean norm over min-max normalized
  values, with a 0/1 mismatch term for categoricals and no wrap-around for
  cyclic features.
* ``contextual``: mean of per-feature distances, each in [0, 1], computed with a
  distance appropriate to the feature kind (arc distance for cyclic features).

All functions broadcast: ``p`` may be one instance of shape ``(d,)`` and ``q``
a matrix of shape ``(m, d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .schema import Dataset, FeatureKind, FeatureSchema, normalize

DEFAULT_CONTEXTUAL_SIGMA = 0.1


class Kernel(str, Enum):
    EUCLIDEAN = "euclidean"
    CONTEXTUAL = "contextual"


@dataclass(frozen=True)
class ProximityConfig:
    sigma: float = DEFAULT_CONTEXTUAL_SIGMA
    kernel: Kernel = Kernel.CONTEXTUAL

    def __post_init__(self) -> None:
        object.__setattr__(self, "kernel", Kernel(self.kernel))
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be a positive finite number, got {self.sigma}")


def default_lime_sigma(n_features: int) -> float:
    """Conventional LIME kernel width, ``0.75 * sqrt(d)`` in normalized space."""
    return 0.75 * math.sqrt(n_features)


def feature_distance(a, b, feature: FeatureSchema):
    """Context-aware distance in [0, 1] between values of one feature."""
    if feature.kind is FeatureKind.CONTINUOUS:
        return np.clip(np.abs(normalize(a, feature) - normalize(b, feature)), 0.0, 1.0)
    if feature.kind is FeatureKind.CYCLIC:
        period = feature.period
        delta = np.mod(np.abs(np.subtract(a, b)), period)
        return np.minimum(delta, period - delta) / (period / 2.0)
    return np.not_equal(a, b).astype(np.float64)


def aggregate_distance(p, q, schema: Sequence[FeatureSchema]):
    """Mean of :func:`feature_distance` over all features."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    total = sum(feature_distance(p[..., j], q[..., j], f) for j, f in enumerate(schema))
    return total / len(schema)


def squared_euclidean(p, q, schema: Sequence[FeatureSchema]):
    """Squared Euclidean distance over normalized values (baseline kernel).

    Cyclic values are reduced modulo the period but not wrapped, so 23:00 and
    00:00 sit almost a full unit apart. Categoricals contribute 0 or 1.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    total = 0.0
    for j, f in enumerate(schema):
        if f.kind is FeatureKind.CATEGORICAL:
            total = total + np.not_equal(p[..., j], q[..., j])
        else:
            total = total + (normalize(p[..., j], f) - normalize(q[..., j], f)) ** 2
    return total


def log_proximity(p, q, config: ProximityConfig, schema: Sequence[FeatureSchema]):
    """Natural log of :func:`proximity`; finite even where the kernel underflows."""
    if config.kernel is Kernel.CONTEXTUAL:
        sq = aggregate_distance(p, q, schema) ** 2
    else:
        sq = squared_euclidean(p, q, schema)
    return -np.asarray(sq, dtype=np.float64) / config.sigma**2


def proximity(p, q, config: ProximityConfig, schema: Sequence[FeatureSchema]):
    out = np.exp(log_proximity(p, q, config, schema))
    return float(out) if out.ndim == 0 else out


def proximity_from_distance(distance, sigma: float):
    """Kernel value for a precomputed distance."""
    return np.exp(-np.square(distance) / sigma**2)


def proximity_vector(x, dataset: Dataset, config: ProximityConfig) -> np.ndarray:
    """Proximity of every training instance to ``x``."""
    return np.exp(log_proximity(x, dataset.X, config, dataset.schema))
