"""Synthetic neighbourhoods around the instance being explained.

``lime_perturb`` is the Gaussian baseline: every feature is perturbed
independently, scaled by the training standard deviation, and never clipped.

``chilli_perturb`` interpolates between ``x`` and training instances drawn
with probability proportional to their contextual proximity to ``x``. One
interpolation factor is shared by all features of a perturbation, so the
dependencies present in the training data survive.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .proximity import Kernel, ProximityConfig, log_proximity, proximity
from .schema import Dataset, FeatureKind, FeatureSchema, format_cell

logger = logging.getLogger(__name__)

DEFAULT_NUM_PERTURBATIONS = 1000


class Method(str, Enum):
    LIME = "lime"
    CHILLI = "chilli"


class ModelError(RuntimeError):
    """The base model failed on a batch of perturbations."""

    def __init__(self, batch_index: int, cause: BaseException):
        super().__init__(f"base model failed on batch {batch_index}: {cause}")
        self.batch_index = batch_index


@dataclass(frozen=True)
class PerturbationSet:
    """Perturbations ``Z`` of ``origin`` with base-model predictions and kernel weights."""

    schema: tuple[FeatureSchema, ...]
    origin: np.ndarray
    perturbations: np.ndarray
    predictions: np.ndarray
    weights: np.ndarray
    method: Method
    seed: int
    config: ProximityConfig
    constant_features: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        n = self.perturbations.shape[0]
        if not (self.predictions.shape == (n,) and self.weights.shape == (n,)):
            raise ValueError("perturbations, predictions and weights differ in length")

    def __len__(self) -> int:
        return self.perturbations.shape[0]

    def out_of_bounds_count(self) -> int:
        return count_out_of_bounds(self.perturbations, self.schema)

    def to_csv(self, path: str | Path) -> None:
        """One row per perturbation: feature values, then prediction and weight."""
        write_perturbation_csv(path, self.schema, self.perturbations, self.predictions, self.weights)


@dataclass(frozen=True)
class AnchorDistribution:
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        p = self.probabilities
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("anchor probabilities must be non-negative and sum to 1")


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def lime_perturb(x, dataset: Dataset, n: int, rng_seed) -> tuple[np.ndarray, tuple[str, ...]]:
    """Gaussian perturbations centred on ``x``.

    Returns the ``(n, d)`` perturbation matrix and the names of non-categorical
    features held at ``x`` because their training std is zero.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(rng_seed)
    x = np.asarray(x, dtype=np.float64)
    stats = dataset.stats
    Z = np.empty((n, dataset.n_features))
    constant = []
    for j, feat in enumerate(dataset.schema):
        if feat.kind is FeatureKind.CATEGORICAL:
            freqs = stats.frequencies[j]
            Z[:, j] = rng.choice(len(freqs), size=n, p=freqs)
            continue
        eps = rng.standard_normal(n)
        std = stats.std[j]
        if std > 0:
            Z[:, j] = x[j] + std * eps
        else:
            Z[:, j] = x[j]
            constant.append(feat.name)
    if constant:
        logger.warning("zero training std, holding constant: %s", ", ".join(constant))
    return Z, tuple(constant)


def anchor_weights(x, dataset: Dataset, config: ProximityConfig, mode: str = "sum") -> np.ndarray:
    """Anchor weights from proximity; ``mode='max'`` divides by the largest proximity."""
    logp = log_proximity(x, dataset.X, config, dataset.schema)
    # shift by the max log-proximity so tiny kernels do not underflow to all-zero
    w = np.exp(logp - logp.max())
    if mode == "max":
        return w
    if mode != "sum":
        raise ValueError(f"unknown anchor normalization {mode!r}")
    return w / w.sum()


def anchor_distribution(x, dataset: Dataset, config: ProximityConfig) -> AnchorDistribution:
    return AnchorDistribution(anchor_weights(x, dataset, config, "sum"))


def interpolate(x, anchor, factor: float, schema: Sequence[FeatureSchema]) -> np.ndarray:
    """Point at fraction ``factor`` of the way from ``x`` to ``anchor``.

    Cyclic features travel along the shorter arc and are wrapped back into
    ``[0, period)``. Categoricals snap to ``x`` for ``factor <= 0.5`` and to
    ``anchor`` otherwise.
    """
    x = np.asarray(x, dtype=np.float64)
    anchor = np.asarray(anchor, dtype=np.float64)
    if factor == 1.0:
        return anchor.copy()
    z = np.empty_like(x)
    for j, feat in enumerate(schema):
        a, b = x[j], anchor[j]
        if feat.kind is FeatureKind.CATEGORICAL:
            z[j] = a if factor <= 0.5 else b
        elif feat.kind is FeatureKind.CYCLIC:
            z[j] = float(_interp_cyclic(a, b, factor, feat.period))
        else:
            z[j] = min(max((1.0 - factor) * a + factor * b, min(a, b)), max(a, b))
    return z


def _interp_cyclic(a, b, factor, period: float):
    """Shorter-arc interpolation; endpoints are reproduced exactly when no wrap is needed."""
    a = np.mod(a, period)
    b = np.mod(b, period)
    diff = b - a
    wraps = np.abs(diff) > period / 2
    straight = (1.0 - factor) * a + factor * b
    arc = np.mod(a + factor * (diff - np.sign(diff) * period), period)
    # np.mod can round a tiny negative value up to the period itself
    arc = np.where(arc >= period, 0.0, arc)
    return np.where(wraps, arc, straight)


def chilli_draws(
    x,
    dataset: Dataset,
    n: int,
    config: ProximityConfig,
    rng_seed,
    anchor_mode: str = "sum",
) -> tuple[np.ndarray, np.ndarray]:
    """Interpolation factors and anchor row indices for ``n`` perturbations.

    The anchor kernel is always the contextual one; ``config.kernel`` is
    ignored here and only ``config.sigma`` is used.

    ``anchor_mode='max'`` keeps the literal max-normalized weights and selects
    anchors by rejection sampling against them. This yields the same anchor
    distribution as the default but consumes the random stream differently.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if anchor_mode not in ("sum", "max"):
        raise ValueError(f"unknown anchor mode {anchor_mode!r}")
    rng = _rng(rng_seed)
    x = np.asarray(x, dtype=np.float64)
    ctx = ProximityConfig(sigma=config.sigma, kernel=Kernel.CONTEXTUAL)
    factors = rng.random(n)
    if anchor_mode == "sum":
        probs = anchor_distribution(x, dataset, ctx).probabilities
        anchors = rng.choice(dataset.n_rows, size=n, p=probs)
    else:
        anchors = _rejection_anchors(anchor_weights(x, dataset, ctx, "max"), n, rng)
    return factors, anchors


def chilli_perturb(
    x,
    dataset: Dataset,
    n: int,
    config: ProximityConfig,
    rng_seed,
    anchor_mode: str = "sum",
) -> np.ndarray:
    """Interpolated perturbations anchored on proximity-weighted training instances."""
    factors, anchors = chilli_draws(x, dataset, n, config, rng_seed, anchor_mode)
    return interpolate_many(np.asarray(x, dtype=np.float64), dataset.X[anchors], factors, dataset.schema)


def _rejection_anchors(weights: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty(n, dtype=np.int64)
    acceptance = float(weights.mean())
    filled = 0
    while filled < n:
        size = int(np.ceil(1.2 * (n - filled) / acceptance)) + 16
        cand = rng.integers(0, weights.size, size=size)
        accepted = cand[rng.random(cand.size) < weights[cand]]
        take = accepted[: n - filled]
        out[filled : filled + take.size] = take
        filled += take.size
    return out


def interpolate_many(x, anchors: np.ndarray, factors: np.ndarray, schema: Sequence[FeatureSchema]) -> np.ndarray:
    """Vectorized :func:`interpolate` over rows of ``anchors`` with one factor per row."""
    x = np.asarray(x, dtype=np.float64)
    anchors = np.asarray(anchors, dtype=np.float64)
    t = np.asarray(factors, dtype=np.float64)
    Z = np.empty_like(anchors)
    for j, feat in enumerate(schema):
        a, b = x[j], anchors[:, j]
        if feat.kind is FeatureKind.CATEGORICAL:
            Z[:, j] = np.where(t <= 0.5, a, b)
        elif feat.kind is FeatureKind.CYCLIC:
            Z[:, j] = _interp_cyclic(a, b, t, feat.period)
        else:
            Z[:, j] = np.clip((1.0 - t) * a + t * b, np.minimum(a, b), np.maximum(a, b))
    ones = t == 1.0
    Z[ones] = anchors[ones]
    return Z


def label_perturbations(
    x,
    Z: np.ndarray,
    model,
    config: ProximityConfig,
    schema: Sequence[FeatureSchema],
    *,
    method: Method | str,
    seed: int,
    constant_features: tuple[str, ...] = (),
    batch_size: int = 4096,
) -> PerturbationSet:
    """Query the base model on ``Z`` and attach kernel weights relative to ``x``.

    ``model`` is anything with a ``predict(X) -> array`` method, or a callable.
    """
    from .models import predict_batch

    x = np.asarray(x, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64).reshape(-1, len(schema))
    preds = []
    for b, start in enumerate(range(0, Z.shape[0], batch_size)):
        chunk = Z[start : start + batch_size]
        try:
            out = np.asarray(predict_batch(model, chunk), dtype=np.float64).ravel()
        except ModelError:
            raise
        except Exception as exc:
            raise ModelError(b, exc) from exc
        if out.shape[0] != chunk.shape[0]:
            raise ModelError(b, ValueError(f"expected {chunk.shape[0]} predictions, got {out.shape[0]}"))
        preds.append(out)
    predictions = np.concatenate(preds) if preds else np.empty(0)
    weights = np.atleast_1d(proximity(x, Z, config, schema)) if Z.shape[0] else np.empty(0)
    return PerturbationSet(
        schema=tuple(schema),
        origin=x,
        perturbations=Z,
        predictions=predictions,
        weights=np.asarray(weights, dtype=np.float64),
        method=Method(method),
        seed=int(seed),
        config=config,
        constant_features=constant_features,
    )


def count_out_of_bounds(Z: np.ndarray, schema: Sequence[FeatureSchema]) -> int:
    """Continuous feature values outside the schema's ``[min, max]``.

    Cyclic values wrap and categorical indices are always valid, so neither
    can be out of bounds.
    """
    Z = np.asarray(Z, dtype=np.float64).reshape(-1, len(schema))
    total = 0
    for j, feat in enumerate(schema):
        if feat.kind is FeatureKind.CONTINUOUS:
            col = Z[:, j]
            total += int(np.count_nonzero((col < feat.min) | (col > feat.max)))
    return total


def write_perturbation_csv(path, schema, Z, predictions, weights) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f.name for f in schema] + ["prediction", "weight"])
        for row, pred, weight in zip(Z, predictions, weights):
            w.writerow([format_cell(v, f) for v, f in zip(row, schema)] + [repr(float(pred)), repr(float(weight))])


def read_perturbation_csv(path, schema) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    expected = [f.name for f in schema] + ["prediction", "weight"]
    if header != expected:
        raise ValueError(f"{path}: unexpected header {header}")
    d = len(schema)
    Z = np.empty((len(body), d))
    for i, row in enumerate(body):
        for j, f in enumerate(schema):
            Z[i, j] = f.category_index(row[j]) if f.kind is FeatureKind.CATEGORICAL else float(row[j])
    preds = np.array([float(r[d]) for r in body])
    weights = np.array([float(r[d + 1]) for r in body])
    return Z, preds, weights
