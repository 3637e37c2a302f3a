"""Faithfulness of a surrogate to the base model over a perturbation set."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class FaithfulnessReport:
    rmse: float
    mae: float
    weighted_rmse: float
    n_perturbations: int
    out_of_bounds_count: int

    def to_dict(self) -> dict:
        return asdict(self)


def error_metrics(target, approx, weights=None) -> tuple[float, float, float]:
    """Return ``(rmse, mae, weighted_rmse)`` of ``approx`` against ``target``.

    Weights are normalized to sum to one; when they are omitted or all zero the
    weighted RMSE falls back to the plain one.
    """
    resid = np.asarray(target, dtype=np.float64) - np.asarray(approx, dtype=np.float64)
    if resid.size == 0:
        return 0.0, 0.0, 0.0
    sq = resid**2
    rmse = float(np.sqrt(sq.mean()))
    mae = float(np.abs(resid).mean())
    if weights is None:
        return rmse, mae, rmse
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    wrmse = float(np.sqrt((w / total) @ sq)) if total > 0 else rmse
    return rmse, mae, wrmse


def faithfulness(surrogate, pset) -> FaithfulnessReport:
    """Compare surrogate predictions with ``f(Z)`` on the perturbations themselves."""
    approx = surrogate.predict(pset.perturbations) if len(pset) else np.empty(0)
    rmse, mae, wrmse = error_metrics(pset.predictions, approx, pset.weights)
    return FaithfulnessReport(
        rmse=rmse,
        mae=mae,
        weighted_rmse=wrmse,
        n_perturbations=len(pset),
        out_of_bounds_count=pset.out_of_bounds_count(),
    )
