"""Proximity-weighted linear surrogates and their selection.

Surrogates are fitted in normalized feature space, in coordinates local to
the explained instance ``x``:

* continuous: min-max normalized value;
* cyclic: ``norm(x)`` plus the signed shorter-arc offset from ``x`` as a
  fraction of the period, so a neighbourhood straddling midnight stays
  contiguous;
* categorical: indicator of agreeing with ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .metrics import FaithfulnessReport, error_metrics, faithfulness
from .schema import FeatureKind, FeatureSchema, normalize

DEFAULT_LAMBDA_GRID = (0.0, 1e-4, 1e-3, 1e-2, 1e-1)
# beyond this condition number an unregularized system is treated as singular
_MAX_CONDITION = 1e12


class SingularFitError(np.linalg.LinAlgError):
    pass


def design_matrix(Z, x, schema: Sequence[FeatureSchema]) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.float64).reshape(-1, len(schema))
    x = np.asarray(x, dtype=np.float64)
    A = np.empty_like(Z)
    for j, feat in enumerate(schema):
        if feat.kind is FeatureKind.CONTINUOUS:
            A[:, j] = normalize(Z[:, j], feat)
        elif feat.kind is FeatureKind.CYCLIC:
            period = feat.period
            offset = np.mod(Z[:, j] - x[j] + period / 2, period) - period / 2
            A[:, j] = normalize(x[j], feat) + offset / period
        else:
            A[:, j] = (Z[:, j] == x[j]).astype(np.float64)
    return A


@dataclass(frozen=True)
class LinearSurrogate:
    coefficients: np.ndarray
    intercept: float
    ridge_lambda: float
    schema: tuple[FeatureSchema, ...] = field(repr=False)
    origin: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.coefficients.shape != (len(self.schema),):
            raise ValueError("one coefficient per feature required")

    def predict(self, Z) -> np.ndarray:
        return design_matrix(Z, self.origin, self.schema) @ self.coefficients + self.intercept

    def raw_coefficients(self) -> np.ndarray:
        """Coefficients per raw unit (per category switch for categoricals)."""
        return self.coefficients / np.array([f.span for f in self.schema])


def _canonical_order(A: np.ndarray, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    # sorting rows makes the floating-point sums independent of input order
    return np.lexsort(np.column_stack([A, y, w]).T[::-1])


def fit_weighted_linear(pset, lam: float) -> LinearSurrogate:
    """Minimize ``sum w_i (f(z_i) - g(z_i))^2 + lam * ||coef||^2`` with a free intercept.

    Solved through the weighted normal equations after centering on the
    weighted means, which removes the intercept from the penalized system.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    schema = pset.schema
    d = len(schema)
    A = design_matrix(pset.perturbations, pset.origin, schema)
    y = np.asarray(pset.predictions, dtype=np.float64)
    w = np.asarray(pset.weights, dtype=np.float64)
    n = y.shape[0]
    if n == 0:
        raise SingularFitError("no perturbations to fit")
    if lam == 0 and n < d + 1:
        raise SingularFitError(
            f"{n} perturbations cannot determine {d + 1} parameters; use lambda > 0 or more perturbations"
        )
    order = _canonical_order(A, y, w)
    A, y, w = A[order], y[order], w[order]
    scale = w.max()
    if not scale > 0:
        raise SingularFitError("all proximity weights are zero; increase sigma")
    # dividing weights and lambda by the same constant leaves the argmin unchanged
    w = w / scale
    lam_eff = lam / scale
    sw = w.sum()
    mean_a = (w @ A) / sw
    mean_y = (w @ y) / sw
    Ac = A - mean_a
    yc = y - mean_y
    M = Ac.T @ (w[:, None] * Ac)
    rhs = Ac.T @ (w * yc)
    if lam == 0 and np.linalg.cond(M) > _MAX_CONDITION:
        raise SingularFitError(
            "weighted normal equations are singular at lambda=0; use lambda > 0 or more perturbations"
        )
    M[np.diag_indices(d)] += lam_eff
    coef = np.linalg.solve(M, rhs)
    intercept = float(mean_y - mean_a @ coef)
    return LinearSurrogate(
        coefficients=coef, intercept=intercept, ridge_lambda=float(lam), schema=tuple(schema), origin=pset.origin
    )


def weighted_rmse(surrogate: LinearSurrogate, pset) -> float:
    return error_metrics(pset.predictions, surrogate.predict(pset.perturbations), pset.weights)[2]


def select_best(pset, lambda_grid: Sequence[float] = DEFAULT_LAMBDA_GRID) -> LinearSurrogate:
    """Fit one candidate per lambda and keep the lowest proximity-weighted RMSE.

    Near-ties (relative 1e-12) go to the larger lambda.
    """
    grid = sorted(set(float(v) for v in lambda_grid), reverse=True)
    if not grid:
        raise ValueError("lambda grid is empty")
    best, best_err = None, np.inf
    failures = []
    for lam in grid:
        try:
            cand = fit_weighted_linear(pset, lam)
        except np.linalg.LinAlgError as exc:
            failures.append(f"lambda={lam}: {exc}")
            continue
        err = weighted_rmse(cand, pset)
        if best is None or err < best_err - 1e-12 * max(abs(best_err), 1e-300):
            best, best_err = cand, err
    if best is None:
        raise SingularFitError("no surrogate candidate could be fitted: " + "; ".join(failures))
    return best


@dataclass(frozen=True)
class Explanation:
    surrogate: LinearSurrogate
    contributions: list[tuple[str, float]]
    local_prediction: float
    faithfulness: FaithfulnessReport
    method: str
    seed: int
    sigma: float

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "sigma": self.sigma,
            "lambda": self.surrogate.ridge_lambda,
            "intercept": self.surrogate.intercept,
            "contributions": [{"feature": n, "coefficient": c} for n, c in self.contributions],
            "local_prediction": self.local_prediction,
            "faithfulness": {"rmse": self.faithfulness.rmse, "mae": self.faithfulness.mae,
                             "weighted_rmse": self.faithfulness.weighted_rmse,
                             "n_perturbations": self.faithfulness.n_perturbations,
                             "out_of_bounds_count": self.faithfulness.out_of_bounds_count},
        }

    def coefficient(self, name: str) -> float:
        return dict(self.contributions)[name]


def explain(best: LinearSurrogate, x, pset, raw_units: bool = False) -> Explanation:
    """Package a fitted surrogate as an explanation of ``x``.

    Contributions are ranked by absolute coefficient; the sort is stable so
    equal magnitudes keep schema order.
    """
    coefs = best.raw_coefficients() if raw_units else best.coefficients
    names = [f.name for f in best.schema]
    order = sorted(range(len(names)), key=lambda j: -abs(coefs[j]))
    local = float(best.predict(np.asarray(x, dtype=np.float64)[None, :])[0])
    return Explanation(
        surrogate=best,
        contributions=[(names[j], float(coefs[j])) for j in order],
        local_prediction=local,
        faithfulness=faithfulness(best, pset),
        method=pset.method.value,
        seed=pset.seed,
        sigma=pset.config.sigma,
    )
