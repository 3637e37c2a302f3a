"""Black-box regressors to explain.

The built-in models are deliberately simple stand-ins. Neither clips its
inputs, so out-of-bounds perturbations are extrapolated exactly as a real
model would see them. :class:`ExternalModel` drives any executable through a
batch CSV protocol: the command gets one argument (a CSV path whose header
matches the schema) and must print one prediction per row on stdout.
"""

from __future__ import annotations

import csv
import json
import os
import shlex
import subprocess
import tempfile
import threading
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import linalg

from .proximity import aggregate_distance, squared_euclidean
from .schema import Dataset, FeatureSchema, format_cell


class ExternalModelError(RuntimeError):
    pass


@dataclass(frozen=True)
class KNNRegressor:
    """Mean target of the ``k`` nearest training rows under the contextual distance."""

    schema: tuple[FeatureSchema, ...]
    X: np.ndarray
    y: np.ndarray
    k: int
    kind: str = field(default="knn", init=False)

    def predict(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64).reshape(-1, len(self.schema))
        out = np.empty(Z.shape[0])
        for i, z in enumerate(Z):
            dist = aggregate_distance(z, self.X, self.schema)
            # stable sort: ties resolve to the earlier training row
            nearest = np.argsort(dist, kind="stable")[: self.k]
            out[i] = self.y[nearest].mean()
        return out

    def params(self) -> dict[str, Any]:
        return {"kind": self.kind, "k": self.k}


@dataclass(frozen=True)
class RBFKernelRidge:
    """Kernel ridge regression with ``exp(-gamma * ||u - v||^2)`` on normalized features.

    ``||u - v||^2`` is the same squared distance as the baseline Euclidean
    kernel: min-max scaled continuous values, cyclic values mod period, and a
    0/1 term per categorical.
    """

    schema: tuple[FeatureSchema, ...]
    X: np.ndarray
    dual_coef: np.ndarray
    gamma: float
    alpha: float
    kind: str = field(default="rbf_kernel_ridge", init=False)

    def kernel(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64).reshape(-1, len(self.schema))
        sq = squared_euclidean(Z[:, None, :], self.X[None, :, :], self.schema)
        return np.exp(-self.gamma * sq)

    def predict(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64).reshape(-1, len(self.schema))
        out = np.empty(Z.shape[0])
        # chunked to bound the (rows x train) kernel block; a row-wise sum rather
        # than a matmul keeps each prediction independent of the batch it is in
        step = max(1, 2_000_000 // max(1, self.X.shape[0]))
        for start in range(0, Z.shape[0], step):
            out[start : start + step] = (self.kernel(Z[start : start + step]) * self.dual_coef).sum(axis=1)
        return out

    def params(self) -> dict[str, Any]:
        return {"kind": self.kind, "gamma": self.gamma, "alpha": self.alpha}


def train_knn(dataset: Dataset, k: int) -> KNNRegressor:
    if not 1 <= k <= dataset.n_rows:
        raise ValueError(f"k must be in [1, {dataset.n_rows}], got {k}")
    return KNNRegressor(schema=dataset.schema, X=dataset.X, y=dataset.y, k=int(k))


def train_rbf_ridge(dataset: Dataset, gamma: float, alpha: float) -> RBFKernelRidge:
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    if not alpha >= 0:
        raise ValueError("alpha must be >= 0")
    sq = squared_euclidean(dataset.X[:, None, :], dataset.X[None, :, :], dataset.schema)
    K = np.exp(-gamma * sq)
    K[np.diag_indices_from(K)] += alpha
    try:
        dual = linalg.solve(K, dataset.y, assume_a="pos")
    except (linalg.LinAlgError, ValueError) as exc:
        raise linalg.LinAlgError(
            f"kernel system is singular (alpha={alpha}); use alpha > 0"
        ) from exc
    return RBFKernelRidge(schema=dataset.schema, X=dataset.X, dual_coef=dual, gamma=float(gamma), alpha=float(alpha))


class ExternalModel:
    """Subprocess-backed model speaking the batch CSV protocol."""

    kind = "external"

    def __init__(self, command: str | Sequence[str], schema: Sequence[FeatureSchema], timeout: float | None = 600):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ValueError("empty external model command")
        self.schema = tuple(schema)
        self.timeout = timeout
        self._lock = threading.Lock()

    def predict(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64).reshape(-1, len(self.schema))
        if Z.shape[0] == 0:
            return np.empty(0)
        with self._lock:
            fd, path = tempfile.mkstemp(suffix=".csv", prefix="ctxlime-batch-")
            try:
                with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow([f.name for f in self.schema])
                    for row in Z:
                        w.writerow([format_cell(v, f) for v, f in zip(row, self.schema)])
                proc = subprocess.run(
                    [*self.command, path], capture_output=True, text=True, timeout=self.timeout
                )
            finally:
                os.unlink(path)
        if proc.returncode != 0:
            raise ExternalModelError(
                f"external model exited with status {proc.returncode}: {proc.stderr.strip()[:500]}"
            )
        lines = [ln for ln in proc.stdout.splitlines() if ln.strip()]
        if len(lines) != Z.shape[0]:
            raise ExternalModelError(f"external model returned {len(lines)} rows for {Z.shape[0]} inputs")
        try:
            return np.array([float(ln) for ln in lines])
        except ValueError as exc:
            raise ExternalModelError(f"malformed prediction: {exc}") from None

    def params(self) -> dict[str, Any]:
        return {"kind": self.kind, "command": self.command}


def predict_batch(model, instances) -> np.ndarray:
    """Order-preserving batch prediction for any model object or plain callable."""
    X = np.asarray(instances, dtype=np.float64)
    if X.size == 0:
        return np.empty(0)
    fn = model.predict if hasattr(model, "predict") else model
    return np.asarray(fn(X), dtype=np.float64).ravel()


def dump_params(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.params(), fh, indent=2)
        fh.write("\n")
