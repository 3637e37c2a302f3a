"""End-to-end explanation runs and the faithfulness experiments built on them."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .metrics import FaithfulnessReport, faithfulness
from .perturbation import (
    DEFAULT_NUM_PERTURBATIONS,
    Method,
    PerturbationSet,
    chilli_perturb,
    label_perturbations,
    lime_perturb,
)
from .proximity import DEFAULT_CONTEXTUAL_SIGMA, Kernel, ProximityConfig, default_lime_sigma
from .schema import Dataset
from .surrogate import DEFAULT_LAMBDA_GRID, Explanation, explain, select_best

__all__ = [
    "ExplainConfig",
    "ComparisonRun",
    "SweepTable",
    "FaithfulnessReport",
    "faithfulness",
    "explain_instance",
    "perturb_instance",
    "compare_explainers",
    "compare_feature_removal",
    "sigma_sweep",
    "contribution_variance",
    "emit_plot_data",
    "read_comparison",
    "read_sweep",
    "instance_seed",
]

QUARTILE_CONVENTION = "linear interpolation between order statistics (numpy 'linear')"


@dataclass(frozen=True)
class ExplainConfig:
    """Knobs shared by every explanation run.

    ``sigma=None`` picks each kernel's default: 0.1 for the contextual kernel
    and ``0.75 * sqrt(d)`` for the Euclidean baseline.
    """

    sigma: float | None = None
    num_perturbations: int = DEFAULT_NUM_PERTURBATIONS
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    seed: int = 0
    metric: str = "rmse"
    anchor_mode: str = "sum"
    fresh_evaluation: bool = False
    raw_units: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))
        if self.metric not in ("rmse", "mae", "weighted_rmse"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.num_perturbations < 1:
            raise ValueError("num_perturbations must be >= 1")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if not self.lambda_grid:
            raise ValueError("lambda grid is empty")

    def proximity_config(self, method: Method | str, n_features: int) -> ProximityConfig:
        if Method(method) is Method.LIME:
            sigma = self.sigma if self.sigma is not None else default_lime_sigma(n_features)
            return ProximityConfig(sigma=sigma, kernel=Kernel.EUCLIDEAN)
        sigma = self.sigma if self.sigma is not None else DEFAULT_CONTEXTUAL_SIGMA
        return ProximityConfig(sigma=sigma, kernel=Kernel.CONTEXTUAL)

    def snapshot(self) -> dict[str, Any]:
        out = asdict(self)
        out["lambda_grid"] = list(self.lambda_grid)
        return out


def instance_seed(master_seed: int, row: int) -> int:
    """Independent per-instance seed derived from the master seed."""
    return int(np.random.SeedSequence([int(master_seed), int(row)]).generate_state(1, dtype=np.uint32)[0])


def perturb_instance(dataset: Dataset, model, x, method: Method | str, config: ExplainConfig, seed: int) -> PerturbationSet:
    method = Method(method)
    x = np.asarray(x, dtype=np.float64)
    prox = config.proximity_config(method, dataset.n_features)
    constant: tuple[str, ...] = ()
    if method is Method.LIME:
        Z, constant = lime_perturb(x, dataset, config.num_perturbations, seed)
    else:
        Z = chilli_perturb(x, dataset, config.num_perturbations, prox, seed, anchor_mode=config.anchor_mode)
    return label_perturbations(
        x, Z, model, prox, dataset.schema, method=method, seed=seed, constant_features=constant
    )


def explain_instance(
    dataset: Dataset, model, x, method: Method | str, config: ExplainConfig, seed: int | None = None
) -> tuple[Explanation, PerturbationSet]:
    """Perturb, label, fit the candidate surrogates and keep the most faithful one."""
    seed = config.seed if seed is None else seed
    pset = perturb_instance(dataset, model, x, method, config, seed)
    best = select_best(pset, config.lambda_grid)
    expl = explain(best, x, pset, raw_units=config.raw_units)
    if config.fresh_evaluation:
        fresh = perturb_instance(dataset, model, x, method, config, instance_seed(seed, 0x7FFFFFFF))
        expl = replace(expl, faithfulness=faithfulness(best, fresh))
    return expl, pset


def _metric(report: FaithfulnessReport, metric: str) -> float:
    return float(getattr(report, metric))


@dataclass
class ComparisonRun:
    """Per-instance errors of a baseline and a candidate explainer."""

    instance_ids: list[int]
    baseline: str
    candidate: str
    baseline_errors: list[float]
    candidate_errors: list[float]
    metric: str
    config: dict[str, Any]
    feature_names: list[str] = field(default_factory=list)
    baseline_coefficients: list[list[float]] = field(default_factory=list)
    candidate_coefficients: list[list[float]] = field(default_factory=list)

    @property
    def baseline_average(self) -> float:
        return float(np.mean(self.baseline_errors))

    @property
    def candidate_average(self) -> float:
        return float(np.mean(self.candidate_errors))

    @property
    def reduction_percent(self) -> float:
        """Average-error reduction of the candidate relative to the baseline."""
        base = self.baseline_average
        if base == 0:
            return 0.0 if self.candidate_average == 0 else -math.inf
        return (base - self.candidate_average) / base * 100.0

    @property
    def candidate_wins(self) -> int:
        return sum(c < b for b, c in zip(self.baseline_errors, self.candidate_errors))

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["averages"] = {self.baseline_key: self.baseline_average, self.candidate_key: self.candidate_average}
        out["reduction_percent"] = self.reduction_percent
        return out

    @property
    def baseline_key(self) -> str:
        return f"baseline:{self.baseline}"

    @property
    def candidate_key(self) -> str:
        return f"candidate:{self.candidate}"

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ComparisonRun:
        fields = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**fields)

    def coefficient_table(self, which: str = "candidate") -> list[dict[str, float]]:
        rows = self.candidate_coefficients if which == "candidate" else self.baseline_coefficients
        return [dict(zip(self.feature_names, r)) for r in rows]


def compare_explainers(
    dataset: Dataset,
    model,
    n_instances: int,
    config: ExplainConfig,
    baseline: Method | str = Method.LIME,
    candidate: Method | str = Method.CHILLI,
    rows: Sequence[int] | None = None,
) -> ComparisonRun:
    """Explain randomly chosen training rows with both methods and record their errors.

    Both methods see the same base model and the same per-instance seed.
    Instances are drawn without replacement from the dataset rows using
    ``config.seed``; pass ``rows`` to fix them explicitly.
    """
    if rows is None:
        if not 1 <= n_instances <= dataset.n_rows:
            raise ValueError(f"n_instances must be in [1, {dataset.n_rows}]")
        rng = np.random.default_rng(config.seed)
        rows = sorted(int(r) for r in rng.choice(dataset.n_rows, size=n_instances, replace=False))
    baseline, candidate = Method(baseline), Method(candidate)
    run = ComparisonRun(
        instance_ids=list(rows),
        baseline=baseline.value,
        candidate=candidate.value,
        baseline_errors=[],
        candidate_errors=[],
        metric=config.metric,
        config=config.snapshot(),
        feature_names=dataset.feature_names,
    )
    for row in rows:
        x = dataset.X[row]
        seed = instance_seed(config.seed, row)
        try:
            b_expl, _ = explain_instance(dataset, model, x, baseline, config, seed)
            c_expl, _ = explain_instance(dataset, model, x, candidate, config, seed)
        except Exception as exc:
            raise RuntimeError(f"instance {row}: {exc}") from exc
        run.baseline_errors.append(_metric(b_expl.faithfulness, config.metric))
        run.candidate_errors.append(_metric(c_expl.faithfulness, config.metric))
        run.baseline_coefficients.append(_schema_order(b_expl, dataset))
        run.candidate_coefficients.append(_schema_order(c_expl, dataset))
    return run


def _schema_order(expl: Explanation, dataset: Dataset) -> list[float]:
    lookup = dict(expl.contributions)
    return [lookup[n] for n in dataset.feature_names]


def compare_feature_removal(
    dataset: Dataset,
    feature: str,
    model_factory: Callable[[Dataset], Any],
    n_instances: int,
    config: ExplainConfig,
) -> tuple[ComparisonRun, ComparisonRun]:
    """Run :func:`compare_explainers` with and without ``feature``.

    The base model is retrained on the reduced dataset; the same rows are
    explained in both runs.
    """
    full = compare_explainers(dataset, model_factory(dataset), n_instances, config)
    reduced_data = dataset.drop_feature(feature)
    reduced = compare_explainers(
        reduced_data, model_factory(reduced_data), n_instances, config, rows=full.instance_ids
    )
    return full, reduced


@dataclass
class SweepTable:
    instance_id: int
    rows: list[dict[str, Any]]
    config: dict[str, Any]

    def values(self, method: str, metric: str = "mae") -> dict[float, float]:
        return {r["sigma"]: r[metric] for r in self.rows if r["method"] == method}

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SweepTable:
        return cls(instance_id=data["instance_id"], rows=data["rows"], config=data["config"])


def sigma_sweep(
    dataset: Dataset,
    model,
    instance: int,
    sigma_list: Sequence[float],
    config: ExplainConfig,
    methods: Sequence[Method | str] = (Method.LIME, Method.CHILLI),
) -> SweepTable:
    """Errors of each method per sigma, every cell run with the same seed."""
    sigmas = sorted(set(float(s) for s in sigma_list))
    if not sigmas:
        raise ValueError("sigma list is empty")
    if any(s <= 0 for s in sigmas):
        raise ValueError("every sigma must be > 0")
    x = dataset.X[instance]
    seed = instance_seed(config.seed, instance)
    rows = []
    for sigma in sigmas:
        cfg = replace(config, sigma=sigma)
        for method in methods:
            expl, _ = explain_instance(dataset, model, x, method, cfg, seed)
            f = expl.faithfulness
            rows.append({"sigma": sigma, "method": Method(method).value, "mae": f.mae, "rmse": f.rmse,
                         "weighted_rmse": f.weighted_rmse, "lambda": expl.surrogate.ridge_lambda})
    return SweepTable(instance_id=int(instance), rows=rows, config=config.snapshot())


def contribution_variance(runs) -> dict[str, dict[str, float]]:
    """Median and quartiles of each feature's coefficient across explanations.

    Accepts :class:`Explanation` objects or plain ``{feature: coefficient}``
    mappings. Quartiles use numpy's default linear interpolation, so for
    ``[1, 2, 3]`` the quartiles are 1.5 and 2.5.
    """
    tables = [dict(r.contributions) if isinstance(r, Explanation) else dict(r) for r in runs]
    if not tables:
        raise ValueError("no explanations given")
    names = list(tables[0])
    if any(set(t) != set(names) for t in tables):
        raise ValueError("explanations do not share a schema")
    out = {}
    for name in names:
        values = np.array([t[name] for t in tables], dtype=np.float64)
        q1, med, q3 = np.percentile(values, [25, 50, 75])
        out[name] = {"median": float(med), "q1": float(q1), "q3": float(q3)}
    return out


def _write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def _stem(path: str | Path) -> Path:
    base = Path(path)
    return base.with_suffix("") if base.suffix in (".csv", ".json") else base


def emit_plot_data(obj, path: str | Path) -> list[Path]:
    """Write plot-ready CSV and JSON next to ``path`` (a .csv/.json suffix is replaced).

    Comparisons yield one CSV row per instance, sweeps one per (sigma, method)
    pair and perturbation sets one per perturbation.
    """
    base = _stem(path)
    base.parent.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = base.parent / f"{base.name}.csv", base.parent / f"{base.name}.json"
    if isinstance(obj, ComparisonRun):
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["instance_id", f"{obj.baseline}_error", f"{obj.candidate}_error"])
            for i, b, c in zip(obj.instance_ids, obj.baseline_errors, obj.candidate_errors):
                w.writerow([i, repr(b), repr(c)])
        _write_json(json_path, obj.to_dict())
    elif isinstance(obj, SweepTable):
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sigma", "method", "mae", "rmse", "weighted_rmse", "lambda"])
            for r in obj.rows:
                w.writerow([repr(r["sigma"]), r["method"], repr(r["mae"]), repr(r["rmse"]),
                            repr(r["weighted_rmse"]), repr(r["lambda"])])
        _write_json(json_path, obj.to_dict())
    elif isinstance(obj, PerturbationSet):
        obj.to_csv(csv_path)
        _write_json(json_path, {
            "method": obj.method.value,
            "seed": obj.seed,
            "sigma": obj.config.sigma,
            "kernel": obj.config.kernel.value,
            "origin": [float(v) for v in obj.origin],
            "features": [f.to_dict() for f in obj.schema],
            "n_perturbations": len(obj),
            "out_of_bounds_count": obj.out_of_bounds_count(),
            "constant_features": list(obj.constant_features),
        })
    else:
        raise TypeError(f"cannot emit plot data for {type(obj).__name__}")
    return [csv_path, json_path]


def _read_json_text(path: str | Path) -> str:
    base = _stem(path)
    return (base.parent / f"{base.name}.json").read_text(encoding="utf-8")


def read_comparison(path: str | Path) -> ComparisonRun:
    return ComparisonRun.from_dict(json.loads(_read_json_text(path)))


def read_sweep(path: str | Path) -> SweepTable:
    return SweepTable.from_dict(json.loads(_read_json_text(path)))
