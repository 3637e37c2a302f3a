"""Command-line entry point.

Every subcommand writes JSON/CSV and exits 0; on failure a one-line JSON
object ``{"error": ..., "message": ...}`` goes to stderr and the exit code is
non-zero.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench
from .evaluation import (
    ExplainConfig,
    compare_explainers,
    compare_feature_removal,
    emit_plot_data,
    explain_instance,
    perturb_instance,
    sigma_sweep,
)
from .models import ExternalModel, train_knn, train_rbf_ridge
from .perturbation import DEFAULT_NUM_PERTURBATIONS, Method
from .schema import load_dataset, load_schema
from .surrogate import DEFAULT_LAMBDA_GRID


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--schema", required=True, help="feature schema JSON")
    p.add_argument("--target", required=True, help="target column name")
    p.add_argument("--model", default="rbf", help="knn | rbf | external:CMD")
    p.add_argument("--k", type=int, default=5, help="neighbours for knn")
    p.add_argument("--gamma", type=float, default=10.0, help="RBF kernel ridge bandwidth")
    p.add_argument("--alpha", type=float, default=1e-2, help="RBF kernel ridge regularizer")
    p.add_argument("--sigma", type=float, default=None, help="kernel width (default per kernel)")
    p.add_argument("--num-perturbations", type=int, default=DEFAULT_NUM_PERTURBATIONS)
    p.add_argument("--lambda-grid", type=_floats, default=list(DEFAULT_LAMBDA_GRID))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metric", choices=["rmse", "mae", "weighted_rmse"], default="rmse")
    p.add_argument("--anchor-mode", choices=["sum", "max"], default="sum")
    p.add_argument("--fresh-eval", action="store_true", help="score on a fresh perturbation set")
    p.add_argument("--raw-units", action="store_true", help="report coefficients per raw unit")
    p.add_argument("--out", default=None, help="output path (stdout when omitted, where supported)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ctxlime", description="Local surrogate explanations for tabular regressors.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("explain", help="explain one training row")
    _add_common(p)
    p.add_argument("--instance", type=int, required=True)
    p.add_argument("--method", choices=[m.value for m in Method], default="chilli")

    p = sub.add_parser("compare", help="LIME vs CHILLI error over random rows")
    _add_common(p)
    p.add_argument("--instances", type=int, default=25)
    p.add_argument("--drop-feature", default=None, help="also rerun without this feature")

    p = sub.add_parser("sweep", help="error of both methods across kernel widths")
    _add_common(p)
    p.add_argument("--instance", type=int, required=True)
    p.add_argument("--sigmas", type=_floats, required=True)

    p = sub.add_parser("perturb", help="write the perturbation set CSV for one row")
    _add_common(p)
    p.add_argument("--instance", type=int, required=True)
    p.add_argument("--method", choices=[m.value for m in Method], default="chilli")

    b = sub.add_parser("bench", help="synthetic benchmarks")
    bsub = b.add_subparsers(dest="bench_command", required=True, parser_class=_Parser)
    g = bsub.add_parser("gen", help="generate a benchmark dataset and schema")
    g.add_argument("--name", choices=bench.BENCHMARKS, required=True)
    g.add_argument("--rows", type=int, default=2000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    return parser


def _model_factory(args):
    choice = args.model
    if choice == "knn":
        return lambda ds: train_knn(ds, args.k)
    if choice == "rbf":
        return lambda ds: train_rbf_ridge(ds, args.gamma, args.alpha)
    if choice.startswith("external:"):
        command = choice[len("external:"):]
        return lambda ds: ExternalModel(command, ds.schema)
    raise UsageError(f"unknown model {choice!r}; use knn, rbf or external:CMD")


def _config(args, **overrides) -> ExplainConfig:
    values = dict(
        sigma=args.sigma,
        num_perturbations=args.num_perturbations,
        lambda_grid=tuple(args.lambda_grid),
        seed=args.seed,
        metric=args.metric,
        anchor_mode=args.anchor_mode,
        fresh_evaluation=args.fresh_eval,
        raw_units=args.raw_units,
    )
    values.update(overrides)
    return ExplainConfig(**values)


def _load(args):
    dataset = load_dataset(args.data, load_schema(args.schema), args.target)
    factory = _model_factory(args)
    return dataset, factory


def _row(dataset, index: int) -> int:
    if not 0 <= index < dataset.n_rows:
        raise UsageError(f"--instance must be in [0, {dataset.n_rows - 1}]")
    return index


def _emit_json(payload, out) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")


def _require_out(args) -> str:
    if args.out is None:
        raise UsageError(f"{args.command} requires --out")
    return args.out


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "bench":
        ds = bench.generate(args.name, args.rows, args.seed)
        csv_path, schema_path = bench.write_benchmark(ds, args.name, args.out)
        _emit_json({"data": str(csv_path), "schema": str(schema_path), "target": bench.TARGET}, None)
        return 0

    dataset, factory = _load(args)
    config = _config(args)
    if args.command == "explain":
        row = _row(dataset, args.instance)
        expl, _ = explain_instance(dataset, factory(dataset), dataset.X[row], args.method, config)
        payload = expl.to_dict()
        payload["instance"] = row
        _emit_json(payload, args.out)
    elif args.command == "perturb":
        row = _row(dataset, args.instance)
        pset = perturb_instance(dataset, factory(dataset), dataset.X[row], args.method, config, config.seed)
        pset.to_csv(_require_out(args))
    elif args.command == "compare":
        out = _require_out(args)
        if args.drop_feature:
            full, reduced = compare_feature_removal(dataset, args.drop_feature, factory, args.instances, config)
            emit_plot_data(full, f"{out}.full")
            emit_plot_data(reduced, f"{out}.reduced")
        else:
            emit_plot_data(compare_explainers(dataset, factory(dataset), args.instances, config), out)
    elif args.command == "sweep":
        row = _row(dataset, args.instance)
        emit_plot_data(sigma_sweep(dataset, factory(dataset), row, args.sigmas, config), _require_out(args))
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except UsageError as exc:
        _fail("usage", str(exc), 2)
    except Exception as exc:  # noqa: BLE001 - every failure must surface as JSON
        _fail(type(exc).__name__, str(exc), 1)
    return 1


def _fail(kind: str, message: str, code: int) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    raise SystemExit(code)


if __name__ == "__main__":
    sys.exit(main())
