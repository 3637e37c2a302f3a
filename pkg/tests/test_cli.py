import json
import subprocess
import sys
from pathlib import Path

import pytest

from ctxlime.cli import main

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="module")
def bench_files(tmp_path_factory):
    out = tmp_path_factory.mktemp("bench")
    assert main(["bench", "gen", "--name", "sinusoid", "--rows", "150", "--seed", "1", "--out", str(out)]) == 0
    return out / "sinusoid.csv", out / "sinusoid.schema.json"


def common(bench_files, *extra):
    data, schema = bench_files
    return ["--data", str(data), "--schema", str(schema), "--target", "y", "--num-perturbations", "80", *extra]


def error_of(capsys):
    return json.loads(capsys.readouterr().err.strip())


def test_bench_gen_prints_paths(tmp_path, capsys):
    main(["bench", "gen", "--name", "piecewise", "--rows", "20", "--out", str(tmp_path)])
    out = json.loads(capsys.readouterr().out)
    assert Path(out["data"]).exists() and Path(out["schema"]).exists()
    assert out["target"] == "y"


def test_explain_stdout(bench_files, capsys):
    assert main(["explain", *common(bench_files, "--instance", "4", "--method", "lime")]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["method"] == "lime"
    assert payload["instance"] == 4
    assert {c["feature"] for c in payload["contributions"]} == {"v1", "v2"}


def test_explain_file_knn(bench_files, tmp_path):
    out = tmp_path / "e.json"
    main(["explain", *common(bench_files, "--instance", "0", "--model", "knn", "--k", "3", "--out", str(out))])
    assert json.loads(out.read_text())["method"] == "chilli"


def test_explain_external(bench_files, tmp_path):
    out = tmp_path / "e.json"
    cmd = f"external:{sys.executable} {DATA / 'echo_model.py'}"
    main(["explain", *common(bench_files, "--instance", "2", "--model", cmd, "--out", str(out))])
    assert json.loads(out.read_text())["faithfulness"]["rmse"] >= 0


def test_perturb_csv(bench_files, tmp_path):
    out = tmp_path / "p.csv"
    main(["perturb", *common(bench_files, "--instance", "1", "--out", str(out))])
    lines = out.read_text().splitlines()
    assert lines[0] == "v1,v2,prediction,weight"
    assert len(lines) == 81


def test_compare(bench_files, tmp_path):
    out = tmp_path / "cmp"
    main(["compare", *common(bench_files, "--instances", "3", "--out", str(out))])
    payload = json.loads((tmp_path / "cmp.json").read_text())
    assert len(payload["instance_ids"]) == 3
    assert "reduction_percent" in payload


def test_compare_drop_feature(bench_files, tmp_path):
    out = tmp_path / "cmp"
    main(["compare", *common(bench_files, "--instances", "2", "--drop-feature", "v2", "--out", str(out))])
    reduced = json.loads((tmp_path / "cmp.reduced.json").read_text())
    assert reduced["feature_names"] == ["v1"]
    assert (tmp_path / "cmp.full.csv").exists()


def test_sweep(bench_files, tmp_path):
    out = tmp_path / "sw"
    main(["sweep", *common(bench_files, "--instance", "0", "--sigmas", "0.5,0.1", "--out", str(out))])
    assert len((tmp_path / "sw.csv").read_text().splitlines()) == 5


@pytest.mark.parametrize("argv,fragment", [
    (["explain", "--instance", "999"], "--instance must be in"),
    (["compare"], "compare requires --out"),
    (["explain", "--instance", "0", "--model", "svm"], "unknown model"),
    (["sweep", "--instance", "0", "--sigmas", "a,b"], "comma-separated"),
])
def test_usage_errors(bench_files, capsys, argv, fragment):
    with pytest.raises(SystemExit) as info:
        main([argv[0], *common(bench_files, *argv[1:])])
    assert info.value.code == 2
    err = error_of(capsys)
    assert err["error"] == "usage"
    assert fragment in err["message"]


def test_missing_subcommand(capsys):
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2
    assert error_of(capsys)["error"] == "usage"


def test_runtime_error_is_json(bench_files, tmp_path, capsys):
    data, schema = bench_files
    with pytest.raises(SystemExit) as info:
        main(["explain", "--data", str(tmp_path / "missing.csv"), "--schema", str(schema), "--target", "y",
              "--instance", "0"])
    assert info.value.code == 1
    assert error_of(capsys)["message"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ctxlime", "bench", "gen", "--name", "linear", "--rows", "10",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert (tmp_path / "linear.schema.json").exists()
