import csv
import json

import numpy as np
import pytest

from mlbaseline.cli import EXIT_FAIL, EXIT_IO, EXIT_OK, main

from _fixtures import (
    classification_data,
    four_experiment_plan,
    regression_data,
    write_csv,
    write_json,
)


def two_experiment_plan(manifest):
    return {
        "version": 1,
        "defaults": {"seed": 3},
        "datasets": {"v1": str(manifest)},
        "experiments": [
            {"id": "EX1", "task": "regression", "dataset": "v1",
             "preprocessing": [{"kind": "max_normalize", "scope": "per_fold"}],
             "model": {"type": "decision_tree", "hyperparameters": {"max_depth": 8}},
             "metrics": ["mae", "r2"], "cv": {"method": "kfold", "k": 4}},
            {"id": "EX2", "task": "regression", "dataset": "v1",
             "preprocessing": [{"kind": "max_normalize", "scope": "per_fold"}],
             "model": {"type": "random_forest", "hyperparameters": {"n_trees": 8}},
             "metrics": ["mae", "r2"], "cv": {"method": "monte_carlo", "n_splits": 4, "test_fraction": 0.25}},
        ],
    }


@pytest.fixture
def reg_manifest(tmp_path, capsys):
    X, y = regression_data(200)
    write_csv(tmp_path / "reg.csv", X, y)
    assert main(["data", "snapshot", "--input", str(tmp_path / "reg.csv"), "--target", "y",
                 "--task", "regression", "--out", str(tmp_path / "snaps")]) == EXIT_OK
    sid = capsys.readouterr().out.strip()
    return tmp_path / "snaps" / f"{sid}.json"


# ---------------------------------------------------------------------------
# plan validate
# ---------------------------------------------------------------------------

def test_validate_ok(tmp_path, reg_manifest, capsys):
    write_json(tmp_path / "plan.json", two_experiment_plan(reg_manifest))
    assert main(["plan", "validate", "--plan", str(tmp_path / "plan.json")]) == EXIT_OK
    assert "2 experiments, OK" in capsys.readouterr().out


def test_validate_duplicate_id(tmp_path, reg_manifest, capsys):
    plan = two_experiment_plan(reg_manifest)
    plan["experiments"][1]["id"] = "EX1"
    write_json(tmp_path / "plan.json", plan)
    assert main(["plan", "validate", "--plan", str(tmp_path / "plan.json")]) == EXIT_FAIL
    out = capsys.readouterr().out
    assert "EX1" in out and "duplicate" in out.lower()


def test_validate_reports_every_problem(tmp_path, reg_manifest, capsys):
    plan = two_experiment_plan(reg_manifest)
    plan["experiments"][0]["task"] = "classification"
    plan["experiments"][1]["cv"]["test_fraction"] = 1.5
    write_json(tmp_path / "plan.json", plan)
    assert main(["plan", "validate", "--plan", str(tmp_path / "plan.json")]) == EXIT_FAIL
    out = capsys.readouterr().out
    assert "mae" in out and "test_fraction" in out


def test_validate_missing_or_broken_file(tmp_path):
    assert main(["plan", "validate", "--plan", str(tmp_path / "nope.json")]) == EXIT_IO
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["plan", "validate", "--plan", str(tmp_path / "bad.json")]) == EXIT_FAIL


# ---------------------------------------------------------------------------
# data snapshot
# ---------------------------------------------------------------------------

def test_snapshot_is_deterministic_and_records_lineage(tmp_path, capsys):
    X, y = regression_data(20)
    write_csv(tmp_path / "d.csv", X, y)
    argv = ["data", "snapshot", "--input", str(tmp_path / "d.csv"), "--target", "y",
            "--task", "regression", "--out", str(tmp_path / "s")]
    assert main(argv) == EXIT_OK
    raw_id = capsys.readouterr().out.strip()
    assert main(argv) == EXIT_OK
    assert capsys.readouterr().out.strip() == raw_id
    assert json.loads((tmp_path / "s" / f"{raw_id}.json").read_text())["lineage"] == []

    assert main(argv + ["--transform", "max_normalize"]) == EXIT_OK
    derived = capsys.readouterr().out.strip()
    manifest = json.loads((tmp_path / "s" / f"{derived}.json").read_text())
    assert len(manifest["lineage"]) == 1 and manifest["parent_id"] == raw_id


def test_snapshot_errors(tmp_path, capsys):
    argv = ["data", "snapshot", "--input", str(tmp_path / "missing.csv"), "--target", "y",
            "--task", "regression", "--out", str(tmp_path / "s")]
    assert main(argv) == EXIT_IO
    (tmp_path / "bad.csv").write_text("a,y\n1,2\nx,3\n")
    argv[3] = str(tmp_path / "bad.csv")
    assert main(argv) == EXIT_FAIL
    assert "row 2" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# run and report
# ---------------------------------------------------------------------------

def test_run_and_rerun_are_identical(tmp_path, reg_manifest, capsys):
    write_json(tmp_path / "plan.json", two_experiment_plan(reg_manifest))
    for out in ("r1", "r2"):
        assert main(["run", "--plan", str(tmp_path / "plan.json"), "--out", str(tmp_path / out)]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("EX1: ok") and lines[1].startswith("EX2: ok")
    with open(tmp_path / "r1" / "summary.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 2
    for name in ("summary.csv", "folds.csv", "predictions.csv"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()
    meta = json.loads((tmp_path / "r1" / "run_metadata.json").read_text())
    assert meta["root_seed"] == 3 and meta["std_convention"]


def test_seed_override_is_recorded(tmp_path, reg_manifest):
    write_json(tmp_path / "plan.json", two_experiment_plan(reg_manifest))
    assert main(["run", "--plan", str(tmp_path / "plan.json"), "--out", str(tmp_path / "r"),
                 "--seed", "99"]) == EXIT_OK
    assert json.loads((tmp_path / "r" / "run_metadata.json").read_text())["root_seed"] == 99


def test_missing_dataset_fails_with_name(tmp_path, reg_manifest, capsys):
    plan = two_experiment_plan(reg_manifest)
    plan["experiments"][1]["dataset"] = "v9"
    plan["datasets"]["v9"] = str(tmp_path / "gone.json")
    write_json(tmp_path / "plan.json", plan)
    assert main(["run", "--plan", str(tmp_path / "plan.json"), "--out", str(tmp_path / "r")]) == EXIT_FAIL
    out = capsys.readouterr().out
    assert "EX1: ok" in out and "EX2: FAILED" in out and "v9" in out
    with open(tmp_path / "r" / "summary.csv", newline="") as fh:
        assert [r["exp_id"] for r in csv.DictReader(fh)] == ["EX1"]


def test_report_outputs(tmp_path, reg_manifest, capsys):
    write_json(tmp_path / "plan.json", two_experiment_plan(reg_manifest))
    main(["run", "--plan", str(tmp_path / "plan.json"), "--out", str(tmp_path / "r")])
    assert main(["report", "--out", str(tmp_path / "r")]) == EXIT_OK
    rep = tmp_path / "r" / "report"
    for name in ("report.md", "report.html", "results.csv", "plan.csv"):
        assert (rep / name).exists()
    md = (rep / "report.md").read_text()
    assert "## Plan" in md and "## Results" in md
    summary = list(csv.DictReader(open(tmp_path / "r" / "summary.csv", newline="")))
    assert sum(r["highlight"] in ("best_lor", "both") for r in summary) == 1
    results = md.split("## Results")[1]
    assert sum(l.startswith("| **") for l in results.splitlines()) >= 1
    assert sorted(p.name for p in (rep / "plots").iterdir()) == ["EX1_pred_vs_true.svg", "EX2_pred_vs_true.svg"]


def test_report_on_empty_dir(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert main(["report", "--out", str(tmp_path / "empty")]) == EXIT_FAIL
    assert capsys.readouterr().err


def test_report_html_status_classes(tmp_path, capsys):
    X, y = regression_data(60, noise=0.05)
    rng = np.random.default_rng(1)
    write_csv(tmp_path / "d.csv", X, y)
    write_csv(tmp_path / "noise.csv", X, rng.normal(size=60))
    ids = []
    for name in ("d", "noise"):
        main(["data", "snapshot", "--input", str(tmp_path / f"{name}.csv"), "--target", "y",
              "--task", "regression", "--out", str(tmp_path / "s")])
        ids.append(capsys.readouterr().out.strip())
    plan = {
        "version": 1, "defaults": {"seed": 0},
        "datasets": {"good": str(tmp_path / "s" / f"{ids[0]}.json"),
                     "bad": str(tmp_path / "s" / f"{ids[1]}.json")},
        "experiments": [
            {"id": "G", "task": "regression", "dataset": "good", "model": {"type": "linear_regression"},
             "metrics": ["mae", "r2"], "cv": {"method": "kfold", "k": 5}},
            {"id": "B", "task": "regression", "dataset": "bad",
             "model": {"type": "decision_tree", "hyperparameters": {"max_depth": 8}},
             "metrics": ["mae", "r2"], "cv": {"method": "kfold", "k": 5}},
        ],
    }
    write_json(tmp_path / "plan.json", plan)
    assert main(["run", "--plan", str(tmp_path / "plan.json"), "--out", str(tmp_path / "r")]) == EXIT_OK
    assert main(["report", "--out", str(tmp_path / "r"), "--format", "html"]) == EXIT_OK
    html = (tmp_path / "r" / "report" / "report.html").read_text()
    assert "status-green" in html and "status-red" in html


def test_mixed_metrics_warn(tmp_path, reg_manifest, capsys):
    plan = two_experiment_plan(reg_manifest)
    plan["experiments"][1]["metrics"] = ["rmse", "r2"]
    write_json(tmp_path / "plan.json", plan)
    main(["run", "--plan", str(tmp_path / "plan.json"), "--out", str(tmp_path / "r")])
    capsys.readouterr()
    assert main(["report", "--out", str(tmp_path / "r"), "--format", "markdown"]) == EXIT_OK
    assert "metric" in capsys.readouterr().err.lower()


def test_four_experiment_plan_runs(tmp_path, capsys):
    X, y = regression_data(80)
    write_csv(tmp_path / "reg.csv", X, y)
    Xc, yc = classification_data(80)
    write_csv(tmp_path / "cls.csv", Xc, yc, target="label", labels=["no", "yes"])
    manifests = []
    for name, target, task in (("reg", "y", "regression"), ("cls", "label", "classification")):
        main(["data", "snapshot", "--input", str(tmp_path / f"{name}.csv"), "--target", target,
              "--task", task, "--out", str(tmp_path / "s")])
        manifests.append(tmp_path / "s" / f"{capsys.readouterr().out.strip()}.json")
    write_json(tmp_path / "plan.json", four_experiment_plan(*manifests))
    assert main(["run", "--plan", str(tmp_path / "plan.json"), "--out", str(tmp_path / "r"),
                 "--jobs", "2"]) == EXIT_OK
    assert main(["report", "--out", str(tmp_path / "r")]) == EXIT_OK
    plots = sorted(p.name for p in (tmp_path / "r" / "report" / "plots").iterdir())
    assert "C1_confusion.svg" in plots and any(p.startswith("C1_loss_fold") for p in plots)


def test_bad_jobs_and_seed():
    assert main(["run", "--plan", "p.json", "--out", "o", "--jobs", "0"]) == EXIT_FAIL
    assert main(["run", "--plan", "p.json", "--out", "o", "--seed", "-1"]) == EXIT_FAIL
