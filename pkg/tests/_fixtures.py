"""Shared fixtures: the worked two-row results table, the planning table and small datasets."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from mlbaseline import metrics as M
from mlbaseline.learners import LearnerSpec
from mlbaseline.reporting import MetricCell, ReportRow, highlight_for
from mlbaseline.selection import RowStatus, SelectionCandidate, color_code, row_status, select_best
from mlbaseline.validation import ExperimentSpec, PreprocessStep, SplitPlan

GOLDEN = Path(__file__).parent / "golden"

# (id, model label, preproc, normalization, train mean, train std, test mean, test std, test r2)
WORKED_ROWS = [
    ("EX1", "Decision Tree", "Raw", "max = 1", 3.4, 0.2, 3.0, 0.3, None),
    ("EX2", "Random Forest", "Baseline removed", "max = 1", 3.5, 0.1, 2.6, 0.4, None),
]

# Adds a row whose LOR is closest to 0 while its COS is far from 1, so the two
# highlights land on different rows, plus an unusable (red) row.
SPLIT_HIGHLIGHT_ROWS = [
    ("EX1", "Decision Tree", "Raw", "max = 1", 3.4, 0.2, 3.0, 0.3, 0.91),
    ("EX2", "Random Forest", "Baseline removed", "max = 1", 3.5, 0.1, 2.6, 0.4, 0.88),
    ("EX3", "k-NN (k=3)", "Raw", "max = 1", 3.0, 0.1, 3.05, 0.5, 0.93),
    ("EX4", "Linear Regression", "Raw", "None", 6.1, 0.4, 6.3, 0.5, -0.2),
]


def rows_from_table(table, task="regression"):
    """Report rows for MAE summaries given as literal numbers, with selection applied."""
    pending = []
    for exp_id, model, pre, norm, trm, trs, tem, tes, r2 in table:
        summary = M.MetricSummary("mae", trm, trs, tem, tes, 5)
        diag = M.diagnostics(summary)
        if r2 is None:
            status = RowStatus("not_applicable")
        else:
            status = row_status(color_code(r2, task), False, None, task)
        cells = (MetricCell("mae", trm, trs, tem, tes),)
        pending.append((exp_id, model, pre, norm, cells, diag, r2, status, tem))
    selection = select_best(
        [SelectionCandidate(p[0], p[5], p[7], p[8]) for p in pending]
    )
    rows = [
        ReportRow(exp_id, model, pre, norm, cells, diag.lor, diag.cos, r2, status,
                  highlight_for(exp_id, selection))
        for exp_id, model, pre, norm, cells, diag, r2, status, _ in pending
    ]
    return rows, selection


def planned_specs():
    """The two planned classification experiments of the planning table."""
    common = dict(task="classification", metric_names=("accuracy", "f1"),
                  split_plan=SplitPlan("kfold", k=5, seed=0))
    return [
        ExperimentSpec(
            experiment_id="EX1", dataset_ref="v1",
            preprocessing=(PreprocessStep("max_normalize", "global"),),
            learner=LearnerSpec("decision_tree", "classification"),
            notes="First quick baseline", **common,
        ),
        ExperimentSpec(
            experiment_id="EX2", dataset_ref="v2",
            preprocessing=(PreprocessStep("linear_detrend", "global"),),
            learner=LearnerSpec("random_forest", "classification"),
            notes="More complex model", **common,
        ),
    ]


def regression_data(n=80, d=3, seed=0, noise=0.1):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.5, 4.0, size=(n, d))
    coef = np.arange(1, d + 1, dtype=float)
    y = X @ coef + 0.5 + noise * rng.normal(size=n)
    return X, y


def classification_data(n=90, d=3, seed=0, n_classes=2):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.5, 4.0, size=(n, d))
    score = X[:, 0] - X[:, 1] + 0.2 * rng.normal(size=n)
    edges = np.quantile(score, np.linspace(0, 1, n_classes + 1)[1:-1])
    y = np.searchsorted(edges, score).astype(np.int64)
    return X, y


def write_csv(path, X, y, target="y", labels=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{j}" for j in range(X.shape[1])] + [target])
        for row, t in zip(X.tolist(), y.tolist()):
            w.writerow([repr(v) for v in row] + [labels[t] if labels else repr(t) if isinstance(t, float) else t])


def four_experiment_plan(reg_manifest, cls_manifest, seed=11):
    """Two regression and two classification experiments, kfold and Monte Carlo, per-fold max = 1."""
    per_fold = [{"kind": "max_normalize", "scope": "per_fold"}]
    return {
        "version": 1,
        "defaults": {"seed": seed},
        "datasets": {"reg": str(reg_manifest), "cls": str(cls_manifest)},
        "experiments": [
            {"id": "R1", "task": "regression", "dataset": "reg", "preprocessing": per_fold,
             "model": {"type": "ridge_regression", "hyperparameters": {"alpha": 0.1}},
             "metrics": ["mae", "r2"], "cv": {"method": "kfold", "k": 5}},
            {"id": "R2", "task": "regression", "dataset": "reg", "preprocessing": per_fold,
             "model": {"type": "random_forest", "hyperparameters": {"n_trees": 15}},
             "metrics": ["mae", "rmse", "r2"],
             "cv": {"method": "monte_carlo", "n_splits": 4, "test_fraction": 0.25}},
            {"id": "C1", "task": "classification", "dataset": "cls", "preprocessing": per_fold,
             "model": {"type": "mlp", "hyperparameters": {"max_epochs": 40, "hidden_units": 6}},
             "metrics": ["accuracy", "f1", "confusion_matrix"],
             "cv": {"method": "kfold", "k": 4, "stratified": True}},
            {"id": "C2", "task": "classification", "dataset": "cls", "preprocessing": per_fold,
             "model": {"type": "knn", "hyperparameters": {"k": 3}},
             "metrics": ["accuracy", "f1"],
             "cv": {"method": "monte_carlo", "n_splits": 5, "test_fraction": 0.2}},
        ],
    }


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2), encoding="utf-8")
