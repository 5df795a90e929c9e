"""Row usability (R^2 colour bands), non-learning model detection and best-row selection."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GREEN_THRESHOLD = 0.85
DEFAULT_DEGENERATE_TOLERANCE = 0.01
COLORS = ("red", "yellow", "green", "not_applicable")


def color_code(test_r2, task: str = "regression") -> str:
    """red: r2 < 0; yellow: 0 <= r2 <= 0.85; green: r2 > 0.85."""
    if task != "regression" or test_r2 is None or math.isnan(test_r2):
        return "not_applicable"
    if test_r2 < 0:
        return "red"
    if test_r2 > GREEN_THRESHOLD:
        return "green"
    return "yellow"


@dataclass(frozen=True)
class RowStatus:
    color: str
    degenerate: bool = False
    degenerate_kind: str | None = None
    excluded_from_selection: bool = False


def row_status(color: str, degenerate: bool, degenerate_kind: str | None, task: str) -> RowStatus:
    if task == "regression":
        # only green rows are considered for regression
        excluded = degenerate or color != "green"
    else:
        excluded = degenerate
    return RowStatus(color, degenerate, degenerate_kind, excluded)


def _spread(values) -> float:
    return float(np.std(np.asarray(values, dtype=np.float64)))


def fold_is_degenerate(task: str, y_true, y_pred, tolerance=DEFAULT_DEGENERATE_TOLERANCE) -> bool:
    """Single-partition test: one predicted class, or prediction spread within
    ``tolerance`` times the spread of the true values."""
    y_pred = np.asarray(y_pred)
    if task == "classification":
        return len(np.unique(y_pred)) <= 1
    return _spread(y_pred) <= tolerance * _spread(y_true)


def detect_degenerate(fold_records, task: str, tolerance: float = DEFAULT_DEGENERATE_TOLERANCE):
    """Return ``(degenerate, kind)`` for an experiment's folds.

    Every fold must look degenerate. Folds with fewer than two test rows (or,
    for regression, a constant test target) carry no spread information, so
    when any fold is like that the test predictions of all folds are pooled.
    """
    records = list(fold_records)
    if not records:
        raise ValueError("need at least one fold")
    kind = "single_class_prediction" if task == "classification" else "constant_regression"

    def informative(r):
        if len(r.test_true) < 2:
            return False
        return task == "classification" or _spread(r.test_true) > 0

    if all(informative(r) for r in records):
        flagged = all(fold_is_degenerate(task, r.test_true, r.test_pred, tolerance) for r in records)
    else:
        y_true = np.concatenate([np.asarray(r.test_true) for r in records])
        y_pred = np.concatenate([np.asarray(r.test_pred) for r in records])
        flagged = fold_is_degenerate(task, y_true, y_pred, tolerance)
    return (True, kind) if flagged else (False, None)


@dataclass(frozen=True)
class SelectionCandidate:
    experiment_id: str
    diagnostics: object  # metrics.OverfitDiagnostics
    status: RowStatus
    test_mean: float = math.inf  # error metric test mean, used to break ties


@dataclass(frozen=True)
class SelectionResult:
    best_lor_experiment_id: str | None
    best_cos_experiment_id: str | None
    eligible_ids: tuple
    tie_note: str | None = None


def _argbest(candidates, score, label):
    scored = [(score(c), c) for c in candidates]
    scored = [(s, c) for s, c in scored if s is not None]
    if not scored:
        return None, None
    best = min(s for s, _ in scored)
    tied = sorted(
        (c for s, c in scored if s == best),
        key=lambda c: (c.test_mean, c.experiment_id),
    )
    note = None
    if len(tied) > 1:
        note = (
            f"{label} tie between {', '.join(c.experiment_id for c in tied)}; "
            f"broken by lower test error then experiment id"
        )
    return tied[0].experiment_id, note


def select_best(rows) -> SelectionResult:
    """Pick the eligible row with LOR closest to 0 and the one with COS closest to 1."""
    eligible = [
        r for r in rows
        if not r.status.excluded_from_selection
        and (r.diagnostics.lor is not None or r.diagnostics.cos is not None)
    ]
    best_lor, note_lor = _argbest(
        eligible, lambda r: None if r.diagnostics.lor is None else abs(r.diagnostics.lor), "LOR"
    )
    best_cos, note_cos = _argbest(
        eligible, lambda r: None if r.diagnostics.cos is None else abs(r.diagnostics.cos - 1.0), "COS"
    )
    notes = [n for n in (note_lor, note_cos) if n]
    return SelectionResult(
        best_lor_experiment_id=best_lor,
        best_cos_experiment_id=best_cos,
        eligible_ids=tuple(r.experiment_id for r in eligible),
        tie_note="; ".join(notes) if notes else None,
    )


def highlight_for(experiment_id: str, selection: SelectionResult) -> str:
    lor_hit = experiment_id == selection.best_lor_experiment_id
    cos_hit = experiment_id == selection.best_cos_experiment_id
    if lor_hit and cos_hit:
        return "both"
    if lor_hit:
        return "best_lor"
    if cos_hit:
        return "best_cos"
    return "none"
