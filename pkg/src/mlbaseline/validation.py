"""Cross-validation splits and end-to-end execution of one planned experiment."""
from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import metrics as M
from .dataset import (
    SCOPES,
    TRANSFORM_KINDS,
    DatasetSnapshot,
    TransformSpec,
    fit_transform_matrix,
    transform_features,
)
from .errors import BaselineError, ExperimentFailed, InvalidPlan, StratificationImpossible
from .learners import LearnerSpec, TrainingTrace, fit, predict
from .rng import sub_rng
from .selection import (
    DEFAULT_DEGENERATE_TOLERANCE,
    RowStatus,
    color_code,
    detect_degenerate,
    fold_is_degenerate,
    row_status,
)

SPLIT_METHODS = ("loo", "kfold", "monte_carlo")
_SNAPSHOT_ID = re.compile(r"^[0-9a-f]{64}$")


@dataclass(frozen=True)
class SplitPlan:
    method: str
    k: int = 5
    n_splits: int = 10
    test_fraction: float = 0.2
    shuffle: bool = True
    stratified: bool = False
    seed: int = 0

    def to_dict(self) -> dict:
        d = {"method": self.method, "seed": int(self.seed)}
        if self.method == "kfold":
            d.update(k=self.k, shuffle=self.shuffle, stratified=self.stratified)
        elif self.method == "monte_carlo":
            d.update(n_splits=self.n_splits, test_fraction=self.test_fraction,
                     stratified=self.stratified)
        return d

    def label(self) -> str:
        if self.method == "loo":
            return "LOO"
        if self.method == "kfold":
            return f"{self.k}-fold" + (" stratified" if self.stratified else "")
        return f"MC {self.n_splits}x{self.test_fraction:g}" + (" stratified" if self.stratified else "")


@dataclass(frozen=True)
class FoldAssignment:
    fold_index: int
    train_indices: np.ndarray
    test_indices: np.ndarray


def _assignment(i, test, n) -> FoldAssignment:
    test = np.sort(np.asarray(test, dtype=np.int64))
    mask = np.ones(n, dtype=bool)
    mask[test] = False
    return FoldAssignment(i, np.flatnonzero(mask).astype(np.int64), test)


def _deal(indices, k):
    """Split ``indices`` into ``k`` contiguous blocks whose sizes differ by at most one."""
    n = len(indices)
    sizes = [n // k + (1 if j < n % k else 0) for j in range(k)]
    blocks, start = [], 0
    for s in sizes:
        blocks.append(indices[start:start + s])
        start += s
    return blocks


def monte_carlo_test_size(test_fraction: float, n: int) -> int:
    """ceil(test_fraction * n), evaluated on the decimal value of the fraction."""
    return math.ceil(Fraction(str(test_fraction)) * n)


def make_splits(plan: SplitPlan, n_samples: int, labels=None) -> list[FoldAssignment]:
    """Deterministic train/test assignments for ``plan`` over ``n_samples`` rows."""
    n = int(n_samples)
    if n < 2:
        raise InvalidPlan(f"cross-validation needs at least 2 samples, got {n}")
    if plan.method not in SPLIT_METHODS:
        raise InvalidPlan(f"unknown split method {plan.method!r}")
    if plan.stratified and plan.method != "loo":
        if labels is None:
            raise InvalidPlan("stratified splitting needs class labels")
        labels = np.asarray(labels)
        if len(labels) != n:
            raise InvalidPlan(f"{len(labels)} labels for {n} samples")
        classes = np.unique(labels)

    if plan.method == "loo":
        return [_assignment(i, [i], n) for i in range(n)]

    if plan.method == "kfold":
        k = plan.k
        if not (2 <= k <= n):
            raise InvalidPlan(f"kfold needs 2 <= k <= n_samples, got k={k}, n={n}")
        if not plan.stratified:
            order = np.arange(n)
            if plan.shuffle:
                order = sub_rng(plan.seed, 0).permutation(n)
            return [_assignment(j, b, n) for j, b in enumerate(_deal(order, k))]
        tests = [[] for _ in range(k)]
        for c in classes:
            members = np.flatnonzero(labels == c)
            if len(members) < k:
                raise StratificationImpossible(
                    f"class {c} has {len(members)} members, fewer than k={k} folds"
                )
            if plan.shuffle:
                members = members[sub_rng(plan.seed, 0, int(c)).permutation(len(members))]
            for j, b in enumerate(_deal(members, k)):
                tests[j].extend(b.tolist())
        return [_assignment(j, t, n) for j, t in enumerate(tests)]

    # monte_carlo
    if plan.n_splits < 1:
        raise InvalidPlan("monte_carlo needs n_splits >= 1")
    if not (0 < plan.test_fraction < 1):
        raise InvalidPlan("monte_carlo test_fraction must lie in (0, 1)")
    out = []
    if not plan.stratified:
        n_test = monte_carlo_test_size(plan.test_fraction, n)
        if n_test >= n:
            raise InvalidPlan(
                f"test_fraction {plan.test_fraction} leaves no training rows out of {n}"
            )
        for s in range(plan.n_splits):
            perm = sub_rng(plan.seed, s).permutation(n)
            out.append(_assignment(s, perm[:n_test], n))
        return out
    for s in range(plan.n_splits):
        test = []
        for c in classes:
            members = np.flatnonzero(labels == c)
            n_test = monte_carlo_test_size(plan.test_fraction, len(members))
            if n_test >= len(members):
                raise StratificationImpossible(
                    f"class {c} has {len(members)} members; cannot place it in both partitions"
                )
            perm = sub_rng(plan.seed, s, int(c)).permutation(len(members))
            test.extend(members[perm[:n_test]].tolist())
        out.append(_assignment(s, test, n))
    return out


@dataclass(frozen=True)
class PreprocessStep:
    kind: str
    scope: str = "per_fold"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "scope": self.scope}


@dataclass(frozen=True)
class ExperimentSpec:
    experiment_id: str
    task: str
    dataset_ref: str
    preprocessing: tuple
    learner: LearnerSpec
    metric_names: tuple
    split_plan: SplitPlan
    notes: str = ""

    def problems(self) -> list[str]:
        """Every rule this spec breaks (empty when valid)."""
        out = []
        where = f"experiment {self.experiment_id!r}"
        if not self.experiment_id:
            out.append("experiment id must be non-empty")
        if self.task not in ("regression", "classification"):
            out.append(f"{where}: unknown task {self.task!r}")
        if self.learner.task_kind != self.task:
            out.append(f"{where}: learner task {self.learner.task_kind!r} differs from {self.task!r}")
        if not self.metric_names:
            out.append(f"{where}: no metrics requested")
        for m in self.metric_names:
            if m not in M.METRIC_NAMES:
                out.append(f"{where}: unknown metric {m!r}")
            elif M.metric_task(m) != self.task:
                out.append(f"{where}: metric {m!r} is not a {self.task} metric")
        seen_per_fold = False
        for step in self.preprocessing:
            if step.kind not in TRANSFORM_KINDS:
                out.append(f"{where}: unknown transform {step.kind!r}")
            if step.scope not in SCOPES:
                out.append(f"{where}: unknown transform scope {step.scope!r}")
            if step.scope == "per_fold":
                seen_per_fold = True
            elif seen_per_fold:
                out.append(f"{where}: global transform {step.kind!r} follows a per_fold transform")
        if self.split_plan.method not in SPLIT_METHODS:
            out.append(f"{where}: unknown cv method {self.split_plan.method!r}")
        if self.split_plan.stratified and self.task != "classification":
            out.append(f"{where}: stratified splitting is only for classification")
        return out

    def to_dict(self) -> dict:
        return {
            "id": self.experiment_id,
            "task": self.task,
            "dataset": self.dataset_ref,
            "preprocessing": [p.to_dict() for p in self.preprocessing],
            "model": {
                "type": self.learner.model_type,
                "hyperparameters": dict(self.learner.hyperparameters),
                "seed": int(self.learner.seed),
            },
            "metrics": list(self.metric_names),
            "cv": self.split_plan.to_dict(),
            "notes": self.notes,
        }


@dataclass(frozen=True, eq=False)
class FoldRecord:
    experiment_id: str
    fold_index: int
    train_metrics: dict
    test_metrics: dict
    test_indices: np.ndarray
    test_true: np.ndarray
    test_pred: np.ndarray
    train_confusion: np.ndarray | None = None
    test_confusion: np.ndarray | None = None
    training_trace: TrainingTrace | None = None
    degenerate_flag: bool = False
    transforms: tuple = ()
    n_train: int = 0
    warnings: tuple = ()


def _scalar_metrics(names):
    return [m for m in names if m != "confusion_matrix"]


def _run_fold(spec: ExperimentSpec, X, y, fold: FoldAssignment, n_classes, tolerance):
    tr, te = fold.train_indices, fold.test_indices
    X_tr, X_te = X[tr], X[te]
    fitted = []
    for step in spec.preprocessing:
        if step.scope != "per_fold":
            continue
        # statistics come from the training rows only
        t = fit_transform_matrix(X_tr, step.kind, scope="per_fold")
        X_tr = transform_features(X_tr, t)
        X_te = transform_features(X_te, t)
        fitted.append(t)
    model = fit(spec.learner, X_tr, y[tr])
    p_tr = predict(model, X_tr)
    p_te = predict(model, X_te)
    names = _scalar_metrics(spec.metric_names)
    train_m = {m: M.compute_metric(m, y[tr], p_tr, n_classes) for m in names}
    test_m = {m: M.compute_metric(m, y[te], p_te, n_classes) for m in names}
    cm_tr = cm_te = None
    if spec.task == "classification":
        cm_tr = M.confusion_matrix(y[tr], p_tr, n_classes)
        cm_te = M.confusion_matrix(y[te], p_te, n_classes)
    return FoldRecord(
        experiment_id=spec.experiment_id,
        fold_index=fold.fold_index,
        train_metrics=train_m,
        test_metrics=test_m,
        test_indices=te,
        test_true=y[te],
        test_pred=p_te,
        train_confusion=cm_tr,
        test_confusion=cm_te,
        training_trace=model.training_trace,
        degenerate_flag=fold_is_degenerate(spec.task, y[te], p_te, tolerance),
        transforms=tuple(fitted),
        n_train=len(tr),
        warnings=model.warnings,
    )


def prepare_global(spec: ExperimentSpec, snapshot: DatasetSnapshot):
    """Apply the global-scope steps once, before any split; returns features and specs."""
    X = snapshot.features
    applied = []
    for step in spec.preprocessing:
        if step.scope == "global":
            t = fit_transform_matrix(X, step.kind, snapshot.feature_names, scope="global")
            X = transform_features(X, t)
            applied.append(t)
    return X, tuple(applied)


def run_experiment(
    spec: ExperimentSpec,
    snapshot: DatasetSnapshot,
    jobs: int = 1,
    degenerate_tolerance: float = DEFAULT_DEGENERATE_TOLERANCE,
) -> list[FoldRecord]:
    """Run every fold of ``spec`` on ``snapshot``; records come back ordered by fold index."""
    problems = spec.problems()
    if snapshot.task_kind != spec.task:
        problems.append(
            f"experiment {spec.experiment_id!r}: task {spec.task!r} but dataset is {snapshot.task_kind!r}"
        )
    if _SNAPSHOT_ID.match(spec.dataset_ref or "") and spec.dataset_ref != snapshot.snapshot_id:
        problems.append(
            f"experiment {spec.experiment_id!r}: dataset_ref {spec.dataset_ref} does not match "
            f"snapshot {snapshot.snapshot_id}"
        )
    if problems:
        raise InvalidPlan("; ".join(problems))

    try:
        X, _ = prepare_global(spec, snapshot)
        labels = snapshot.target if spec.split_plan.stratified else None
        folds = make_splits(spec.split_plan, snapshot.n_samples, labels)
    except BaselineError as exc:
        raise ExperimentFailed(spec.experiment_id, None, exc) from exc
    y = snapshot.target
    n_classes = snapshot.n_classes if spec.task == "classification" else None

    def one(fold):
        try:
            return _run_fold(spec, X, y, fold, n_classes, degenerate_tolerance)
        except (BaselineError, ValueError, np.linalg.LinAlgError) as exc:
            raise ExperimentFailed(spec.experiment_id, fold.fold_index, exc) from exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(one, folds))
    else:
        records = [one(f) for f in folds]
    return sorted(records, key=lambda r: r.fold_index)


@dataclass(frozen=True)
class DiagnosticSettings:
    alpha: float = M.DEFAULT_ALPHA
    beta: float = M.DEFAULT_BETA
    epsilon_ideal: float = M.DEFAULT_EPSILON_IDEAL
    log_base: float = M.DEFAULT_LOG_BASE
    degenerate_tolerance: float = DEFAULT_DEGENERATE_TOLERANCE


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    spec: ExperimentSpec
    records: tuple
    summaries: dict                 # metric name -> MetricSummary
    diagnostics: M.OverfitDiagnostics
    r2_test: float | None
    r2_pooled: bool
    status: RowStatus
    unequal_folds: bool
    global_transforms: tuple = field(default=())

    @property
    def experiment_id(self) -> str:
        return self.spec.experiment_id

    def error_test_mean(self) -> float:
        s = self.summaries.get(self.diagnostics.metric_name)
        return s.test_mean if s is not None else math.inf


def _r2_test(records):
    """Fold-mean test R^2, or R^2 of the pooled test predictions when a fold's value is undefined."""
    per_fold = [M.compute_metric("r2", r.test_true, r.test_pred) for r in records]
    if all(not math.isnan(v) for v in per_fold):
        return float(np.mean(per_fold)), False
    y_true = np.concatenate([r.test_true for r in records])
    y_pred = np.concatenate([r.test_pred for r in records])
    v = M.compute_metric("r2", y_true, y_pred)
    return (None if math.isnan(v) else v), True


def summarize_experiment(
    spec: ExperimentSpec,
    records,
    settings: DiagnosticSettings = DiagnosticSettings(),
    global_transforms: tuple = (),
) -> ExperimentResult:
    records = tuple(records)
    summaries = {}
    for m in _scalar_metrics(spec.metric_names):
        summaries[m] = M.aggregate(
            [r.train_metrics[m] for r in records], [r.test_metrics[m] for r in records], m
        )
    err = M.diagnostic_metric(spec.metric_names)
    if err is None:
        diag = M.undefined_diagnostics("", "no_error_metric", settings.alpha, settings.beta)
    else:
        diag = M.diagnostics(summaries[err], settings.alpha, settings.beta,
                             settings.epsilon_ideal, settings.log_base)
    r2, pooled = (None, False)
    if spec.task == "regression":
        r2, pooled = _r2_test(records)
    degenerate, kind = detect_degenerate(records, spec.task, settings.degenerate_tolerance)
    status = row_status(color_code(r2, spec.task), degenerate, kind, spec.task)
    sizes = {len(r.test_indices) for r in records}
    return ExperimentResult(
        spec=spec,
        records=records,
        summaries=summaries,
        diagnostics=diag,
        r2_test=r2,
        r2_pooled=pooled,
        status=status,
        unequal_folds=len(sizes) > 1,
        global_transforms=tuple(global_transforms),
    )
