"""Base metrics, fold aggregation and the LOR / COS overfitting diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstantTarget,
    EmptyInput,
    LabelOutOfRange,
    LengthMismatch,
    UndefinedDiagnostic,
)

REGRESSION_METRICS = ("mae", "mse", "rmse", "r2")
CLASSIFICATION_METRICS = ("accuracy", "f1", "confusion_matrix")
ERROR_METRICS = ("mae", "mse", "rmse")
METRIC_NAMES = REGRESSION_METRICS + CLASSIFICATION_METRICS

DEFAULT_ALPHA = 0.5
DEFAULT_BETA = 0.5
DEFAULT_EPSILON_IDEAL = 0.02
DEFAULT_LOG_BASE = 10.0
STD_CONVENTION = "sample (n-1)"


def metric_task(name: str) -> str:
    if name in REGRESSION_METRICS:
        return "regression"
    if name in CLASSIFICATION_METRICS:
        return "classification"
    raise KeyError(f"unknown metric {name!r}")


def _pair(y_true, y_pred, dtype=np.float64):
    a = np.asarray(y_true, dtype=dtype)
    b = np.asarray(y_pred, dtype=dtype)
    if a.shape != b.shape:
        raise LengthMismatch(f"y_true has {a.size} values, y_pred has {b.size}")
    if a.size == 0:
        raise EmptyInput("metric of an empty vector")
    return a, b


def mae(y_true, y_pred) -> float:
    a, b = _pair(y_true, y_pred)
    return float(np.mean(np.abs(a - b)))


def mse(y_true, y_pred) -> float:
    a, b = _pair(y_true, y_pred)
    r = a - b
    return float(np.mean(r * r))


def rmse(y_true, y_pred) -> float:
    return math.sqrt(mse(y_true, y_pred))


def r_squared(y_true, y_pred) -> float:
    """``1 - SS_res/SS_tot``. Raises :class:`ConstantTarget` when SS_tot is 0."""
    a, b = _pair(y_true, y_pred)
    if a.size < 2:
        raise ConstantTarget("R^2 needs at least 2 values")
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        raise ConstantTarget("R^2 is undefined for a constant target")
    return 1.0 - float(np.sum((a - b) ** 2)) / ss_tot


def _labels(y_true, y_pred, n_classes=None):
    a, b = _pair(y_true, y_pred, dtype=np.int64)
    if n_classes is not None:
        bad = (a < 0) | (a >= n_classes) | (b < 0) | (b >= n_classes)
        if bad.any():
            raise LabelOutOfRange(f"labels must lie in [0, {n_classes})")
    return a, b


def accuracy(y_true, y_pred) -> float:
    a, b = _labels(y_true, y_pred)
    return float(np.mean(a == b))


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """``cm[i, j]`` counts samples of true class ``i`` predicted as ``j``."""
    a, b = _labels(y_true, y_pred, n_classes)
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (a, b), 1)
    return cm


def _f1_from_cm(cm, c):
    tp = cm[c, c]
    fp = cm[:, c].sum() - tp
    fn = cm[c, :].sum() - tp
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2.0 * tp / denom


def f1(y_true, y_pred, averaging: str = "binary", n_classes: int | None = None) -> float:
    """F1 score; ``binary`` treats class 1 as positive, ``macro`` averages over classes.

    Classes with an empty denominator contribute 0.
    """
    a, b = _labels(y_true, y_pred)
    if n_classes is None:
        n_classes = int(max(a.max(), b.max(), 1)) + 1
    cm = confusion_matrix(a, b, n_classes)
    if averaging == "binary":
        return float(_f1_from_cm(cm, 1))
    if averaging == "macro":
        return float(np.mean([_f1_from_cm(cm, c) for c in range(n_classes)]))
    raise ValueError(f"unknown averaging {averaging!r}")


def compute_metric(name: str, y_true, y_pred, n_classes: int | None = None) -> float:
    """Scalar metric by wire name; undefined values come back as NaN."""
    if name == "mae":
        return mae(y_true, y_pred)
    if name == "mse":
        return mse(y_true, y_pred)
    if name == "rmse":
        return rmse(y_true, y_pred)
    if name == "r2":
        try:
            return r_squared(y_true, y_pred)
        except ConstantTarget:
            return math.nan
    if name == "accuracy":
        return accuracy(y_true, y_pred)
    if name == "f1":
        k = n_classes if n_classes is not None else None
        averaging = "binary" if k == 2 else "macro"
        return f1(y_true, y_pred, averaging, n_classes=k)
    raise KeyError(f"{name!r} is not a scalar metric")


@dataclass(frozen=True)
class MetricSummary:
    metric_name: str
    train_mean: float
    train_std: float
    test_mean: float
    test_std: float
    n_folds: int
    per_fold_train: tuple = field(default=())
    per_fold_test: tuple = field(default=())
    single_fold: bool = False


def aggregate(per_fold_train, per_fold_test, metric_name: str) -> MetricSummary:
    """Unweighted fold means and sample standard deviations (std 0 for one fold)."""
    tr = [float(v) for v in per_fold_train]
    te = [float(v) for v in per_fold_test]
    if len(tr) != len(te):
        raise LengthMismatch(f"{len(tr)} train folds vs {len(te)} test folds")
    if not tr:
        raise EmptyInput("no folds to aggregate")
    single = len(tr) == 1

    def stats(v):
        arr = np.asarray(v)
        return float(np.mean(arr)), 0.0 if single else float(np.std(arr, ddof=1))

    tm, ts = stats(tr)
    em, es = stats(te)
    return MetricSummary(metric_name, tm, ts, em, es, len(tr), tuple(tr), tuple(te), single)


def lor(train_mean: float, test_mean: float, base: float = DEFAULT_LOG_BASE) -> float:
    """Logarithm (default base 10) of the train/test error ratio."""
    if not test_mean > 0:
        raise UndefinedDiagnostic("zero_test_mean")
    if not train_mean > 0:
        raise UndefinedDiagnostic("zero_train_mean")
    return math.log(train_mean / test_mean) / math.log(base)


def classify_lor(lor_value: float, epsilon_ideal: float = DEFAULT_EPSILON_IDEAL) -> str:
    if abs(lor_value) <= epsilon_ideal:
        return "ideal"
    return "overfitting" if lor_value < 0 else "underfitting"


def cos(train_mean, test_mean, train_std, test_std,
        alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA) -> float:
    """``alpha * train_mean/test_mean + beta * train_std/test_std``."""
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must both be > 0")
    if not test_mean > 0:
        raise UndefinedDiagnostic("zero_test_mean")
    if not test_std > 0:
        raise UndefinedDiagnostic("zero_test_std")
    return alpha * (train_mean / test_mean) + beta * (train_std / test_std)


def classify_cos(cos_value: float, epsilon_ideal: float = DEFAULT_EPSILON_IDEAL) -> str:
    # labels follow the published reading: above 1 overfitting, below 1 underfitting
    if abs(cos_value - 1.0) <= epsilon_ideal:
        return "optimal"
    return "overfitting" if cos_value > 1.0 else "underfitting"


@dataclass(frozen=True)
class OverfitDiagnostics:
    metric_name: str
    lor: float | None
    cos: float | None
    alpha: float
    beta: float
    lor_class: str  # ideal | overfitting | underfitting | undefined
    cos_deviation: float | None
    cos_class: str  # optimal | overfitting | underfitting | undefined
    undefined_reason: str | None = None


def diagnostics(
    summary: MetricSummary,
    alpha: float = DEFAULT_ALPHA,
    beta: float = DEFAULT_BETA,
    epsilon_ideal: float = DEFAULT_EPSILON_IDEAL,
    log_base: float = DEFAULT_LOG_BASE,
) -> OverfitDiagnostics:
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must both be > 0")
    reason = None
    try:
        lor_v = lor(summary.train_mean, summary.test_mean, log_base)
        lor_class = classify_lor(lor_v, epsilon_ideal)
    except UndefinedDiagnostic as exc:
        lor_v, lor_class, reason = None, "undefined", exc.reason
    try:
        cos_v = cos(summary.train_mean, summary.test_mean, summary.train_std,
                    summary.test_std, alpha, beta)
        cos_dev = cos_v - 1.0
        cos_class = classify_cos(cos_v, epsilon_ideal)
    except UndefinedDiagnostic as exc:
        cos_v, cos_dev, cos_class = None, None, "undefined"
        reason = reason or exc.reason
    return OverfitDiagnostics(
        metric_name=summary.metric_name,
        lor=lor_v,
        cos=cos_v,
        alpha=alpha,
        beta=beta,
        lor_class=lor_class,
        cos_deviation=cos_dev,
        cos_class=cos_class,
        undefined_reason=reason,
    )


def undefined_diagnostics(metric_name: str, reason: str, alpha=DEFAULT_ALPHA,
                          beta=DEFAULT_BETA) -> OverfitDiagnostics:
    return OverfitDiagnostics(metric_name, None, None, alpha, beta, "undefined", None,
                              "undefined", reason)


def diagnostic_metric(metric_names) -> str | None:
    """Error metric that LOR/COS are computed on: MAE, else MSE, else RMSE."""
    for name in ERROR_METRICS:
        if name in metric_names:
            return name
    return None
