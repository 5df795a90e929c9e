import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlbaseline import metrics as M
from mlbaseline.errors import (
    ConstantTarget,
    EmptyInput,
    LabelOutOfRange,
    LengthMismatch,
    UndefinedDiagnostic,
)

positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False, allow_infinity=False)


# ---------------------------------------------------------------------------
# base metrics against hand-written loops
# ---------------------------------------------------------------------------

def loop_mae(t, p):
    return sum(abs(a - b) for a, b in zip(t, p)) / len(t)


def loop_mse(t, p):
    return sum((a - b) ** 2 for a, b in zip(t, p)) / len(t)


@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=1, max_size=40))
def test_regression_errors_match_loops(pairs):
    t = [a for a, _ in pairs]
    p = [b for _, b in pairs]
    assert M.mae(t, p) == pytest.approx(loop_mae(t, p), rel=1e-12, abs=1e-12)
    assert M.mse(t, p) == pytest.approx(loop_mse(t, p), rel=1e-12, abs=1e-12)
    assert M.rmse(t, p) == pytest.approx(math.sqrt(loop_mse(t, p)), rel=1e-12, abs=1e-12)


def test_r_squared_hand_values():
    assert M.r_squared([1, 2, 3], [1, 2, 3]) == 1.0
    # predicting the mean gives exactly 0
    assert M.r_squared([1, 2, 3], [2, 2, 2]) == 0.0
    # SS_res = 8, SS_tot = 2 -> 1 - 4 = -3
    assert M.r_squared([1, 2, 3], [3, 2, 1]) == pytest.approx(-3.0)


def test_r_squared_constant_target_raises():
    with pytest.raises(ConstantTarget):
        M.r_squared([2, 2, 2], [1, 2, 3])
    with pytest.raises(ConstantTarget):
        M.r_squared([5.0], [5.0])
    assert math.isnan(M.compute_metric("r2", [2, 2], [1, 3]))


def test_input_errors():
    with pytest.raises(LengthMismatch):
        M.mae([1, 2], [1])
    with pytest.raises(EmptyInput):
        M.mae([], [])
    with pytest.raises(LabelOutOfRange):
        M.confusion_matrix([0, 3], [0, 1], 2)


def test_confusion_matrix_and_accuracy():
    t = [0, 0, 1, 1, 2, 2]
    p = [0, 1, 1, 1, 2, 0]
    cm = M.confusion_matrix(t, p, 3)
    assert cm.tolist() == [[1, 1, 0], [0, 2, 0], [1, 0, 1]]
    assert cm.sum() == len(t)
    assert M.accuracy(t, p) == pytest.approx(4 / 6)


def test_f1_binary_and_macro():
    # tp=2, fp=1, fn=1 -> precision 2/3, recall 2/3, f1 2/3
    assert M.f1([1, 1, 1, 0, 0], [1, 1, 0, 1, 0], "binary") == pytest.approx(2 / 3)
    # per class: 0 -> tp 1 fp 1 fn 1 (1/2); 1 -> tp 2 fp 1 (4/5); 2 -> tp 1 fn 1 (2/3)
    t = [0, 0, 1, 1, 2, 2]
    p = [0, 1, 1, 1, 2, 0]
    assert M.f1(t, p, "macro", 3) == pytest.approx((1 / 2 + 4 / 5 + 2 / 3) / 3)


def test_f1_no_positive_predictions_is_zero():
    assert M.f1([1, 0, 1], [0, 0, 0], "binary") == 0.0


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

def test_aggregate_uses_sample_std():
    s = M.aggregate([1.0, 2.0, 3.0], [2.0, 4.0, 6.0], "mae")
    assert s.train_mean == 2.0 and s.test_mean == 4.0
    assert s.train_std == pytest.approx(1.0)
    assert s.test_std == pytest.approx(2.0)
    assert not s.single_fold


def test_aggregate_single_fold_has_zero_std_and_flag():
    s = M.aggregate([1.5], [2.5], "mae")
    assert s.train_std == 0.0 and s.test_std == 0.0 and s.single_fold


def test_aggregate_rejects_mismatch():
    with pytest.raises(LengthMismatch):
        M.aggregate([1.0], [1.0, 2.0], "mae")
    with pytest.raises(EmptyInput):
        M.aggregate([], [], "mae")


# ---------------------------------------------------------------------------
# LOR / COS
# ---------------------------------------------------------------------------

def test_lor_cos_worked_rows():
    assert M.lor(3.4, 3.0) == pytest.approx(0.054, abs=1e-3)
    assert M.cos(3.4, 3.0, 0.2, 0.3) == pytest.approx(0.900, abs=1e-3)
    assert M.lor(3.5, 2.6) == pytest.approx(0.129, abs=5e-3)
    assert M.cos(3.5, 2.6, 0.1, 0.4) == pytest.approx(0.798, abs=5e-3)


def test_lor_natural_log_option():
    assert M.lor(math.e, 1.0, base=math.e) == pytest.approx(1.0)


@pytest.mark.parametrize("args,reason", [
    ((1.0, 0.0), "zero_test_mean"),
    ((0.0, 1.0), "zero_train_mean"),
])
def test_lor_undefined(args, reason):
    with pytest.raises(UndefinedDiagnostic) as info:
        M.lor(*args)
    assert info.value.reason == reason


def test_cos_undefined_for_zero_test_std():
    with pytest.raises(UndefinedDiagnostic) as info:
        M.cos(1.0, 1.0, 0.1, 0.0)
    assert info.value.reason == "zero_test_std"


@settings(max_examples=200)
@given(positive, positive)
def test_lor_antisymmetric(a, b):
    assert M.lor(a, b) == pytest.approx(-M.lor(b, a), abs=1e-12)


@settings(max_examples=200)
@given(positive, positive, positive, positive, st.floats(0.01, 100))
def test_cos_scale_invariant(a, b, c, d, k):
    assert M.cos(k * a, k * b, k * c, k * d) == pytest.approx(M.cos(a, b, c, d), rel=1e-12)


def test_classifiers_follow_sign_rules():
    assert M.classify_lor(-0.3) == "overfitting"
    assert M.classify_lor(0.3) == "underfitting"
    assert M.classify_lor(0.01) == "ideal"
    assert M.classify_cos(1.3) == "overfitting"
    assert M.classify_cos(0.7) == "underfitting"
    assert M.classify_cos(1.0) == "optimal"


def test_diagnostics_reports_undefined_reason():
    s = M.MetricSummary("mae", 0.0, 0.0, 1.0, 0.2, 5)
    d = M.diagnostics(s)
    assert d.lor is None and d.undefined_reason == "zero_train_mean"
    assert d.cos == 0.0


def test_diagnostics_rejects_nonpositive_weights():
    s = M.MetricSummary("mae", 1.0, 0.1, 1.0, 0.1, 5)
    with pytest.raises(ValueError):
        M.diagnostics(s, alpha=0.0)


def test_diagnostic_metric_preference():
    assert M.diagnostic_metric(["r2", "rmse", "mae"]) == "mae"
    assert M.diagnostic_metric(["r2", "mse"]) == "mse"
    assert M.diagnostic_metric(["accuracy", "f1"]) is None


def test_compute_metric_f1_mode_follows_class_count():
    t = np.array([0, 1, 1, 0])
    p = np.array([0, 1, 0, 0])
    assert M.compute_metric("f1", t, p, 2) == pytest.approx(M.f1(t, p, "binary"))
    assert M.compute_metric("f1", t, p, 3) == pytest.approx(M.f1(t, p, "macro", 3))
