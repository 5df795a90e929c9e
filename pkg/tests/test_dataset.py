import hashlib
import json
import os
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mlbaseline.dataset import (
    TransformSpec,
    apply_transform,
    content_hash,
    fit_transform,
    load_csv,
    load_snapshot,
    make_snapshot,
    save_snapshot,
    transform_features,
)
from mlbaseline.errors import (
    DegenerateStatistic,
    DimensionMismatch,
    EmptyDataset,
    HashMismatch,
    MalformedCsv,
    NonNumericFeature,
    SnapshotIOError,
)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def small_csv(tmp_path):
    return write(tmp_path / "d.csv", "a,b,y\n1,2,0.5\n3,4,1.5\n5,8,2.5\n")


def test_load_csv_raw_snapshot(small_csv):
    s = load_csv(small_csv, "y", "regression")
    assert s.n_samples == 3 and s.n_features == 2
    assert s.lineage == () and s.parent_id == "raw"
    assert s.feature_names == ("a", "b")
    assert s.features.tolist() == [[1, 2], [3, 4], [5, 8]]
    assert s.target.tolist() == [0.5, 1.5, 2.5]


def test_load_csv_twice_gives_same_id(small_csv):
    assert load_csv(small_csv, "y", "regression").snapshot_id == \
        load_csv(small_csv, "y", "regression").snapshot_id


def test_snapshot_id_is_sha256_of_documented_layout(small_csv):
    s = load_csv(small_csv, "y", "regression")
    # rebuilt with struct packing rather than numpy buffers
    h = hashlib.sha256(b"mlbaseline-snapshot\x00")
    h.update(struct.pack("<2q", 3, 2))
    h.update(struct.pack("<6d", 1, 2, 3, 4, 5, 8))
    h.update(struct.pack("<3d", 0.5, 1.5, 2.5))
    h.update(b'{"feature_names":["a","b"],"lineage":[],"task_kind":"regression"}')
    assert s.snapshot_id == h.hexdigest()


def test_hash_changes_with_any_field(small_csv):
    s = load_csv(small_csv, "y", "regression")
    base = s.snapshot_id
    X = s.features.copy()
    X[0, 0] += 1e-12
    assert content_hash(X, s.target, s.feature_names, "regression", ()) != base
    assert content_hash(s.features, s.target, ("a", "c"), "regression", ()) != base
    assert content_hash(s.features, s.target, s.feature_names, "classification", ()) != base


def test_non_numeric_feature_names_row(tmp_path):
    p = write(tmp_path / "bad.csv", "a,b,y\n1,2,3\nabc,2,3\n")
    with pytest.raises(NonNumericFeature) as info:
        load_csv(p, "y", "regression")
    assert info.value.row == 2
    assert "row 2" in str(info.value)


def test_nan_cell_is_rejected(tmp_path):
    p = write(tmp_path / "nan.csv", "a,y\n1,2\nnan,3\n")
    with pytest.raises(NonNumericFeature):
        load_csv(p, "y", "regression")


def test_missing_target_and_empty(tmp_path):
    p = write(tmp_path / "d.csv", "a,b\n1,2\n")
    with pytest.raises(MalformedCsv):
        load_csv(p, "y", "regression")
    p = write(tmp_path / "e.csv", "a,y\n")
    with pytest.raises(EmptyDataset):
        load_csv(p, "y", "regression")
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "missing.csv", "y", "regression")


def test_ragged_row_is_malformed(tmp_path):
    p = write(tmp_path / "r.csv", "a,b,y\n1,2,3\n1,2\n")
    with pytest.raises(MalformedCsv):
        load_csv(p, "y", "regression")


def test_string_labels_map_by_first_appearance(tmp_path):
    p = write(tmp_path / "c.csv", "a,label\n1,dog\n2,cat\n3,dog\n4,bird\n")
    s = load_csv(p, "label", "classification")
    assert s.target.tolist() == [0, 1, 0, 2]
    assert s.class_labels == ("dog", "cat", "bird")
    assert s.target.dtype == np.int64


def test_integer_labels_kept(tmp_path):
    p = write(tmp_path / "c.csv", "a,label\n1,2\n2,0\n3,1\n")
    s = load_csv(p, "label", "classification")
    assert s.target.tolist() == [2, 0, 1]
    assert s.class_labels is None


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def snap_from(X, y=None):
    X = np.asarray(X, dtype=float)
    y = np.zeros(len(X)) if y is None else np.asarray(y, dtype=float)
    return make_snapshot(X, y, [f"x{j}" for j in range(X.shape[1])], "regression")


def test_max_normalize_example():
    s = snap_from([[2.0], [4.0]])
    t = fit_transform(s, "max_normalize")
    assert t.parameters == {"max_abs[0]": 4.0}
    assert apply_transform(s, t).features[:, 0].tolist() == [0.5, 1.0]


def test_min_max_example():
    s = snap_from([[1.0], [3.0]])
    t = fit_transform(s, "min_max")
    assert t.parameters == {"min[0]": 1.0, "max[0]": 3.0}
    assert apply_transform(s, t).features[:, 0].tolist() == [0.0, 1.0]


def test_z_score_constant_feature_fails():
    with pytest.raises(DegenerateStatistic):
        fit_transform(snap_from([[5.0], [5.0]]), "z_score")
    with pytest.raises(DegenerateStatistic):
        fit_transform(snap_from([[0.0], [0.0]]), "max_normalize")


def test_z_score_matches_population_stats():
    X = np.array([[1.0, 10.0], [2.0, 20.0], [6.0, 30.0]])
    s = snap_from(X)
    out = apply_transform(s, fit_transform(s, "z_score")).features
    assert np.allclose(out.mean(axis=0), 0, atol=1e-15)
    assert np.allclose(out.std(axis=0), 1, atol=1e-15)


def test_identity_keeps_values_and_extends_lineage():
    s = snap_from([[1.0, 2.0], [3.0, 4.0]])
    t = fit_transform(s, "identity")
    assert t.parameters == {}
    d = apply_transform(s, t)
    assert np.array_equal(d.features, s.features)
    assert d.lineage == (t,) and d.parent_id == s.snapshot_id
    assert d.snapshot_id != s.snapshot_id


def test_linear_detrend_removes_straight_lines():
    t_idx = np.arange(5.0)
    X = np.vstack([2.0 + 3.0 * t_idx, -1.0 + 0.5 * t_idx])
    s = snap_from(X)
    out = apply_transform(s, fit_transform(s, "linear_detrend")).features
    assert np.allclose(out, 0.0, atol=1e-12)


def test_linear_detrend_residual_is_orthogonal_to_line():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(6, 7))
    out = transform_features(X, fit_transform(snap_from(X), "linear_detrend"))
    t_idx = np.arange(7.0)
    assert np.allclose(out.sum(axis=1), 0.0, atol=1e-12)
    assert np.allclose(out @ t_idx, 0.0, atol=1e-10)


def test_row_subset_fits_only_those_rows():
    s = snap_from([[1.0], [2.0], [100.0]])
    t = fit_transform(s, "max_normalize", row_subset=[0, 1])
    assert t.parameters == {"max_abs[0]": 2.0}
    with pytest.raises(ValueError):
        fit_transform(s, "max_normalize", row_subset=[])


def test_default_scope():
    s = snap_from([[1.0, 2.0], [3.0, 5.0]])
    assert fit_transform(s, "z_score").scope == "per_fold"
    assert fit_transform(s, "linear_detrend").scope == "global"


def test_dimension_mismatch():
    t = fit_transform(snap_from([[1.0, 2.0], [3.0, 4.0]]), "max_normalize")
    with pytest.raises(DimensionMismatch):
        apply_transform(snap_from([[1.0], [2.0]]), t)


def test_unfitted_spec_rejected():
    with pytest.raises(ValueError):
        transform_features(np.ones((2, 1)), TransformSpec("identity", "global", {}, False))


def test_apply_leaves_input_untouched():
    s = snap_from([[2.0, -3.0], [4.0, 1.0]])
    before = s.features.copy()
    sid = s.snapshot_id
    apply_transform(s, fit_transform(s, "max_normalize"))
    assert np.array_equal(s.features, before) and s.snapshot_id == sid
    with pytest.raises(ValueError):
        s.features[0, 0] = 9.0


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 5)),
              elements=st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=False)))
def test_max_normalize_reaches_one(X):
    if np.any(np.max(np.abs(X), axis=0) == 0):
        return
    s = snap_from(X)
    out = apply_transform(s, fit_transform(s, "max_normalize")).features
    assert np.allclose(np.max(np.abs(out), axis=0), 1.0, atol=1e-12)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def test_save_load_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(20, 3)) * 1e-7 + rng.normal(size=(20, 3)) * 1e5
    s = snap_from(X, rng.normal(size=20))
    d = apply_transform(s, fit_transform(s, "z_score"))
    m_raw = save_snapshot(s, tmp_path)
    m_der = save_snapshot(d, tmp_path)
    assert load_snapshot(m_raw) == s
    back = load_snapshot(m_der)
    assert back == d
    assert back.lineage[0].parameters == d.lineage[0].parameters
    manifest = json.loads(m_der.read_text())
    assert manifest["parent_id"] == s.snapshot_id
    for key in ("snapshot_id", "parent_id", "task_kind", "n_samples", "n_features",
                "feature_names", "target_name", "lineage"):
        assert key in manifest


def test_classification_roundtrip_keeps_labels(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("a,label\n1,dog\n2,cat\n3,dog\n", encoding="utf-8")
    s = load_csv(p, "label", "classification")
    assert load_snapshot(save_snapshot(s, tmp_path / "snaps")) == s


def test_tampered_data_file_is_detected(tmp_path, small_csv):
    s = load_csv(small_csv, "y", "regression")
    m = save_snapshot(s, tmp_path / "snaps")
    data = tmp_path / "snaps" / f"{s.snapshot_id}.csv"
    data.write_text(data.read_text().replace("0.5", "0.25"), encoding="utf-8")
    with pytest.raises(HashMismatch):
        load_snapshot(m)


def test_missing_data_file_is_io_error(tmp_path, small_csv):
    s = load_csv(small_csv, "y", "regression")
    m = save_snapshot(s, tmp_path / "snaps")
    (tmp_path / "snaps" / f"{s.snapshot_id}.csv").unlink()
    with pytest.raises(SnapshotIOError):
        load_snapshot(m)


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_unwritable_directory(tmp_path, small_csv):
    d = tmp_path / "ro"
    d.mkdir()
    d.chmod(0o500)
    with pytest.raises(SnapshotIOError):
        save_snapshot(load_csv(small_csv, "y", "regression"), d)


def test_unwritable_target_is_io_error(tmp_path, small_csv):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(SnapshotIOError):
        save_snapshot(load_csv(small_csv, "y", "regression"), blocker / "sub")
