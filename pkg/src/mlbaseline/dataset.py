"""Immutable, content-hashed dataset snapshots and their transforms.

A snapshot is never modified in place. Every transform produces a new snapshot
whose ``parent_id`` points at its input and whose ``lineage`` is the parent's
lineage plus one fitted :class:`TransformSpec`.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateStatistic,
    DimensionMismatch,
    EmptyDataset,
    HashMismatch,
    MalformedCsv,
    NonNumericFeature,
    SnapshotIOError,
)

TASK_KINDS = ("regression", "classification")
TRANSFORM_KINDS = ("identity", "max_normalize", "min_max", "z_score", "linear_detrend")
SCOPES = ("global", "per_fold")
# transforms that learn statistics from rows and therefore default to per-fold fitting
STATISTIC_TRANSFORMS = ("max_normalize", "min_max", "z_score")
MANIFEST_VERSION = 1

_PER_FEATURE_KEYS = {
    "max_normalize": ("max_abs",),
    "min_max": ("min", "max"),
    "z_score": ("mean", "std"),
}


@dataclass(frozen=True, eq=False)
class TransformSpec:
    kind: str
    scope: str = "global"
    parameters: dict = field(default_factory=dict)
    fitted: bool = False

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.scope not in SCOPES:
            raise ValueError(f"unknown transform scope {self.scope!r}")

    def __eq__(self, other):
        if not isinstance(other, TransformSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def vector(self, name: str) -> np.ndarray:
        """Per-feature parameter ``name`` as an array ordered by feature index."""
        values = []
        j = 0
        while f"{name}[{j}]" in self.parameters:
            values.append(self.parameters[f"{name}[{j}]"])
            j += 1
        return np.asarray(values, dtype=np.float64)

    def n_scaled_features(self) -> int | None:
        keys = _PER_FEATURE_KEYS.get(self.kind)
        if not keys:
            return None
        return len(self.vector(keys[0]))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "scope": self.scope,
            "parameters": dict(self.parameters),
            "fitted": self.fitted,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransformSpec":
        return cls(
            kind=d["kind"],
            scope=d.get("scope", "global"),
            parameters={k: float(v) for k, v in d.get("parameters", {}).items()},
            fitted=bool(d.get("fitted", False)),
        )


@dataclass(frozen=True, eq=False)
class DatasetSnapshot:
    snapshot_id: str
    features: np.ndarray
    target: np.ndarray
    feature_names: tuple
    task_kind: str
    lineage: tuple = ()
    parent_id: str = "raw"
    target_name: str = "target"
    class_labels: tuple | None = None

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.task_kind != "classification":
            raise ValueError("n_classes is only defined for classification snapshots")
        return int(self.target.max()) + 1 if len(self.target) else 0

    def __eq__(self, other):
        if not isinstance(other, DatasetSnapshot):
            return NotImplemented
        return (
            self.snapshot_id == other.snapshot_id
            and self.parent_id == other.parent_id
            and self.target_name == other.target_name
            and self.class_labels == other.class_labels
            and self.features.dtype == other.features.dtype
            and self.target.dtype == other.target.dtype
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.target, other.target)
            and self.feature_names == other.feature_names
            and self.task_kind == other.task_kind
            and self.lineage == other.lineage
        )

    __hash__ = None

    def subset(self, rows) -> tuple[np.ndarray, np.ndarray]:
        rows = np.asarray(rows, dtype=np.intp)
        return self.features[rows], self.target[rows]


def content_hash(features, target, feature_names, task_kind, lineage) -> str:
    """SHA-256 over row-major float64 features, the target, then canonical metadata."""
    h = hashlib.sha256()
    h.update(b"mlbaseline-snapshot\x00")
    features = np.ascontiguousarray(features, dtype="<f8")
    h.update(np.asarray(features.shape, dtype="<i8").tobytes())
    h.update(features.tobytes())
    if task_kind == "classification":
        h.update(np.ascontiguousarray(target, dtype="<i8").tobytes())
    else:
        h.update(np.ascontiguousarray(target, dtype="<f8").tobytes())
    meta = {
        "feature_names": list(feature_names),
        "task_kind": task_kind,
        "lineage": [t.to_dict() for t in lineage],
    }
    h.update(json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8"))
    return h.hexdigest()


def make_snapshot(
    features,
    target,
    feature_names: Sequence[str],
    task_kind: str,
    lineage: Sequence[TransformSpec] = (),
    parent_id: str = "raw",
    target_name: str = "target",
    class_labels: Sequence[str] | None = None,
) -> DatasetSnapshot:
    """Validate arrays, freeze them and compute the content hash."""
    if task_kind not in TASK_KINDS:
        raise ValueError(f"unknown task kind {task_kind!r}")
    X = np.array(features, dtype=np.float64, order="C")
    if X.ndim != 2:
        raise DimensionMismatch(f"features must be 2-D, got shape {X.shape}")
    if task_kind == "classification":
        y = np.array(target, dtype=np.int64)
        if len(y) and y.min() < 0:
            raise ValueError("class labels must be non-negative integers")
    else:
        y = np.array(target, dtype=np.float64)
    if y.ndim != 1 or len(y) != X.shape[0]:
        raise DimensionMismatch(
            f"target length {y.shape} does not match {X.shape[0]} feature rows"
        )
    if X.shape[0] == 0:
        raise EmptyDataset("dataset has no rows")
    if len(feature_names) != X.shape[1]:
        raise DimensionMismatch(
            f"{len(feature_names)} feature names for {X.shape[1]} feature columns"
        )
    if not np.all(np.isfinite(X)) or (y.dtype.kind == "f" and not np.all(np.isfinite(y))):
        raise ValueError("features and target must be finite")
    X.flags.writeable = False
    y.flags.writeable = False
    lineage = tuple(lineage)
    names = tuple(str(n) for n in feature_names)
    return DatasetSnapshot(
        snapshot_id=content_hash(X, y, names, task_kind, lineage),
        features=X,
        target=y,
        feature_names=names,
        task_kind=task_kind,
        lineage=lineage,
        parent_id=parent_id,
        target_name=target_name,
        class_labels=tuple(class_labels) if class_labels is not None else None,
    )


def _parse_real(cell: str) -> float:
    value = float(cell.strip())
    if not math.isfinite(value):
        raise ValueError("non-finite")
    return value


def _parse_label(cell: str) -> int | None:
    try:
        value = int(cell.strip())
    except ValueError:
        return None
    return value if value >= 0 else None


def load_csv(path, target_column: str, task_kind: str) -> DatasetSnapshot:
    """Read a header-row CSV into a raw snapshot.

    Row numbers in errors count data rows from 1 (the header is not counted).
    Classification targets that are all non-negative integers are kept as is;
    anything else is mapped to integers by order of first appearance.
    """
    if task_kind not in TASK_KINDS:
        raise ValueError(f"unknown task kind {task_kind!r}")
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path}: file is empty") from None
        except csv.Error as exc:
            raise MalformedCsv(f"{path}: {exc}", row=0) from exc
        header = [h.strip() for h in header]
        if target_column not in header:
            raise MalformedCsv(
                f"{path}: target column {target_column!r} not in header {header}", row=0
            )
        t_idx = header.index(target_column)
        f_idx = [j for j in range(len(header)) if j != t_idx]
        if not f_idx:
            raise MalformedCsv(f"{path}: no feature columns besides the target", row=0)
        rows, raw_targets = [], []
        row_no = 0
        try:
            for record in reader:
                if not record or all(not c.strip() for c in record):
                    continue
                row_no += 1
                if len(record) != len(header):
                    raise MalformedCsv(
                        f"{path}: row {row_no} has {len(record)} cells, expected {len(header)}",
                        row=row_no,
                        column=min(len(record), len(header)),
                    )
                values = []
                for j in f_idx:
                    try:
                        values.append(_parse_real(record[j]))
                    except ValueError:
                        raise NonNumericFeature(
                            f"{path}: non-numeric feature value {record[j]!r} "
                            f"at row {row_no}, column {header[j]!r}",
                            row=row_no,
                            column=header[j],
                        ) from None
                rows.append(values)
                raw_targets.append(record[t_idx])
        except csv.Error as exc:
            raise MalformedCsv(f"{path}: row {row_no + 1}: {exc}", row=row_no + 1) from exc
    if not rows:
        raise EmptyDataset(f"{path}: no data rows")

    class_labels = None
    if task_kind == "regression":
        target = []
        for i, cell in enumerate(raw_targets, start=1):
            try:
                target.append(_parse_real(cell))
            except ValueError:
                raise NonNumericFeature(
                    f"{path}: non-numeric target value {cell!r} at row {i}",
                    row=i,
                    column=target_column,
                ) from None
    else:
        ints = [_parse_label(c) for c in raw_targets]
        if all(v is not None for v in ints):
            target = ints
        else:
            mapping: dict[str, int] = {}
            for cell in raw_targets:
                mapping.setdefault(cell.strip(), len(mapping))
            target = [mapping[c.strip()] for c in raw_targets]
            class_labels = tuple(mapping)

    return make_snapshot(
        np.asarray(rows, dtype=np.float64),
        target,
        [header[j] for j in f_idx],
        task_kind,
        target_name=target_column,
        class_labels=class_labels,
    )


def _indexed(name, values) -> dict:
    return {f"{name}[{j}]": float(v) for j, v in enumerate(values)}


def fit_transform(
    snapshot: DatasetSnapshot,
    kind: str,
    row_subset=None,
    scope: str | None = None,
) -> TransformSpec:
    """Fit ``kind`` on the snapshot, or only on ``row_subset`` when given."""
    X = snapshot.features
    if row_subset is not None:
        rows = np.asarray(row_subset, dtype=np.intp)
        if rows.size == 0:
            raise ValueError("row_subset must be non-empty")
        if rows.min() < 0 or rows.max() >= snapshot.n_samples:
            raise IndexError("row_subset index out of range")
        X = X[rows]
    return fit_transform_matrix(X, kind, snapshot.feature_names, scope)


def fit_transform_matrix(X: np.ndarray, kind: str, feature_names=None, scope=None) -> TransformSpec:
    """Fit ``kind`` on every row of ``X``."""
    if kind not in TRANSFORM_KINDS:
        raise ValueError(f"unknown transform kind {kind!r}")
    if scope is None:
        scope = "per_fold" if kind in STATISTIC_TRANSFORMS else "global"
    names = feature_names or [f"x{j}" for j in range(X.shape[1])]
    if kind == "identity":
        params = {}
    elif kind == "max_normalize":
        max_abs = np.max(np.abs(X), axis=0)
        _check_nonzero(max_abs, names, "max-abs is 0")
        params = _indexed("max_abs", max_abs)
    elif kind == "min_max":
        lo, hi = X.min(axis=0), X.max(axis=0)
        _check_nonzero(hi - lo, names, "max equals min")
        params = {**_indexed("min", lo), **_indexed("max", hi)}
    elif kind == "z_score":
        mean, std = X.mean(axis=0), X.std(axis=0)
        _check_nonzero(std, names, "standard deviation is 0")
        params = {**_indexed("mean", mean), **_indexed("std", std)}
    else:  # linear_detrend
        if X.shape[1] < 2:
            raise DegenerateStatistic("linear_detrend needs at least 2 features per row")
        # slope/intercept are refitted for every row at apply time
        params = {"degree": 1.0}
    return TransformSpec(kind=kind, scope=scope, parameters=params, fitted=True)


def _check_nonzero(values, names, what):
    bad = np.flatnonzero(values == 0)
    if bad.size:
        cols = ", ".join(repr(names[j]) for j in bad)
        raise DegenerateStatistic(f"cannot scale constant feature(s) {cols}: {what}")


def transform_features(X: np.ndarray, spec: TransformSpec) -> np.ndarray:
    """Apply a fitted transform to a raw feature matrix (no snapshot bookkeeping)."""
    if not spec.fitted:
        raise ValueError(f"transform {spec.kind!r} is not fitted")
    n_scaled = spec.n_scaled_features()
    if n_scaled is not None and n_scaled != X.shape[1]:
        raise DimensionMismatch(
            f"{spec.kind} was fitted on {n_scaled} features, data has {X.shape[1]}"
        )
    if spec.kind == "identity":
        return X.copy()
    if spec.kind == "max_normalize":
        return X / spec.vector("max_abs")
    if spec.kind == "min_max":
        lo, hi = spec.vector("min"), spec.vector("max")
        return (X - lo) / (hi - lo)
    if spec.kind == "z_score":
        return (X - spec.vector("mean")) / spec.vector("std")
    # linear_detrend: subtract each row's least-squares line over the feature index
    d = X.shape[1]
    if d < 2:
        raise DimensionMismatch("linear_detrend needs at least 2 features per row")
    t = np.arange(d, dtype=np.float64)
    tc = t - t.mean()
    row_mean = X.mean(axis=1, keepdims=True)
    slope = ((X - row_mean) @ tc) / (tc @ tc)
    return X - (row_mean + slope[:, None] * tc[None, :])


def apply_transform(snapshot: DatasetSnapshot, spec: TransformSpec) -> DatasetSnapshot:
    """Return a new snapshot with transformed features; ``snapshot`` is untouched."""
    X = transform_features(snapshot.features, spec)
    return make_snapshot(
        X,
        snapshot.target,
        snapshot.feature_names,
        snapshot.task_kind,
        lineage=snapshot.lineage + (spec,),
        parent_id=snapshot.snapshot_id,
        target_name=snapshot.target_name,
        class_labels=snapshot.class_labels,
    )


def manifest_dict(snapshot: DatasetSnapshot, data_file: str) -> dict:
    return {
        "format_version": MANIFEST_VERSION,
        "snapshot_id": snapshot.snapshot_id,
        "parent_id": snapshot.parent_id,
        "task_kind": snapshot.task_kind,
        "n_samples": snapshot.n_samples,
        "n_features": snapshot.n_features,
        "feature_names": list(snapshot.feature_names),
        "target_name": snapshot.target_name,
        "class_labels": list(snapshot.class_labels) if snapshot.class_labels else None,
        "lineage": [t.to_dict() for t in snapshot.lineage],
        "data_file": data_file,
    }


def save_snapshot(snapshot: DatasetSnapshot, directory) -> Path:
    """Write ``<id>.csv`` and ``<id>.json`` into ``directory``; returns the manifest path."""
    directory = Path(directory)
    data_name = f"{snapshot.snapshot_id}.csv"
    manifest_path = directory / f"{snapshot.snapshot_id}.json"
    try:
        directory.mkdir(parents=True, exist_ok=True)
        with (directory / data_name).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(list(snapshot.feature_names) + [snapshot.target_name])
            is_cls = snapshot.task_kind == "classification"
            for row, t in zip(snapshot.features.tolist(), snapshot.target.tolist()):
                # repr() is the shortest decimal that round-trips a float64 exactly
                writer.writerow([repr(v) for v in row] + [str(t) if is_cls else repr(t)])
        manifest_path.write_text(
            json.dumps(manifest_dict(snapshot, data_name), indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise SnapshotIOError(f"cannot write snapshot to {directory}: {exc}") from exc
    return manifest_path


def load_snapshot(manifest_path) -> DatasetSnapshot:
    """Read a saved snapshot and verify its content hash."""
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        data_path = manifest_path.parent / manifest["data_file"]
        with data_path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            records = [r for r in reader if r]
    except (OSError, KeyError, ValueError, StopIteration) as exc:
        raise SnapshotIOError(f"cannot read snapshot {manifest_path}: {exc}") from exc

    names = manifest["feature_names"]
    if header != names + [manifest["target_name"]]:
        raise HashMismatch(f"{data_path}: header does not match manifest columns")
    try:
        X = np.array([[float(c) for c in r[:-1]] for r in records], dtype=np.float64)
        if manifest["task_kind"] == "classification":
            y = [int(r[-1]) for r in records]
        else:
            y = [float(r[-1]) for r in records]
        X = X.reshape(len(records), len(names))
    except ValueError as exc:
        raise HashMismatch(f"{data_path}: data file is corrupt: {exc}") from exc
    lineage = tuple(TransformSpec.from_dict(t) for t in manifest["lineage"])
    labels = manifest.get("class_labels")
    try:
        snap = make_snapshot(
            X,
            y,
            names,
            manifest["task_kind"],
            lineage=lineage,
            parent_id=manifest["parent_id"],
            target_name=manifest["target_name"],
            class_labels=labels,
        )
    except (ValueError, EmptyDataset, DimensionMismatch) as exc:
        raise HashMismatch(f"{data_path}: data file is corrupt: {exc}") from exc
    if snap.snapshot_id != manifest["snapshot_id"]:
        raise HashMismatch(
            f"{data_path}: content hash {snap.snapshot_id} does not match "
            f"manifest snapshot_id {manifest['snapshot_id']}"
        )
    return snap
