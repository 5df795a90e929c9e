"""Learner contract: specs, fitted models and the model-type registry."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..errors import (
    DimensionMismatch,
    InsufficientData,
    InvalidHyperparameter,
    UnsupportedForModel,
)

TASK_KINDS = ("regression", "classification")


@dataclass(frozen=True)
class TrainingTrace:
    train_loss: tuple
    val_loss: tuple
    stopped_epoch: int
    stop_reason: str  # "max_epochs" | "early_stopping"

    def to_dict(self) -> dict:
        return {
            "train_loss": list(self.train_loss),
            "val_loss": list(self.val_loss),
            "stopped_epoch": self.stopped_epoch,
            "stop_reason": self.stop_reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingTrace":
        return cls(
            tuple(d["train_loss"]), tuple(d["val_loss"]), int(d["stopped_epoch"]), d["stop_reason"]
        )


@dataclass(frozen=True)
class Learner:
    """Registry entry for one model type.

    ``fit`` receives ``(X, y, hp, seed, n_classes)`` where for classification
    ``y`` holds class indices ``0..n_classes-1``; it returns ``(params, trace, warnings)``.
    ``predict`` returns reals (regression) or class indices; ``proba`` is optional.
    """

    name: str
    label: str
    tasks: tuple
    defaults: dict
    fit: Callable
    predict: Callable
    proba: Callable | None = None
    check: Callable | None = None


_REGISTRY: dict[str, Learner] = {}


def register(learner: Learner) -> Learner:
    _REGISTRY[learner.name] = learner
    return learner


def get_learner(model_type: str) -> Learner:
    try:
        return _REGISTRY[model_type]
    except KeyError:
        raise InvalidHyperparameter(
            f"unknown model type {model_type!r}; known: {sorted(_REGISTRY)}"
        ) from None


def model_types() -> list[str]:
    return list(_REGISTRY)


@dataclass(frozen=True)
class LearnerSpec:
    model_type: str
    task_kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.task_kind not in TASK_KINDS:
            raise InvalidHyperparameter(f"unknown task kind {self.task_kind!r}")
        learner = get_learner(self.model_type)
        if self.task_kind not in learner.tasks:
            raise InvalidHyperparameter(
                f"{self.model_type} does not support {self.task_kind}"
            )
        unknown = sorted(set(self.hyperparameters) - set(learner.defaults))
        if unknown:
            raise InvalidHyperparameter(
                f"unknown hyperparameter(s) for {self.model_type}: {', '.join(unknown)}"
            )
        if int(self.seed) < 0:
            raise InvalidHyperparameter("seed must be a non-negative integer")
        if learner.check is not None:
            learner.check(self.resolved())

    def resolved(self) -> dict:
        """Hyperparameters with defaults filled in."""
        return {**get_learner(self.model_type).defaults, **self.hyperparameters}

    def label(self) -> str:
        """Human-readable model instance name, listing non-default hyperparameters."""
        learner = get_learner(self.model_type)
        extra = ", ".join(
            f"{k}={v}" for k, v in self.hyperparameters.items() if learner.defaults.get(k) != v
        )
        return f"{learner.label} ({extra})" if extra else learner.label

    def to_dict(self) -> dict:
        return {
            "type": self.model_type,
            "task": self.task_kind,
            "hyperparameters": dict(self.hyperparameters),
            "seed": int(self.seed),
        }


@dataclass(frozen=True, eq=False)
class FittedModel:
    spec: LearnerSpec
    params: dict
    n_features: int
    classes: np.ndarray | None = None
    training_trace: TrainingTrace | None = None
    warnings: tuple = ()

    def to_json(self) -> str:
        """Debug dump of the learned state; the schema is not stable."""
        return json.dumps(
            {
                "spec": self.spec.to_dict(),
                "n_features": self.n_features,
                "classes": None if self.classes is None else self.classes.tolist(),
                "params": _jsonable(self.params),
                "training_trace": self.training_trace.to_dict() if self.training_trace else None,
                "warnings": list(self.warnings),
            },
            indent=2,
        )


def _jsonable(obj: Any):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _as_matrix(features) -> np.ndarray:
    X = np.ascontiguousarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch(f"features must be a 2-D matrix, got shape {X.shape}")
    return X


def fit(spec: LearnerSpec, features, target) -> FittedModel:
    """Train ``spec`` on ``features``/``target``; deterministic in ``spec.seed``."""
    learner = get_learner(spec.model_type)
    X = _as_matrix(features)
    n, d = X.shape
    if n < 1:
        raise InsufficientData("need at least one training row")
    if d < 1:
        raise InsufficientData("need at least one feature")
    if len(target) != n:
        raise DimensionMismatch(f"target has {len(target)} values for {n} rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    hp = spec.resolved()

    classes = None
    if spec.task_kind == "classification":
        y_raw = np.asarray(target)
        if y_raw.dtype.kind == "f":
            if not np.all(y_raw == np.round(y_raw)):
                raise ValueError("classification targets must be integer labels")
        y_raw = y_raw.astype(np.int64)
        classes, y = np.unique(y_raw, return_inverse=True)
        y = y.astype(np.int64).reshape(-1)
        if len(classes) < 2 and spec.model_type != "constant":
            raise InsufficientData(
                f"{spec.model_type} needs at least 2 distinct classes, got {classes.tolist()}"
            )
        n_classes = len(classes)
    else:
        y = np.asarray(target, dtype=np.float64)
        if not np.all(np.isfinite(y)):
            raise ValueError("regression targets must be finite")
        n_classes = 0

    params, trace, warnings = learner.fit(X, y, hp, int(spec.seed), n_classes)
    return FittedModel(
        spec=spec,
        params=params,
        n_features=d,
        classes=classes,
        training_trace=trace,
        warnings=tuple(warnings),
    )


def _check_query(model: FittedModel, features) -> np.ndarray:
    X = _as_matrix(features)
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"model was trained on {model.n_features} features, got {X.shape[1]}"
        )
    return X


def predict(model: FittedModel, features) -> np.ndarray:
    """Real predictions for regression; integer class labels for classification."""
    X = _check_query(model, features)
    learner = get_learner(model.spec.model_type)
    out = learner.predict(model.params, X, model.spec.task_kind)
    if model.spec.task_kind == "classification":
        return model.classes[np.asarray(out, dtype=np.int64)]
    return np.asarray(out, dtype=np.float64)


def predict_proba(model: FittedModel, features) -> np.ndarray:
    """Per-class probabilities; columns follow ``model.classes``."""
    if model.spec.task_kind != "classification":
        raise UnsupportedForModel(f"{model.spec.model_type} regression has no probabilities")
    learner = get_learner(model.spec.model_type)
    if learner.proba is None:
        raise UnsupportedForModel(f"{model.spec.model_type} does not define probabilities")
    X = _check_query(model, features)
    return learner.proba(model.params, X)


def require(condition: bool, message: str):
    if not condition:
        raise InvalidHyperparameter(message)


def is_int(value) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


def is_real(value) -> bool:
    return isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(
        value, bool
    ) and math.isfinite(value)
