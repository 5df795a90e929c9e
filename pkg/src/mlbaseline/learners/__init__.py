"""Native baseline learners behind one fit/predict contract.

Importing this package registers every built-in model type.
"""
from . import knn, linear, logistic, mlp, tree  # noqa: F401  (registration side effects)
from .base import (
    FittedModel,
    Learner,
    LearnerSpec,
    TrainingTrace,
    fit,
    get_learner,
    model_types,
    predict,
    predict_proba,
    register,
)

__all__ = [
    "FittedModel",
    "Learner",
    "LearnerSpec",
    "TrainingTrace",
    "fit",
    "get_learner",
    "model_types",
    "predict",
    "predict_proba",
    "register",
]
