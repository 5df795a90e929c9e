"""Reproducible baselines for small tabular ML projects.

Content-addressed dataset snapshots, from-scratch learners, seeded
cross-validation, overfitting diagnostics (LOR and COS) and report tables.
"""
__version__ = "0.1.0"

from .dataset import DatasetSnapshot, TransformSpec, load_csv, load_snapshot, save_snapshot
from .learners import LearnerSpec, fit, predict, predict_proba
from .metrics import cos, lor
from .validation import ExperimentSpec, PreprocessStep, SplitPlan, make_splits, run_experiment

__all__ = [
    "DatasetSnapshot",
    "ExperimentSpec",
    "LearnerSpec",
    "PreprocessStep",
    "SplitPlan",
    "TransformSpec",
    "cos",
    "fit",
    "load_csv",
    "load_snapshot",
    "lor",
    "make_splits",
    "predict",
    "predict_proba",
    "run_experiment",
    "save_snapshot",
]
