"""JSON plan files: one entry per planned experiment.

Example::

    {
      "version": 1,
      "defaults": {"seed": 7, "alpha": 0.5, "beta": 0.5},
      "datasets": {"v1": "snapshots/<id>.json"},
      "experiments": [
        {"id": "EX1", "task": "regression", "dataset": "v1",
         "preprocessing": [{"kind": "max_normalize", "scope": "per_fold"}],
         "model": {"type": "decision_tree", "hyperparameters": {"max_depth": 3}},
         "metrics": ["mae", "r2"],
         "cv": {"method": "kfold", "k": 5},
         "notes": "first quick baseline"}
      ]
    }
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from . import metrics as M
from .dataset import SCOPES, STATISTIC_TRANSFORMS, TRANSFORM_KINDS
from .errors import BaselineError
from .learners import LearnerSpec
from .rng import key_for, sub_seed
from .validation import DiagnosticSettings, ExperimentSpec, PreprocessStep, SplitPlan

SUPPORTED_VERSIONS = (1,)

_STEP = {
    "oneOf": [
        {"type": "string", "enum": list(TRANSFORM_KINDS)},
        {
            "type": "object",
            "properties": {
                "kind": {"type": "string", "enum": list(TRANSFORM_KINDS)},
                "scope": {"type": "string", "enum": list(SCOPES) + ["per-fold"]},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
    ]
}

PLAN_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"type": "integer", "enum": list(SUPPORTED_VERSIONS)},
        "defaults": {
            "type": "object",
            "properties": {
                "seed": {"type": "integer", "minimum": 0},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "beta": {"type": "number", "exclusiveMinimum": 0},
                "epsilon_ideal": {"type": "number", "minimum": 0},
                "log_base": {"type": "number", "exclusiveMinimum": 1},
                "degenerate_tolerance": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "datasets": {"type": "object", "additionalProperties": {"type": "string"}},
        "snapshot_dir": {"type": "string"},
        "experiments": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "task": {"type": "string", "enum": ["regression", "classification"]},
                    "dataset": {"type": "string", "minLength": 1},
                    "preprocessing": {"type": "array", "items": _STEP},
                    "model": {
                        "type": "object",
                        "properties": {
                            "type": {"type": "string"},
                            "hyperparameters": {"type": "object"},
                            "seed": {"type": "integer", "minimum": 0},
                        },
                        "required": ["type"],
                        "additionalProperties": False,
                    },
                    "metrics": {
                        "type": "array",
                        "minItems": 1,
                        "items": {"type": "string", "enum": list(M.METRIC_NAMES)},
                    },
                    "cv": {
                        "type": "object",
                        "properties": {
                            "method": {"type": "string", "enum": ["loo", "kfold", "monte_carlo"]},
                            "k": {"type": "integer", "minimum": 2},
                            "n_splits": {"type": "integer", "minimum": 1},
                            "test_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                            "shuffle": {"type": "boolean"},
                            "stratified": {"type": "boolean"},
                            "seed": {"type": "integer", "minimum": 0},
                        },
                        "required": ["method"],
                        "additionalProperties": False,
                    },
                    "notes": {"type": "string"},
                },
                "required": ["id", "task", "dataset", "model", "metrics", "cv"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["version", "experiments"],
    "additionalProperties": False,
}


@dataclass
class PlanFile:
    version: int
    defaults: dict
    datasets: dict
    experiments: list
    base_dir: Path
    snapshot_dir: str = "snapshots"
    root_seed: int = 0
    raw: dict = field(default_factory=dict)

    def settings(self):
        d = self.defaults
        base = DiagnosticSettings()
        return DiagnosticSettings(
            alpha=d.get("alpha", base.alpha),
            beta=d.get("beta", base.beta),
            epsilon_ideal=d.get("epsilon_ideal", base.epsilon_ideal),
            log_base=d.get("log_base", base.log_base),
            degenerate_tolerance=d.get("degenerate_tolerance", base.degenerate_tolerance),
        )

    def resolve_dataset(self, ref: str) -> Path:
        """Manifest path for a dataset alias, manifest path or snapshot id."""
        if ref in self.datasets:
            path = self.base_dir / self.datasets[ref]
            if path.is_file():
                return path
            raise FileNotFoundError(f"dataset {ref!r}: manifest {path} not found")
        candidates = [self.base_dir / ref]
        if re.fullmatch(r"[0-9a-f]{64}", ref):
            candidates += [self.base_dir / self.snapshot_dir / f"{ref}.json", self.base_dir / f"{ref}.json"]
        for path in candidates:
            if path.is_file():
                return path
        raise FileNotFoundError(f"dataset {ref!r} could not be resolved to a snapshot manifest")

    def to_dict(self) -> dict:
        """Normalized plan with every seed made explicit."""
        return {
            "version": self.version,
            "defaults": {**self.defaults, "seed": self.root_seed},
            "datasets": dict(self.datasets),
            "experiments": [e.to_dict() for e in self.experiments],
        }


def _step(raw) -> PreprocessStep:
    if isinstance(raw, str):
        kind, scope = raw, None
    else:
        kind, scope = raw["kind"], raw.get("scope")
    if scope is None:
        scope = "per_fold" if kind in STATISTIC_TRANSFORMS else "global"
    return PreprocessStep(kind, scope.replace("-", "_"))


def parse_plan(raw: dict, base_dir=".", seed_override: int | None = None):
    """Return ``(PlanFile or None, problems)``; every violation is reported, not just the first."""
    validator = jsonschema.Draft202012Validator(PLAN_SCHEMA)
    problems, broken = [], set()
    structural = False
    for err in sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path))):
        path = list(err.absolute_path)
        where = "/".join(str(p) for p in path) or "<plan>"
        problems.append(f"{where}: {err.message}")
        if len(path) >= 2 and path[0] == "experiments":
            broken.add(path[1])
        else:
            structural = True
    if structural:
        return None, problems

    defaults = raw.get("defaults", {})
    root = seed_override if seed_override is not None else defaults.get("seed", 0)
    experiments, seen = [], set()
    for i, e in enumerate(raw["experiments"]):
        exp_id = e.get("id") if isinstance(e, dict) else None
        if exp_id is not None and exp_id in seen:
            problems.append(f"experiments/{i}: duplicate experiment id {exp_id!r}")
        seen.add(exp_id)
        if i in broken:
            # semantic checks still run on the well-formed experiments
            continue
        model = e["model"]
        # --seed on the command line beats plan defaults, which beat nothing explicit
        if seed_override is None and "seed" in model:
            model_seed = model["seed"]
        else:
            model_seed = sub_seed(root, key_for(exp_id), 0)
        cv = e["cv"]
        if seed_override is None and "seed" in cv:
            cv_seed = cv["seed"]
        else:
            cv_seed = sub_seed(root, key_for(exp_id), 1)
        try:
            learner = LearnerSpec(model["type"], e["task"], dict(model.get("hyperparameters", {})), model_seed)
        except BaselineError as exc:
            problems.append(f"experiments/{i} ({exp_id}): {exc}")
            continue
        split = SplitPlan(
            method=cv["method"],
            k=cv.get("k", 5),
            n_splits=cv.get("n_splits", 10),
            test_fraction=cv.get("test_fraction", 0.2),
            shuffle=cv.get("shuffle", True),
            stratified=cv.get("stratified", False),
            seed=cv_seed,
        )
        spec = ExperimentSpec(
            experiment_id=exp_id,
            task=e["task"],
            dataset_ref=e["dataset"],
            preprocessing=tuple(_step(s) for s in e.get("preprocessing", [])),
            learner=learner,
            metric_names=tuple(e["metrics"]),
            split_plan=split,
            notes=e.get("notes", ""),
        )
        problems += [f"experiments/{i}: {p}" for p in spec.problems()]
        experiments.append(spec)
    if problems:
        return None, problems
    return PlanFile(
        version=raw["version"],
        defaults=dict(defaults),
        datasets=dict(raw.get("datasets", {})),
        experiments=experiments,
        base_dir=Path(base_dir),
        snapshot_dir=raw.get("snapshot_dir", "snapshots"),
        root_seed=int(root),
        raw=raw,
    ), []


def load_plan(path, seed_override: int | None = None):
    """Read and validate a plan file; raises OSError / ValueError for unreadable JSON."""
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    return parse_plan(raw, path.parent, seed_override)
