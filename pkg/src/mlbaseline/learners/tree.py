"""CART decision trees and random forests.

Splits test ``x[feature] <= threshold`` (left) against midpoints of consecutive
distinct values. The split search itself lives in :mod:`mlbaseline.kernels`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..rng import sub_rng
from .base import Learner, is_int, is_real, register, require


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray    # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # leaf mean (n_nodes,) or class fractions (n_nodes, n_classes)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] >= 0
        while active.any():
            r, nd = rows[active], node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    def same_as(self, other: "Tree") -> bool:
        return all(
            np.array_equal(getattr(self, f), getattr(other, f), equal_nan=True)
            for f in ("feature", "threshold", "left", "right", "value")
        )


def n_split_features(max_features, d: int) -> int:
    if max_features in (None, "all"):
        return d
    if max_features == "sqrt":
        return max(1, int(math.sqrt(d)))
    if max_features == "log2":
        return max(1, int(math.log2(d))) if d > 1 else 1
    if isinstance(max_features, float):
        return max(1, min(d, int(max_features * d)))
    return max(1, min(d, int(max_features)))


def build_tree(X, y, n_classes, samples, max_depth=None, min_samples_leaf=1,
               max_features=None, rng=None) -> Tree:
    """Grow a CART tree depth-first; node ids are assigned in preorder.

    ``n_classes == 0`` selects regression (variance reduction), otherwise Gini.
    A node is split whenever it is impure and an admissible split exists, even
    if the best split leaves the impurity unchanged (needed to separate XOR-like data).
    """
    d = X.shape[1]
    m_feat = n_split_features(max_features, d)
    all_features = np.arange(d, dtype=np.int64)
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(node_samples):
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        ys = y[node_samples]
        if n_classes:
            value.append(np.bincount(ys, minlength=n_classes) / len(ys))
        else:
            value.append(float(np.mean(ys)))
        return len(feature) - 1

    root = new_node(samples)
    stack = [(root, samples, 0)]
    while stack:
        node, node_samples, depth = stack.pop()
        ys = y[node_samples]
        if max_depth is not None and depth >= max_depth:
            continue
        if len(node_samples) < 2 * min_samples_leaf or np.all(ys == ys[0]):
            continue
        if m_feat < d:
            feats = np.sort(rng.choice(d, size=m_feat, replace=False)).astype(np.int64)
        else:
            feats = all_features
        if n_classes:
            f, t, _ = kernels.best_split_classification(
                X, y, node_samples, feats, n_classes, min_samples_leaf
            )
        else:
            f, t, _ = kernels.best_split_regression(X, y, node_samples, feats, min_samples_leaf)
        if f < 0:
            continue
        goes_left = X[node_samples, f] <= t
        ls, rs = node_samples[goes_left], node_samples[~goes_left]
        feature[node] = f
        threshold[node] = t
        left[node] = new_node(ls)
        right[node] = new_node(rs)
        # right pushed first so the left subtree is expanded first
        stack.append((right[node], rs, depth + 1))
        stack.append((left[node], ls, depth + 1))

    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64),
    )


def _tree_kwargs(hp):
    return {"max_depth": hp["max_depth"], "min_samples_leaf": hp["min_samples_leaf"]}


def _fit_tree(X, y, hp, seed, n_classes):
    samples = np.arange(X.shape[0], dtype=np.int64)
    tree = build_tree(X, y, n_classes, samples, max_features=hp["max_features"],
                      rng=sub_rng(seed, 0), **_tree_kwargs(hp))
    return {"tree": tree, "n_classes": n_classes}, None, ()


def _predict_tree(params, X, task):
    tree = params["tree"]
    leaves = tree.value[tree.apply(X)]
    if task == "classification":
        return np.argmax(leaves, axis=1)
    return leaves


def _proba_tree(params, X):
    tree = params["tree"]
    return tree.value[tree.apply(X)]


def _fit_forest(X, y, hp, seed, n_classes):
    n = X.shape[0]
    trees = []
    for i in range(hp["n_trees"]):
        # each tree owns a stream keyed by its index, independent of build order
        rng = sub_rng(seed, i)
        if hp["bootstrap"]:
            samples = rng.integers(0, n, size=n).astype(np.int64)
        else:
            samples = np.arange(n, dtype=np.int64)
        trees.append(build_tree(X, y, n_classes, samples, max_features=hp["max_features"],
                                rng=rng, **_tree_kwargs(hp)))
    return {"trees": trees, "n_classes": n_classes}, None, ()


def _forest_votes(params, X):
    votes = np.zeros((X.shape[0], params["n_classes"]), dtype=np.int64)
    rows = np.arange(X.shape[0])
    for tree in params["trees"]:
        pred = np.argmax(tree.value[tree.apply(X)], axis=1)
        votes[rows, pred] += 1
    return votes


def _predict_forest(params, X, task):
    if task == "classification":
        return np.argmax(_forest_votes(params, X), axis=1)
    acc = np.zeros(X.shape[0])
    for tree in params["trees"]:
        acc += tree.value[tree.apply(X)]
    return acc / len(params["trees"])


def _proba_forest(params, X):
    return _forest_votes(params, X) / len(params["trees"])


def _check_tree(hp):
    md = hp["max_depth"]
    require(md is None or (is_int(md) and md >= 1), "max_depth must be null or an integer >= 1")
    require(is_int(hp["min_samples_leaf"]) and hp["min_samples_leaf"] >= 1,
            "min_samples_leaf must be an integer >= 1")
    mf = hp["max_features"]
    ok = mf in (None, "all", "sqrt", "log2") or (is_int(mf) and mf >= 1) or (
        isinstance(mf, float) and is_real(mf) and 0 < mf <= 1
    )
    require(ok, "max_features must be 'all', 'sqrt', 'log2', an integer >= 1 or a fraction in (0, 1]")


def _check_forest(hp):
    _check_tree(hp)
    require(is_int(hp["n_trees"]) and hp["n_trees"] >= 1, "n_trees must be an integer >= 1")
    require(isinstance(hp["bootstrap"], bool), "bootstrap must be true or false")


register(Learner(
    name="decision_tree",
    label="Decision Tree",
    tasks=("regression", "classification"),
    defaults={"max_depth": None, "min_samples_leaf": 1, "max_features": "all"},
    fit=_fit_tree,
    predict=_predict_tree,
    proba=_proba_tree,
    check=_check_tree,
))

register(Learner(
    name="random_forest",
    label="Random Forest",
    tasks=("regression", "classification"),
    defaults={
        "n_trees": 100,
        "max_features": "sqrt",
        "bootstrap": True,
        "max_depth": None,
        "min_samples_leaf": 1,
    },
    fit=_fit_forest,
    predict=_predict_forest,
    proba=_proba_forest,
    check=_check_forest,
))
