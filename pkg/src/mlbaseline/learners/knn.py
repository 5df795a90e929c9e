"""k-nearest neighbours with Euclidean distance; ties go to the lower training index."""
import numpy as np

from .. import kernels
from ..errors import InsufficientData
from .base import Learner, is_int, register, require


def _fit(X, y, hp, seed, n_classes):
    if hp["k"] > X.shape[0]:
        raise InsufficientData(f"knn needs k <= training rows ({hp['k']} > {X.shape[0]})")
    return {"X": X.copy(), "y": y.copy(), "k": int(hp["k"]), "n_classes": n_classes}, None, ()


def _votes(params, X):
    nb = kernels.knn_neighbors(params["X"], X, params["k"])
    counts = np.zeros((X.shape[0], params["n_classes"]), dtype=np.int64)
    np.add.at(counts, (np.arange(X.shape[0])[:, None], params["y"][nb]), 1)
    return counts


def _predict(params, X, task):
    if task == "classification":
        # argmax returns the smallest class index among tied vote counts
        return np.argmax(_votes(params, X), axis=1)
    nb = kernels.knn_neighbors(params["X"], X, params["k"])
    y = params["y"]
    acc = y[nb[:, 0]].copy()
    for j in range(1, nb.shape[1]):
        acc += y[nb[:, j]]
    return acc / params["k"]


def _proba(params, X):
    return _votes(params, X) / params["k"]


def _check(hp):
    require(is_int(hp["k"]) and hp["k"] >= 1, "knn k must be an integer >= 1")


register(Learner(
    name="knn",
    label="KNN",
    tasks=("regression", "classification"),
    defaults={"k": 5},
    fit=_fit,
    predict=_predict,
    proba=_proba,
    check=_check,
))
