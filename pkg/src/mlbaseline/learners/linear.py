"""Constant baseline, ordinary least squares and ridge regression."""
import numpy as np

from .base import Learner, is_real, register, require


def _fit_constant(X, y, hp, seed, n_classes):
    if n_classes:
        prior = np.bincount(y, minlength=n_classes) / len(y)
        # argmax picks the smallest class label on ties
        return {"prior": prior, "majority": int(np.argmax(prior))}, None, ()
    return {"mean": float(np.mean(y))}, None, ()


def _predict_constant(params, X, task):
    if task == "classification":
        return np.full(X.shape[0], params["majority"], dtype=np.int64)
    return np.full(X.shape[0], params["mean"], dtype=np.float64)


def _proba_constant(params, X):
    return np.tile(params["prior"], (X.shape[0], 1))


def _fit_ols(X, y, hp, seed, n_classes):
    n, d = X.shape
    A = np.hstack([X, np.ones((n, 1))])
    # SVD-based lstsq: rank-revealing, and returns the minimum-norm solution when rank deficient
    sol, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    warnings = ()
    if rank < d + 1:
        warnings = (f"singular_system: design matrix rank {rank} < {d + 1}, minimum-norm solution used",)
    return {"coef": sol[:d], "intercept": float(sol[d])}, None, warnings


def _fit_ridge(X, y, hp, seed, n_classes):
    alpha = float(hp["alpha"])
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    gram = Xc.T @ Xc + alpha * np.eye(X.shape[1])
    rhs = Xc.T @ (y - y_mean)
    warnings = ()
    try:
        coef = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        coef = np.linalg.lstsq(gram, rhs, rcond=None)[0]
        warnings = ("singular_system: regularized normal equations are singular, minimum-norm solution used",)
    return {"coef": coef, "intercept": y_mean - float(x_mean @ coef)}, None, warnings


def _predict_linear(params, X, task):
    return X @ params["coef"] + params["intercept"]


def _check_ridge(hp):
    require(is_real(hp["alpha"]) and hp["alpha"] >= 0, "ridge alpha must be a real >= 0")


register(Learner(
    name="constant",
    label="Constant",
    tasks=("regression", "classification"),
    defaults={},
    fit=_fit_constant,
    predict=_predict_constant,
    proba=_proba_constant,
))

register(Learner(
    name="linear_regression",
    label="Linear Regression",
    tasks=("regression",),
    defaults={},
    fit=_fit_ols,
    predict=_predict_linear,
))

register(Learner(
    name="ridge_regression",
    label="Ridge Regression",
    tasks=("regression",),
    defaults={"alpha": 1.0},
    fit=_fit_ridge,
    predict=_predict_linear,
    check=_check_ridge,
))
