"""Logistic regression fitted by fixed-step gradient descent (one-vs-rest for >2 classes)."""
import numpy as np

from .base import Learner, is_int, is_real, register, require


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def logistic_loss_grad(w, b, X, y, l2=0.0):
    """Mean negative log-likelihood of binary labels ``y`` and its gradient.

    Returns ``(loss, grad_w, grad_b)``; ``l2`` adds ``l2/2 * ||w||**2``.
    """
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2 * float(w @ w)
    r = (_sigmoid(z) - y) / len(y)
    return loss, X.T @ r + l2 * w, float(r.sum())


def _gradient_descent(X, y, lr, max_iter, tol, l2):
    w = np.zeros(X.shape[1])
    b = 0.0
    for it in range(1, max_iter + 1):
        _, gw, gb = logistic_loss_grad(w, b, X, y, l2)
        if max(np.max(np.abs(gw)), abs(gb)) < tol:
            return w, b, it - 1, True
        w = w - lr * gw
        b = b - lr * gb
    return w, b, max_iter, False


def _fit(X, y, hp, seed, n_classes):
    lr, max_iter, tol, l2 = hp["learning_rate"], hp["max_iter"], hp["tol"], hp["l2"]
    targets = [1] if n_classes == 2 else range(n_classes)
    W, B, warnings = [], [], []
    for c in targets:
        w, b, iters, converged = _gradient_descent(X, (y == c).astype(np.float64), lr, max_iter, tol, l2)
        W.append(w)
        B.append(b)
        if not converged:
            warnings.append(f"not_converged: class {c} stopped after {iters} iterations")
    return {"weights": np.array(W), "bias": np.array(B)}, None, tuple(warnings)


def _proba(params, X):
    p = _sigmoid(X @ params["weights"].T + params["bias"])
    if p.shape[1] == 1:
        return np.hstack([1.0 - p, p])
    return p / p.sum(axis=1, keepdims=True)


def _predict(params, X, task):
    return np.argmax(_proba(params, X), axis=1)


def _check(hp):
    require(is_real(hp["learning_rate"]) and hp["learning_rate"] > 0, "learning_rate must be > 0")
    require(is_int(hp["max_iter"]) and hp["max_iter"] >= 1, "max_iter must be an integer >= 1")
    require(is_real(hp["tol"]) and hp["tol"] > 0, "tol must be > 0")
    require(is_real(hp["l2"]) and hp["l2"] >= 0, "l2 must be >= 0")


register(Learner(
    name="logistic_regression",
    label="Logistic Regression",
    tasks=("classification",),
    defaults={"learning_rate": 0.1, "max_iter": 1000, "tol": 1e-6, "l2": 0.0},
    fit=_fit,
    predict=_predict,
    proba=_proba,
    check=_check,
))
