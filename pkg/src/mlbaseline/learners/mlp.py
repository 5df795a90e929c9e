"""One-hidden-layer perceptron trained by full-batch gradient descent with early stopping."""
from __future__ import annotations

import numpy as np

from ..errors import InsufficientData
from ..rng import sub_rng
from .base import Learner, TrainingTrace, is_int, is_real, register, require


def init_params(n_in: int, n_hidden: int, n_out: int, rng: np.random.Generator) -> dict:
    """Weights uniform in +-1/sqrt(fan_in); biases start at zero."""
    b1 = 1.0 / np.sqrt(n_in)
    b2 = 1.0 / np.sqrt(n_hidden)
    return {
        "W1": rng.uniform(-b1, b1, size=(n_in, n_hidden)),
        "b1": np.zeros(n_hidden),
        "W2": rng.uniform(-b2, b2, size=(n_hidden, n_out)),
        "b2": np.zeros(n_out),
    }


def _softmax(O):
    O = O - O.max(axis=1, keepdims=True)
    E = np.exp(O)
    return E / E.sum(axis=1, keepdims=True)


def forward(params: dict, X: np.ndarray):
    H = np.tanh(X @ params["W1"] + params["b1"])
    return H, H @ params["W2"] + params["b2"]


def mlp_loss_grad(params: dict, X: np.ndarray, Y: np.ndarray, task: str):
    """Loss and backpropagated gradients.

    Regression: ``0.5 * mean_i ||o_i - y_i||**2`` with identity output.
    Classification: mean cross-entropy of softmax outputs against one-hot ``Y``.
    """
    n = X.shape[0]
    H, O = forward(params, X)
    if task == "classification":
        Z = O - O.max(axis=1, keepdims=True)
        logp = Z - np.log(np.exp(Z).sum(axis=1, keepdims=True))
        loss = float(-(Y * logp).sum() / n)
        dO = (np.exp(logp) - Y) / n
    else:
        R = O - Y
        loss = float(0.5 * (R * R).sum() / n)
        dO = R / n
    dH = (dO @ params["W2"].T) * (1.0 - H * H)
    grads = {
        "W1": X.T @ dH,
        "b1": dH.sum(axis=0),
        "W2": H.T @ dO,
        "b2": dO.sum(axis=0),
    }
    return loss, grads


def _loss(params, X, Y, task):
    return mlp_loss_grad(params, X, Y, task)[0]


def _fit(X, y, hp, seed, n_classes):
    n = X.shape[0]
    if n < 2:
        raise InsufficientData("mlp needs at least 2 rows to hold out a validation split")
    task = "classification" if n_classes else "regression"
    if n_classes:
        Y = np.eye(n_classes)[y]
        y_shift, y_scale = 0.0, 1.0
    else:
        # train on standardized targets so one learning rate fits any target scale
        y_shift = float(y.mean())
        y_scale = float(y.std()) or 1.0
        Y = ((y - y_shift) / y_scale)[:, None]

    perm = sub_rng(seed, 1).permutation(n)
    n_val = min(n - 1, max(1, int(round(hp["validation_fraction"] * n))))
    val, tr = perm[:n_val], perm[n_val:]

    params = init_params(X.shape[1], hp["hidden_units"], Y.shape[1], sub_rng(seed, 0))
    lr, patience, min_delta = hp["learning_rate"], hp["patience"], hp["min_delta"]
    train_losses, val_losses = [], []
    best_val = np.inf
    best_params = params
    ref_val = np.inf  # patience resets only on improvement by more than min_delta
    wait = 0
    reason = "max_epochs"
    for _ in range(hp["max_epochs"]):
        _, grads = mlp_loss_grad(params, X[tr], Y[tr], task)
        params = {k: params[k] - lr * grads[k] for k in params}
        train_losses.append(_loss(params, X[tr], Y[tr], task))
        v = _loss(params, X[val], Y[val], task)
        val_losses.append(v)
        if v < best_val:
            best_val, best_params = v, params
        if v < ref_val - min_delta:
            ref_val, wait = v, 0
        else:
            wait += 1
            if wait >= patience:
                reason = "early_stopping"
                break

    trace = TrainingTrace(tuple(train_losses), tuple(val_losses), len(val_losses), reason)
    out = dict(best_params)
    out.update({"y_shift": y_shift, "y_scale": y_scale, "n_classes": n_classes})
    return out, trace, ()


def _predict(params, X, task):
    _, O = forward(params, X)
    if task == "classification":
        return np.argmax(O, axis=1)
    return O[:, 0] * params["y_scale"] + params["y_shift"]


def _proba(params, X):
    return _softmax(forward(params, X)[1])


def _check(hp):
    require(is_int(hp["hidden_units"]) and hp["hidden_units"] >= 1, "hidden_units must be an integer >= 1")
    require(is_real(hp["learning_rate"]) and hp["learning_rate"] > 0, "learning_rate must be > 0")
    require(is_int(hp["max_epochs"]) and hp["max_epochs"] >= 1, "max_epochs must be an integer >= 1")
    require(is_int(hp["patience"]) and hp["patience"] >= 1, "patience must be an integer >= 1")
    require(is_real(hp["min_delta"]) and hp["min_delta"] >= 0, "min_delta must be >= 0")
    vf = hp["validation_fraction"]
    require(is_real(vf) and 0 < vf < 1, "validation_fraction must be in (0, 1)")


register(Learner(
    name="mlp",
    label="MLP",
    tasks=("regression", "classification"),
    defaults={
        "hidden_units": 8,
        "learning_rate": 0.05,
        "max_epochs": 500,
        "patience": 10,
        "min_delta": 1e-6,
        "validation_fraction": 0.2,
    },
    fit=_fit,
    predict=_predict,
    proba=_proba,
    check=_check,
))
