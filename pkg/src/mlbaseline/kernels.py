"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``MLBASELINE_PURE_PYTHON`` is set to a non-empty value,
the numpy implementations are used. Both produce identical results.
"""
import os

import numpy as np

from . import _pykernels

try:
    if os.environ.get("MLBASELINE_PURE_PYTHON"):
        raise ImportError("pure-python backend forced")
    from . import _ckernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

BACKENDS = {"python": _pykernels}
try:
    from . import _ckernels

    BACKENDS["cython"] = _ckernels
except ImportError:
    pass


def _prep(X, samples, features):
    return (
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(samples, dtype=np.int64),
        np.ascontiguousarray(features, dtype=np.int64),
    )


def best_split_regression(X, y, samples, features, min_leaf, backend=None):
    impl = BACKENDS[backend] if backend else _impl
    X, samples, features = _prep(X, samples, features)
    return impl.best_split_regression(
        X, np.ascontiguousarray(y, dtype=np.float64), samples, features, int(min_leaf)
    )


def best_split_classification(X, y, samples, features, n_classes, min_leaf, backend=None):
    impl = BACKENDS[backend] if backend else _impl
    X, samples, features = _prep(X, samples, features)
    return impl.best_split_classification(
        X,
        np.ascontiguousarray(y, dtype=np.int64),
        samples,
        features,
        int(n_classes),
        int(min_leaf),
    )


def knn_neighbors(X_train, X_query, k, backend=None):
    impl = BACKENDS[backend] if backend else _impl
    return impl.knn_neighbors(
        np.ascontiguousarray(X_train, dtype=np.float64),
        np.ascontiguousarray(X_query, dtype=np.float64),
        int(k),
    )
