"""Pure numpy implementations of the hot kernels.

These must stay bit-for-bit identical to ``_ckernels.pyx``: same summation
order, same tie-breaking, same midpoint formula.
"""
import numpy as np

_NO_SPLIT = (-1, float("nan"), float("-inf"))


def _midpoint(a, b):
    t = (a + b) * 0.5
    return t if t < b else a


def best_split_regression(X, y, samples, features, min_leaf):
    """Best variance-reduction split over ``features`` for the node holding ``samples``.

    Returns ``(feature, threshold, score)`` where score is ``sl**2/nl + sr**2/nr``
    (larger is better) or ``(-1, nan, -inf)`` if no admissible split exists.
    """
    m = len(samples)
    if m < 2 * min_leaf or m < 2:
        return _NO_SPLIT
    nl = np.arange(1, m, dtype=np.float64)
    nr = m - nl
    size_ok = (nl >= min_leaf) & (nr >= min_leaf)
    y_node = y[samples]
    best_f, best_t, best_s = _NO_SPLIT
    for f in features:
        v = X[samples, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        cs = np.cumsum(y_node[order])
        sl = cs[:-1]
        sr = cs[-1] - sl
        score = sl * sl / nl + sr * sr / nr
        ok = size_ok & (vs[:-1] < vs[1:])
        if not ok.any():
            continue
        score = np.where(ok, score, -np.inf)
        i = int(np.argmax(score))
        if score[i] > best_s:
            best_f, best_t, best_s = int(f), _midpoint(vs[i], vs[i + 1]), float(score[i])
    return best_f, best_t, best_s


def best_split_classification(X, y, samples, features, n_classes, min_leaf):
    """Best Gini split; score is ``sum(cl**2)/nl + sum(cr**2)/nr`` (larger is better)."""
    m = len(samples)
    if m < 2 * min_leaf or m < 2:
        return _NO_SPLIT
    nl = np.arange(1, m, dtype=np.float64)
    nr = m - nl
    size_ok = (nl >= min_leaf) & (nr >= min_leaf)
    y_node = y[samples]
    eye = np.eye(n_classes, dtype=np.int64)
    best_f, best_t, best_s = _NO_SPLIT
    for f in features:
        v = X[samples, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        cum = np.cumsum(eye[y_node[order]], axis=0)
        left = cum[:-1]
        right = cum[-1] - left
        score = (left * left).sum(axis=1) / nl + (right * right).sum(axis=1) / nr
        ok = size_ok & (vs[:-1] < vs[1:])
        if not ok.any():
            continue
        score = np.where(ok, score, -np.inf)
        i = int(np.argmax(score))
        if score[i] > best_s:
            best_f, best_t, best_s = int(f), _midpoint(vs[i], vs[i + 1]), float(score[i])
    return best_f, best_t, best_s


def knn_neighbors(X_train, X_query, k, block=512):
    """Indices of the ``k`` nearest training rows per query, ordered by (distance, index)."""
    n, d = X_train.shape
    out = np.empty((X_query.shape[0], k), dtype=np.int64)
    for start in range(0, X_query.shape[0], block):
        Q = X_query[start:start + block]
        dist = np.zeros((Q.shape[0], n), dtype=np.float64)
        for j in range(d):
            diff = Q[:, j, None] - X_train[None, :, j]
            dist += diff * diff
        out[start:start + block] = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return out
