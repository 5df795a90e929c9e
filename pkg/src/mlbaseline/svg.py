"""Minimal, deterministic SVG charts (no plotting library).

All coordinates are printed with two decimals so identical inputs give
byte-identical files.
"""
from __future__ import annotations

from html import escape

import numpy as np

WIDTH = 480
HEIGHT = 400
MARGIN = {"left": 64, "right": 20, "top": 36, "bottom": 52}


def _f(v: float) -> str:
    return f"{v:.2f}"


def _range(values):
    lo, hi = float(np.min(values)), float(np.max(values))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


class _Frame:
    def __init__(self, x_range, y_range, width=WIDTH, height=HEIGHT):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        self.width, self.height = width, height
        self.left = MARGIN["left"]
        self.top = MARGIN["top"]
        self.w = width - MARGIN["left"] - MARGIN["right"]
        self.h = height - MARGIN["top"] - MARGIN["bottom"]

    def px(self, x):
        return self.left + (x - self.x0) / (self.x1 - self.x0) * self.w

    def py(self, y):
        return self.top + self.h - (y - self.y0) / (self.y1 - self.y0) * self.h

    def axes(self, title, xlabel, ylabel, n_ticks=5):
        bottom = self.top + self.h
        parts = [
            f'<text x="{_f(self.width / 2)}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
            f'<line class="axis" x1="{_f(self.left)}" y1="{_f(bottom)}" x2="{_f(self.left + self.w)}" y2="{_f(bottom)}" stroke="black"/>',
            f'<line class="axis" x1="{_f(self.left)}" y1="{_f(self.top)}" x2="{_f(self.left)}" y2="{_f(bottom)}" stroke="black"/>',
        ]
        for i in range(n_ticks):
            xv = self.x0 + (self.x1 - self.x0) * i / (n_ticks - 1)
            yv = self.y0 + (self.y1 - self.y0) * i / (n_ticks - 1)
            x, y = self.px(xv), self.py(yv)
            parts.append(f'<line x1="{_f(x)}" y1="{_f(bottom)}" x2="{_f(x)}" y2="{_f(bottom + 4)}" stroke="black"/>')
            parts.append(f'<text x="{_f(x)}" y="{_f(bottom + 16)}" text-anchor="middle" font-size="10">{xv:.3g}</text>')
            parts.append(f'<line x1="{_f(self.left - 4)}" y1="{_f(y)}" x2="{_f(self.left)}" y2="{_f(y)}" stroke="black"/>')
            parts.append(f'<text x="{_f(self.left - 6)}" y="{_f(y + 3)}" text-anchor="end" font-size="10">{yv:.3g}</text>')
        parts.append(
            f'<text x="{_f(self.left + self.w / 2)}" y="{_f(self.height - 12)}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>'
        )
        parts.append(
            f'<text x="14" y="{_f(self.top + self.h / 2)}" text-anchor="middle" font-size="12" '
            f'transform="rotate(-90 14 {_f(self.top + self.h / 2)})">{escape(ylabel)}</text>'
        )
        return parts


def _document(width, height, body) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    return "\n".join([head, f'<rect width="{width}" height="{height}" fill="white"/>', *body, "</svg>"]) + "\n"


def scatter_vs_true(y_true, y_pred, title="Predicted vs true (test)") -> str:
    """Square scatter of predictions against true values with the identity line."""
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    rng = _range(np.concatenate([y_true, y_pred]))
    side = 400
    frame = _Frame(rng, rng, width=side + 20, height=side)
    body = frame.axes(title, "true value", "predicted value")
    body.append(
        f'<line class="identity" x1="{_f(frame.px(rng[0]))}" y1="{_f(frame.py(rng[0]))}" '
        f'x2="{_f(frame.px(rng[1]))}" y2="{_f(frame.py(rng[1]))}" stroke="gray" stroke-dasharray="4 3"/>'
    )
    for t, p in zip(y_true, y_pred):
        body.append(
            f'<circle class="point" cx="{_f(frame.px(t))}" cy="{_f(frame.py(p))}" r="3" '
            f'fill="steelblue" fill-opacity="0.7"/>'
        )
    return _document(frame.width, frame.height, body)


def loss_curves(train_loss, val_loss, title="Loss vs epoch") -> str:
    """Train and validation loss per epoch as two polylines (one point per epoch)."""
    train_loss = np.asarray(train_loss, dtype=np.float64)
    val_loss = np.asarray(val_loss, dtype=np.float64)
    n = len(train_loss)
    frame = _Frame((1.0, float(max(n, 2))), _range(np.concatenate([train_loss, val_loss])))
    body = frame.axes(title, "epoch", "loss")
    for cls, series, color in (("train", train_loss, "steelblue"), ("validation", val_loss, "darkorange")):
        pts = " ".join(f"{_f(frame.px(i + 1))},{_f(frame.py(v))}" for i, v in enumerate(series))
        body.append(f'<polyline class="{cls}" points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
    lx = frame.left + frame.w - 110
    body.append(f'<text x="{_f(lx)}" y="{_f(frame.top + 12)}" font-size="11" fill="steelblue">train</text>')
    body.append(f'<text x="{_f(lx)}" y="{_f(frame.top + 26)}" font-size="11" fill="darkorange">validation</text>')
    return _document(frame.width, frame.height, body)


def confusion_table(cm, labels=None, title="Confusion matrix (test, summed over folds)") -> str:
    """Grid of counts; cell shade is the row-normalized fraction."""
    cm = np.asarray(cm, dtype=np.int64)
    k = cm.shape[0]
    labels = [str(i) for i in range(k)] if labels is None else [str(l) for l in labels]
    cell = 48
    left, top = 90, 60
    width = left + k * cell + 20
    height = top + k * cell + 40
    body = [
        f'<text x="{_f(width / 2)}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<text x="{_f(left + k * cell / 2)}" y="42" text-anchor="middle" font-size="11">predicted</text>',
        f'<text x="14" y="{_f(top + k * cell / 2)}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 14 {_f(top + k * cell / 2)})">true</text>',
    ]
    totals = cm.sum(axis=1)
    for j in range(k):
        body.append(
            f'<text x="{_f(left + j * cell + cell / 2)}" y="{_f(top - 4)}" text-anchor="middle" font-size="10">{escape(labels[j])}</text>'
        )
    for i in range(k):
        body.append(
            f'<text x="{_f(left - 6)}" y="{_f(top + i * cell + cell / 2 + 3)}" text-anchor="end" font-size="10">{escape(labels[i])}</text>'
        )
        for j in range(k):
            frac = cm[i, j] / totals[i] if totals[i] else 0.0
            shade = int(round(255 - 175 * frac))
            body.append(
                f'<rect class="cell" x="{left + j * cell}" y="{top + i * cell}" width="{cell}" height="{cell}" '
                f'fill="rgb({shade},{shade},255)" stroke="black"/>'
            )
            body.append(
                f'<text class="count" x="{_f(left + j * cell + cell / 2)}" y="{_f(top + i * cell + cell / 2 + 4)}" '
                f'text-anchor="middle" font-size="12">{cm[i, j]}</text>'
            )
    return _document(width, height, body)
