"""Training losses.  Cross-entropy is base-2 throughout, so subtracting
it from log2(order) gives mutual information in bits directly."""

from __future__ import annotations

import numpy as np

_LN2 = np.log(2.0)
_TINY = 1e-300


def mse_loss(pred, target) -> float:
    """Mean squared error over every element (batch and components)."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_loss_grad(pred, target):
    """(loss, d loss / d pred); gradient is 2*(pred-target)/pred.size."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff)), (2.0 / pred.size) * diff


def _check_labels(labels, n_classes):
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError("class label outside [0, n_classes)")
    return labels


def cel_loss(probs, labels) -> float:
    """Categorical cross-entropy in bits from probability rows."""
    probs = np.asarray(probs)
    sums = probs.sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > 1e-3:
        raise ValueError("probability rows must sum to 1")
    labels = _check_labels(labels, probs.shape[1])
    p = probs[np.arange(len(labels)), labels]
    return float(np.mean(-np.log2(np.maximum(p, _TINY))))


def softmax_forward(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cel(logits, labels):
    """Fused softmax + base-2 cross-entropy.

    Returns (loss_bits, d loss / d logits, probs); the gradient is
    (probs - onehot) / (B * ln 2).
    """
    labels = _check_labels(labels, logits.shape[1])
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.sum(np.exp(z), axis=1))
    rows = np.arange(len(labels))
    log_p = z[rows, labels] - log_norm
    loss = float(np.mean(-log_p) / _LN2)
    probs = softmax_forward(logits)
    grad = probs.copy()
    grad[rows, labels] -= 1.0
    grad /= len(labels) * _LN2
    return loss, grad.astype(logits.dtype, copy=False), probs
