"""Softmax cross-entropy with the max-subtraction stabilization."""

from __future__ import annotations

import numpy as np


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(
    logits: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient w.r.t. the logits.

    Returns ``(loss, grad)`` where ``grad = (softmax - onehot) / batch``;
    uniform logits over K classes give loss ln(K) exactly.
    """
    B, K = logits.shape
    if labels.shape != (B,):
        raise ValueError(f"labels shape {labels.shape} does not match batch {B}")
    if labels.min() < 0 or labels.max() >= K:
        raise ValueError("labels outside [0, K)")
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    picked = z[np.arange(B), labels]
    loss = float(np.mean(log_norm - picked))
    grad = softmax(logits)
    grad[np.arange(B), labels] -= 1.0
    return loss, (grad / B).astype(logits.dtype)
