"""Finite-difference verification helpers for the layer zoo.

Checks compare the analytic backward pass against central differences of a
random linear functional of the layer output, in float64, parameters and
inputs alike.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .layers import Layer, Parameter


def numeric_grad(f: Callable[[], float], x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of scalar f() w.r.t. x, mutated in place."""
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        hi = f()
        flat[i] = keep - eps
        lo = f()
        flat[i] = keep
        gf[i] = (hi - lo) / (2 * eps)
    return g


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
    return float(np.max(np.abs(analytic - numeric) / denom)) if analytic.size else 0.0


def check_layer(
    layer: Layer,
    x: np.ndarray,
    rng: np.random.Generator,
    eps: float = 1e-6,
) -> dict[str, float]:
    """Max relative backward error for the input and every parameter.

    Uses the projection loss f = sum(forward(x) * R) with a fixed random R,
    so the analytic gradient of the input is backward(R) and parameter
    gradients land in ``Parameter.grad``.
    """
    if x.dtype != np.float64:
        raise ValueError("gradient checks must run in float64")
    R = rng.standard_normal(layer.forward(x).shape)

    def f() -> float:
        return float(np.sum(layer.forward(x) * R))

    params: list[tuple[str, Parameter]] = layer.named_parameters()
    for _, p in params:
        p.grad[...] = 0
    layer.forward(x)
    gx = layer.backward(R)

    errors = {"input": max_rel_error(gx, numeric_grad(f, x, eps))}
    analytic = {name: p.grad.copy() for name, p in params}
    for name, p in params:
        errors[name] = max_rel_error(analytic[name], numeric_grad(f, p.value, eps))
    return errors
