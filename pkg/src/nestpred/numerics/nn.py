"""Shared building blocks: MLPs, masked softmax and attention."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .params import ParamStore
from .tensor import DimensionError, Tensor, as_tensor, concat, exp, softmax

ACTIVATIONS = {
    "tanh": lambda t: t.tanh(),
    "relu": lambda t: t.relu(),
    "sigmoid": lambda t: t.sigmoid(),
    "none": lambda t: t,
}


def register_mlp(registry: dict, prefix: str, sizes: Sequence[int], stack: int | None = None) -> None:
    """Add the weights of an MLP with layer sizes ``sizes`` to ``registry``.

    ``stack`` creates that many independent MLPs stored as one leading axis,
    so they can be evaluated with a single broadcast matmul.
    """
    lead = () if stack is None else (stack,)
    bias_lead = () if stack is None else (stack, 1)
    for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        registry[f"{prefix}.{i}.weight"] = (lead + (n_in, n_out), n_in)
        registry[f"{prefix}.{i}.bias"] = (bias_lead + (n_out,), n_in)


def mlp_forward(params: ParamStore, prefix: str, x, sizes: Sequence[int],
                activation: str = "tanh", final: str = "none") -> Tensor:
    """Dense layers ``x @ W + b`` with ``activation`` between them and ``final`` after the last."""
    x = as_tensor(x)
    vector = x.ndim == 1
    if vector:
        x = x.reshape(1, x.shape[0])
    n_layers = len(sizes) - 1
    for i in range(n_layers):
        w = params[f"{prefix}.{i}.weight"]
        if x.shape[-1] != w.shape[-2]:
            raise DimensionError(
                f"{prefix}.{i}: input has last dim {x.shape[-1]}, layer expects {w.shape[-2]}")
        x = x @ w + params[f"{prefix}.{i}.bias"]
        x = ACTIVATIONS[activation if i < n_layers - 1 else final](x)
    return x.reshape(x.shape[-1]) if vector else x


def masked_softmax(scores, mask: np.ndarray, axis: int = -1) -> Tensor:
    """Softmax restricted to entries where ``mask`` is 1; all-masked slices give zeros.

    ``mask`` may also hold a differentiable soft weight (a Tensor); the result
    is then ``w*exp(s) / sum(w*exp(s))``.
    """
    scores = as_tensor(scores)
    m = np.asarray(mask.data if isinstance(mask, Tensor) else mask, dtype=np.float64)
    shape = np.broadcast_shapes(scores.shape, m.shape)
    safe = np.where(np.broadcast_to(m > 0, shape), np.broadcast_to(scores.data, shape), -np.inf)
    shift = np.max(safe, axis=axis, keepdims=True)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    w = exp(scores - shift) * mask
    denom = w.sum(axis=axis, keepdims=True)
    empty = (denom.data <= 0).astype(np.float64)
    return w / (denom + empty)


def masked_mean(x, mask: np.ndarray, axis: int) -> Tensor:
    """Mean of ``x`` over ``axis`` counting only rows where ``mask`` is 1."""
    m = np.asarray(mask, dtype=np.float64)
    count = np.maximum(m.sum(axis=axis, keepdims=True), 1.0)
    return (as_tensor(x) * m).sum(axis=axis) / np.squeeze(count, axis=axis)


def attention(q, k, v, mask: np.ndarray | None = None) -> Tensor:
    """Scaled dot-product attention ``softmax(q k^T / sqrt(d)) v``.

    ``mask`` broadcasts against the score matrix; masked keys get zero weight.
    """
    q, k, v = as_tensor(q), as_tensor(k), as_tensor(v)
    scores = (q @ k.swapaxes(-1, -2)) * (1.0 / math.sqrt(q.shape[-1]))
    weights = softmax(scores) if mask is None else masked_softmax(scores, mask)
    return weights @ v


def sinusoidal_encoding(length: int, d: int) -> np.ndarray:
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(d, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / d)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))

