"""Adam parameter updates over named tensor dictionaries."""

from __future__ import annotations

import numpy as np

from ..exceptions import ShapeMismatch
from .engine import Tensor


class AdamState:
    """First/second moment buffers plus the shared step counter."""

    def __init__(self):
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0


def adam_step(params, grads, state, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update applied in place to every named parameter.

    ``params`` maps name -> Tensor, ``grads`` maps name -> gradient array of
    the same shape. Missing names keep their parameters untouched but their
    moments still decay. Deterministic given identical inputs.
    """
    state.t += 1
    t = state.t
    bias1 = 1.0 - beta1 ** t
    bias2 = 1.0 - beta2 ** t
    for name, p in params.items():
        data = p.data if isinstance(p, Tensor) else p
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(data)
        if g.shape != data.shape:
            raise ShapeMismatch(f"grad shape {g.shape} != param shape {data.shape} for {name}")
        g = g.astype(data.dtype, copy=False)
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(data)
            state.m[name] = m
            state.v[name] = np.zeros_like(data)
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / bias1
        v_hat = v / bias2
        data -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(data.dtype, copy=False)
