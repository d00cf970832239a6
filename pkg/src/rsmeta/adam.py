"""Bias-corrected Adam on flat parameter vectors.

Kept as a tiny pure-numpy implementation so both optimizers in this
package (the network trainer and the direct precoder baseline) share one
update rule and one set of constants.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["AdamState", "adam_step"]


@dataclass
class AdamState:
    """First and second moment accumulators plus the step counter."""

    m: np.ndarray
    v: np.ndarray
    step_count: int = 0

    @classmethod
    def zeros(cls, dim: int) -> "AdamState":
        return cls(m=np.zeros(int(dim)), v=np.zeros(int(dim)))


def adam_step(state: AdamState, grad: np.ndarray, lr: float,
              beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> np.ndarray:
    """Advance the state by one gradient and return the parameter delta.

    The caller applies the returned delta additively; the learning rate is
    already folded in, so it must not be applied twice. On the first step
    the delta is close to -lr * sign(grad) thanks to bias correction.
    """
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.m.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match state "
                         f"{state.m.shape}")
    if not lr > 0:
        raise ValueError(f"lr must be positive, got {lr}")
    state.step_count += 1
    t = state.step_count
    state.m = beta1 * state.m + (1.0 - beta1) * grad
    state.v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = state.m / (1.0 - beta1 ** t)
    v_hat = state.v / (1.0 - beta2 ** t)
    return -lr * m_hat / (np.sqrt(v_hat) + eps)
