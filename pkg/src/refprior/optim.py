"""AdaM, always minimizing; callers negate gradients to ascend."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["AdamState", "adam_step"]


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0

    @classmethod
    def zeros(cls, n: int, lr: float = 1e-3, **kw) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), lr=lr, **kw)

    def to_dict(self) -> dict:
        return {
            "m": self.m.tolist(), "v": self.v.tolist(), "lr": self.lr,
            "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps, "t": self.t,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdamState":
        d = dict(d)
        return cls(m=np.asarray(d.pop("m"), float), v=np.asarray(d.pop("v"), float), **d)


def adam_step(state: AdamState, grad) -> tuple[np.ndarray, AdamState]:
    """Return ``(delta, new_state)``; apply as ``lam + delta``."""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.m.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match state {state.m.shape}")
    bad = np.flatnonzero(~np.isfinite(grad))
    if bad.size:
        raise FloatingPointError(f"non-finite gradient component at index {int(bad[0])}")
    t = state.t + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad**2
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    delta = -state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    new = AdamState(m, v, lr=state.lr, beta1=state.beta1, beta2=state.beta2, eps=state.eps, t=t)
    return delta, new
