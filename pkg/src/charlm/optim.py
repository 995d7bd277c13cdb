"""Adam with bias correction over a dict of parameter arrays."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def fresh(cls, params: dict, **hyper) -> "AdamState":
        state = cls(**hyper)
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
        return state

    def hyperparameters(self) -> dict:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}


def adam_step(params: dict, grads: dict, state: AdamState) -> None:
    """Update ``params`` and ``state`` in place.

    ``theta -= lr * m_hat / (sqrt(v_hat) + eps)``, eps outside the root.
    All gradients are validated before anything is mutated.
    """
    if set(grads) != set(params) or set(state.m) != set(params):
        raise ValueError("params, grads and optimizer state must have identical keys")
    for k, p in params.items():
        if grads[k].shape != p.shape or state.m[k].shape != p.shape:
            raise ValueError(f"shape mismatch for {k!r}: param {p.shape}, grad {grads[k].shape}, "
                             f"state {state.m[k].shape}")
        if not np.all(np.isfinite(grads[k])):
            raise FloatingPointError(f"non-finite gradient in {k!r}")
    if state.t + 1 >= 2**53:
        raise OverflowError("Adam step counter exhausted")

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for k, p in params.items():
        g = grads[k]
        m, v = state.m[k], state.v[k]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


def global_norm(grads: dict) -> float:
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_global_norm(grads: dict, max_norm: float) -> float:
    """Rescale ``grads`` in place so their joint L2 norm is at most ``max_norm``; returns the original norm."""
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for g in grads.values():
            g *= scale
    return norm
