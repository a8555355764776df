"""Bias-corrected Adam over a parameter list."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


class OptimizerError(RuntimeError):
    pass


class Adam:
    def __init__(self, params, lr: float = 1e-4, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        if not all(isinstance(p, Tensor) and p.requires_grad for p in self.params):
            raise OptimizerError("Adam expects tracked parameter tensors")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for i, p in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                name = p.name or f"param[{i}]"
                raise OptimizerError(f"non-finite gradient in {name}; training diverged")
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state_dict(self):
        return {
            "step": self.step_count,
            "lr": self.lr,
            "m": [m.copy() for m in self.m],
            "v": [v.copy() for v in self.v],
        }

    def load_state_dict(self, state):
        self.step_count = int(state["step"])
        self.lr = float(state["lr"])
        self.m = [np.array(m) for m in state["m"]]
        self.v = [np.array(v) for v in state["v"]]


def step_lr(base_lr: float, epoch: int, decay: float = 0.9, step_size: int = 5) -> float:
    """Learning rate after `epoch` completed epochs: base * decay^(epoch // step_size)."""
    return base_lr * decay ** (epoch // step_size)
