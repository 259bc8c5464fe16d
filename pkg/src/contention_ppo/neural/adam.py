from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    """Bias-corrected Adam with step-wise learning-rate decay.

    The learning rate used for an update is ``lr * decay_factor ** (step // decay_period)``
    where ``step`` counts completed updates; ``decay_period = 0`` disables decay.
    """

    lr: float
    decay_factor: float = 1.0
    decay_period: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    v: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], lr: float, **kw) -> AdamState:
        state = cls(lr=lr, **kw)
        state.m = {k: np.zeros_like(p) for k, p in params.items()}
        state.v = {k: np.zeros_like(p) for k, p in params.items()}
        return state

    @property
    def effective_lr(self) -> float:
        if self.decay_period <= 0:
            return self.lr
        return self.lr * self.decay_factor ** (self.step // self.decay_period)

    def scalars(self) -> dict:
        return {
            "lr": self.lr,
            "decay_factor": self.decay_factor,
            "decay_period": self.decay_period,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "step": self.step,
        }

    def apply(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """Descend along ``grads`` in place."""
        lr = self.effective_lr
        t = self.step + 1
        c1 = 1.0 - self.beta1**t
        c2 = 1.0 - self.beta2**t
        for k, g in grads.items():
            if g.shape != params[k].shape:
                raise ValueError(f"{k}: gradient shape {g.shape} != parameter shape {params[k].shape}")
            m = self.m[k]
            v = self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[k] -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        self.step = t


def adam_step(params, grads, opt: AdamState):
    opt.apply(params, grads)
    return params, opt
