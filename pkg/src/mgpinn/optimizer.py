"""Adam with inverse-time learning-rate decay."""

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingFault


@dataclass
class AdamState:
    lr0: float
    decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)
    t: int = 0

    @classmethod
    def create(cls, size, lr0, decay=0.0, **kw):
        return cls(lr0, decay, m=np.zeros(size), v=np.zeros(size), **kw)

    def lr_at(self, t):
        """Learning rate applied when ``t`` updates have already been taken."""
        return self.lr0 / (1.0 + self.decay * t)

    @property
    def lr(self):
        return self.lr_at(self.t)


def step(state, theta, grad):
    """One Adam update; returns the new parameter vector and mutates ``state``."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != theta.shape or grad.shape != state.m.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match parameters {theta.shape}")
    if not np.all(np.isfinite(grad)):
        raise TrainingFault(f"non-finite gradient at optimizer step {state.t}")
    lr = state.lr
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    return theta - lr * m_hat / (np.sqrt(v_hat) + state.eps)
