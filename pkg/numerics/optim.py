"""Adam with bias-corrected moment estimates."""
from dataclasses import dataclass, asdict
from typing import Dict, Iterable, Optional

import numpy as np

from .tensor import Tensor


@dataclass(frozen=True)
class OptimizerConfig:
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError('alpha must be non-negative, got %r' % self.alpha)
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError('beta1/beta2 must lie in [0, 1), got %r/%r' % (self.beta1, self.beta2))
        if not self.epsilon > 0:
            raise ValueError('epsilon must be positive, got %r' % self.epsilon)

    def to_dict(self):
        return asdict(self)


class Adam:
    """Adam over a fixed list of parameter tensors; moment buffers persist between steps.

    The optimizer keeps its own 1-based step counter; <step> also accepts an explicit
    <step_count>, which drives the bias correction.
    """

    def __init__(self, params: Iterable[Tensor], config: OptimizerConfig):
        self.params = [p for p in params if p.requires_grad]
        self.config = config
        self.m: Dict[int, np.ndarray] = {i: np.zeros_like(p.data) for i, p in enumerate(self.params)}
        self.v: Dict[int, np.ndarray] = {i: np.zeros_like(p.data) for i, p in enumerate(self.params)}
        self.t = 0

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self, step_count: Optional[int] = None):
        self.t = self.t + 1 if step_count is None else int(step_count)
        if self.t < 1:
            raise ValueError('step_count is 1-based, got %d' % self.t)
        cfg = self.config
        bc1 = 1.0 - cfg.beta1 ** self.t
        bc2 = 1.0 - cfg.beta2 ** self.t
        for i, p in enumerate(self.params):
            if p.grad is None:
                raise ValueError('parameter %d has no gradient' % i)
            g = p.grad
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * (g * g)
            m_hat = self.m[i] / bc1
            v_hat = self.v[i] / bc2
            p.data = p.data - cfg.alpha * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
