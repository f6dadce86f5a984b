"""
Adaptive-moment optimizer with decoupled weight decay and the cosine schedule.

Used by both the linear classifier and the patch-embedding encoder.
"""

import math
from typing import Dict, Iterable

import numpy as np


def cosine_lr(base_lr: float, epoch: int, max_epochs: int) -> float:
    """Learning rate annealed from ``base_lr`` at epoch 0 towards 0 at ``max_epochs``."""
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * epoch / max_epochs))


class AdamW:
    """
    AdamW over a dict of named numpy parameters, updated in place.

    Weight decay is applied directly to the parameters (not through the
    gradient) and skipped for names listed in ``no_decay``.
    """

    def __init__(
        self,
        params: Dict[str, np.ndarray],
        weight_decay: float = 0.01,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        no_decay: Iterable[str] = (),
    ):
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.no_decay = set(no_decay)
        self.m = {name: np.zeros_like(p) for name, p in params.items()}
        self.v = {name: np.zeros_like(p) for name, p in params.items()}
        self.t = 0

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p in params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            if self.weight_decay and name not in self.no_decay:
                p -= lr * self.weight_decay * p
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
