from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..utils.errors import InvalidParameterError
from .params import ParameterStore


def adamw_update(
    store: ParameterStore,
    lr: float,
    betas: Sequence[float] = (0.9, 0.999),
    eps: float = 1e-8,
    weight_decay: float = 0.01,
) -> ParameterStore:
    """One AdamW step: decoupled decay on values, bias-corrected moments, gradients zeroed"""
    if not lr > 0:
        raise InvalidParameterError(f"learning rate must be > 0, got {lr}")
    beta1, beta2 = betas
    store.step += 1
    correction1 = 1.0 - beta1 ** store.step
    correction2 = 1.0 - beta2 ** store.step
    for name, tensor in store.items():
        grad = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        if weight_decay:
            tensor.data *= 1.0 - lr * weight_decay
        m = store.m[name]
        v = store.v[name]
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        tensor.data -= lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
    store.zero_grad()
    return store


@dataclass
class AdamW:
    lr: float = 1e-2
    betas: Sequence[float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.01

    @classmethod
    def from_config(cls, optimizer_config) -> "AdamW":
        return cls(
            lr=optimizer_config.lr,
            betas=tuple(optimizer_config.betas),
            eps=optimizer_config.eps,
            weight_decay=optimizer_config.weight_decay,
        )

    def step(self, store: ParameterStore) -> ParameterStore:
        return adamw_update(store, self.lr, self.betas, self.eps, self.weight_decay)
