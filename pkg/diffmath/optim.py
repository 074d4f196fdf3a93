"""
Adam optimizer with bias correction.
"""

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from diffmath.tensor import ShapeError, Tensor

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """
    Moment buffers and hyperparameters of one Adam optimizer.

    weight_decay is coupled L2: decay * param is added to the gradient
    before the moment updates.
    """
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    state: AdamState
) -> list[np.ndarray]:
    """
    Apply one bias-corrected Adam update.

    Args:
        params: Parameter arrays; updated in place.
        grads: Gradients, one per parameter.
        state: Optimizer state; t is incremented and m, v created on first use.

    Returns:
        The updated parameter arrays.

    Raises:
        ShapeError: If a gradient does not match its parameter.
    """
    if len(params) != len(grads):
        raise ShapeError(f"adam_step: {len(params)} params but {len(grads)} grads")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ShapeError(f"adam_step: param {p.shape} vs grad {g.shape}")

    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t

    for i, (p, g) in enumerate(zip(params, grads)):
        if state.weight_decay:
            g = g + state.weight_decay * p
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        m_hat = state.m[i] / correction1
        v_hat = state.v[i] / correction2
        p -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)

    return list(params)


class Adam:
    """Adam over a list of leaf tensors, reading their .grad buffers."""

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3, weight_decay: float = 0.0):
        self.params = list(params)
        self.state = AdamState(lr=lr, weight_decay=weight_decay)

    def step(self) -> None:
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        adam_step([p.data for p in self.params], grads, self.state)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
