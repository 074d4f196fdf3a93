"""
Central finite-difference gradient checker.
"""

import logging
from typing import Callable

import numpy as np

from diffmath.tensor import Tape, Tensor

logger = logging.getLogger(__name__)


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, step: float = 1e-5) -> float:
    """
    Compare the tape gradient of a scalar function with central differences.

    Args:
        f: Function mapping a tensor to a scalar tensor built from diffmath ops.
        x: Point of evaluation. Its data is not modified.
        step: Finite-difference step.

    Returns:
        max over entries of |analytic - numeric| / max(1, |analytic|).
    """
    point = Tensor(x.data, requires_grad=True)
    with Tape() as tape:
        loss = f(point)
        tape.backward(loss)
    analytic = point.grad

    numeric = np.zeros_like(point.data)
    probe = point.data.copy()
    for index in np.ndindex(*probe.shape):
        original = probe[index]
        probe[index] = original + step
        upper = f(Tensor(probe)).item()
        probe[index] = original - step
        lower = f(Tensor(probe)).item()
        probe[index] = original
        numeric[index] = (upper - lower) / (2.0 * step)

    error = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    worst = float(error.max()) if error.size else 0.0
    logger.debug(f"grad_check over {probe.size} entries: max relative error {worst:.3e}")
    return worst
