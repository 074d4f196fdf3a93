"""
Numerical core with reverse-mode differentiation.

Provides:
- Tensor and Tape: 2-D float64 values and the operation record
- ops: differentiable primitives (matmul, sparse products, softmax, entropy building blocks)
- Adam / adam_step: bias-corrected Adam optimizer
- grad_check: central finite-difference oracle
"""

from diffmath import ops
from diffmath.gradcheck import grad_check
from diffmath.optim import Adam, AdamState, adam_step
from diffmath.tensor import ShapeError, Tape, TapeError, Tensor, backward, current_tape

__all__ = [
    "ops",
    "Tensor",
    "Tape",
    "backward",
    "current_tape",
    "ShapeError",
    "TapeError",
    "Adam",
    "AdamState",
    "adam_step",
    "grad_check",
]
