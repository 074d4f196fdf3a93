"""
Dense tensors and the gradient tape.

Provides:
- Tensor: a 2-D float64 value with an optional gradient buffer
- Tape: ordered record of primitive operations, replayed in reverse by backward()
- backward(): exact reverse-mode gradients for every leaf recorded on a tape

Gradients are only tracked while a Tape is active:

    with Tape() as tape:
        loss = ops.sum(ops.sigmoid(x))
        tape.backward(loss)
"""

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

VectorJacobian = Callable[[np.ndarray], Sequence[np.ndarray | None]]


class ShapeError(ValueError):
    """Exception raised when operand shapes are incompatible."""
    pass


class TapeError(RuntimeError):
    """Exception raised on invalid use of a gradient tape."""
    pass


class Tensor:
    """
    Row-major 2-D array of 64-bit floats.

    Scalars are stored as (1, 1) and 1-D input becomes a single row.

    Attributes:
        data: The underlying (rows, cols) float64 array.
        requires_grad: Whether gradients flow into this tensor.
        grad: Gradient buffer of the same shape, populated by backward().
    """

    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, *, copy: bool = True):
        array = np.array(data, dtype=np.float64) if copy else np.asarray(data, dtype=np.float64)
        if array.ndim == 0:
            array = array.reshape(1, 1)
        elif array.ndim == 1:
            array = array.reshape(1, -1)
        elif array.ndim != 2:
            raise ShapeError(f"Tensor data must be at most 2-D, got shape {array.shape}")

        self.data = array
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._node: "_Node | None" = None
        self._tape: "Tape | None" = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def item(self) -> float:
        """Return the value of a (1, 1) tensor as a Python float."""
        if self.data.size != 1:
            raise ShapeError(f"item() needs a scalar tensor, got shape {self.shape}")
        return float(self.data[0, 0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # Operator sugar; the primitives live in diffmath.ops
    def __add__(self, other):
        from diffmath import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from diffmath import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from diffmath import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from diffmath import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from diffmath import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from diffmath import ops
        return ops.mul(other, self)

    def __neg__(self):
        from diffmath import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from diffmath import ops
        return ops.matmul(self, other)


@dataclass
class _Node:
    """One recorded primitive: output, inputs and the vector-Jacobian product."""
    op: str
    output: Tensor
    inputs: tuple[Tensor, ...]
    vjp: VectorJacobian


# Active tapes, innermost last
_TAPE_STACK: list["Tape"] = []


def current_tape() -> "Tape | None":
    """Return the innermost active tape, or None when gradients are off."""
    return _TAPE_STACK[-1] if _TAPE_STACK else None


class Tape:
    """
    Ordered record of primitive operations.

    Nodes are appended in execution order, which is a topological order of
    the computation; backward() visits them once, in reverse.
    """

    def __init__(self):
        self.nodes: list[_Node] = []
        self.consumed = False

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        _TAPE_STACK.remove(self)
        return False

    def __len__(self) -> int:
        return len(self.nodes)

    def record(
        self,
        op: str,
        output: Tensor,
        inputs: tuple[Tensor, ...],
        vjp: VectorJacobian
    ) -> None:
        """Append one primitive application to the tape."""
        if self.consumed:
            raise TapeError("Tape already consumed by backward(); call reset() first")
        node = _Node(op=op, output=output, inputs=inputs, vjp=vjp)
        output._node = node
        output._tape = self
        self.nodes.append(node)

    def reset(self) -> None:
        """Forget all recorded operations so the tape can be reused."""
        for node in self.nodes:
            node.output._node = None
            node.output._tape = None
            node.output.requires_grad = False
        self.nodes = []
        self.consumed = False

    def release(self) -> None:
        """Drop recorded nodes and their closures after backward(); the tape stays consumed."""
        for node in self.nodes:
            node.output._node = None
            node.output._tape = None
        self.nodes = []

    def backward(self, loss: Tensor) -> None:
        """
        Populate .grad on every requires_grad leaf reachable from loss.

        Leaf gradients accumulate onto existing buffers, so callers zero
        them between optimization steps.

        Raises:
            TapeError: If called twice without reset(), if loss is not a
                       scalar, or if loss was not recorded on this tape.
        """
        if self.consumed:
            raise TapeError("backward() called twice on the same tape without reset()")
        if loss.shape != (1, 1):
            raise TapeError(f"backward() needs a scalar loss, got shape {loss.shape}")
        if loss._tape is not self:
            raise TapeError("loss was not recorded on this tape")

        grads: dict[int, np.ndarray] = {id(loss): np.ones((1, 1))}
        leaves: dict[int, Tensor] = {}

        for node in reversed(self.nodes):
            upstream = grads.pop(id(node.output), None)
            if upstream is None:
                continue
            for tensor, contribution in zip(node.inputs, node.vjp(upstream)):
                if not tensor.requires_grad:
                    continue
                key = id(tensor)
                if tensor.is_leaf:
                    leaves[key] = tensor
                if contribution is None:
                    continue
                if key in grads:
                    grads[key] = grads[key] + contribution
                else:
                    grads[key] = contribution

        for key, leaf in leaves.items():
            grad = grads.get(key)
            if grad is None:
                grad = np.zeros_like(leaf.data)
            grad = np.asarray(grad, dtype=np.float64).reshape(leaf.shape)
            leaf.grad = grad.copy() if leaf.grad is None else leaf.grad + grad

        self.consumed = True
        logger.debug(f"Backward pass over {len(self.nodes)} nodes, {len(leaves)} leaves")


def backward(loss: Tensor) -> None:
    """
    Run reverse-mode differentiation from a scalar loss.

    Raises:
        TapeError: If loss was computed without an active tape.
    """
    if loss._tape is None:
        raise TapeError("loss is not on a tape; compute it inside 'with Tape():'")
    loss._tape.backward(loss)
