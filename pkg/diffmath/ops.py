"""
Differentiable primitives over 2-D tensors.

Every primitive computes its forward value with numpy and, when a tape is
active and any input requires a gradient, records a vector-Jacobian product
on that tape. Elementwise binary operations broadcast (1, c) rows and
(n, 1) columns.
"""

import logging
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from diffmath.tensor import ShapeError, Tensor, VectorJacobian, current_tape

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-12
GAT_NEGATIVE_SLOPE = 0.2


# ────────────────────────────────────────────────────────────────────────────────
# Helpers
# ────────────────────────────────────────────────────────────────────────────────

def as_tensor(value) -> Tensor:
    """Wrap numbers and arrays as constant tensors; pass tensors through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _result(op: str, data: np.ndarray, inputs: tuple[Tensor, ...], vjp: VectorJacobian) -> Tensor:
    out = Tensor(data, copy=False)
    tape = current_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(op, out, inputs, vjp)
    return out


def _broadcast_shape(op: str, a: tuple[int, int], b: tuple[int, int]) -> tuple[int, int]:
    dims = []
    for x, y in zip(a, b):
        if x != y and x != 1 and y != 1:
            raise ShapeError(f"{op}: incompatible shapes {a} and {b}")
        dims.append(max(x, y))
    return dims[0], dims[1]


def _unbroadcast(grad: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    if shape[0] == 1 and grad.shape[0] != 1:
        grad = grad.sum(axis=0, keepdims=True)
    if shape[1] == 1 and grad.shape[1] != 1:
        grad = grad.sum(axis=1, keepdims=True)
    return grad


# ────────────────────────────────────────────────────────────────────────────────
# Elementwise arithmetic
# ────────────────────────────────────────────────────────────────────────────────

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a.shape, b.shape)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _result("add", a.data + b.data, (a, b), vjp)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a.shape, b.shape)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _result("sub", a.data - b.data, (a, b), vjp)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a.shape, b.shape)

    def vjp(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _result("mul", a.data * b.data, (a, b), vjp)


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _result("neg", -a.data, (a,), lambda g: (-g,))


# ────────────────────────────────────────────────────────────────────────────────
# Matrix products
# ────────────────────────────────────────────────────────────────────────────────

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")

    def vjp(g):
        return g @ b.data.T, a.data.T @ g

    return _result("matmul", a.data @ b.data, (a, b), vjp)


def sparse_dense_matmul(matrix: sp.spmatrix, x) -> Tensor:
    """Multiply a constant sparse matrix by a dense tensor."""
    x = as_tensor(x)
    if matrix.shape[1] != x.shape[0]:
        raise ShapeError(f"sparse_dense_matmul: incompatible shapes {matrix.shape} and {x.shape}")

    def vjp(g):
        return (np.asarray(matrix.T @ g),)

    return _result("sparse_dense_matmul", np.asarray(matrix @ x.data), (x,), vjp)


def row_inner_product(a, b) -> Tensor:
    """Per-row inner product <a_i, b_i>, shape (n, 1)."""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"row_inner_product: incompatible shapes {a.shape} and {b.shape}")

    def vjp(g):
        return g * b.data, g * a.data

    return _result("row_inner_product", np.sum(a.data * b.data, axis=1, keepdims=True), (a, b), vjp)


# ────────────────────────────────────────────────────────────────────────────────
# Nonlinearities
# ────────────────────────────────────────────────────────────────────────────────

def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return _result("relu", np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def leaky_relu(x, slope: float = GAT_NEGATIVE_SLOPE) -> Tensor:
    x = as_tensor(x)
    scale = np.where(x.data > 0, 1.0, slope)
    return _result("leaky_relu", x.data * scale, (x,), lambda g: (g * scale,))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    s = expit(x.data)
    return _result("sigmoid", s, (x,), lambda g: (g * s * (1.0 - s),))


def log_guarded(x, floor: float = LOG_FLOOR) -> Tensor:
    """log(max(x, floor)); the clamped region has zero derivative."""
    x = as_tensor(x)
    clamped = np.maximum(x.data, floor)
    active = x.data > floor

    def vjp(g):
        return (np.where(active, g / clamped, 0.0),)

    return _result("log_guarded", np.log(clamped), (x,), vjp)


def row_softmax(x) -> Tensor:
    x = as_tensor(x)
    shifted = np.exp(x.data - x.data.max(axis=1, keepdims=True))
    y = shifted / shifted.sum(axis=1, keepdims=True)

    def vjp(g):
        return (y * (g - np.sum(g * y, axis=1, keepdims=True)),)

    return _result("row_softmax", y, (x,), vjp)


def dropout(x, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; rate 0 returns x unchanged."""
    x = as_tensor(x)
    if rate <= 0.0:
        return x
    if rate >= 1.0:
        raise ValueError(f"dropout rate must be < 1, got {rate}")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return _result("dropout", x.data * mask, (x,), lambda g: (g * mask,))


# ────────────────────────────────────────────────────────────────────────────────
# Reductions
# ────────────────────────────────────────────────────────────────────────────────

def sum(x, axis: int | None = None) -> Tensor:  # noqa: A001
    """Sum over all entries (1, 1), over rows (axis=0 -> (1, c)) or columns (axis=1 -> (n, 1))."""
    x = as_tensor(x)
    if axis is None:
        value = np.array([[x.data.sum()]])
    else:
        value = x.data.sum(axis=axis, keepdims=True)

    def vjp(g):
        return (np.broadcast_to(g, x.shape).copy(),)

    return _result("sum", value, (x,), vjp)


def mean(x, axis: int | None = None) -> Tensor:
    x = as_tensor(x)
    count = x.data.size if axis is None else x.shape[axis]
    if count == 0:
        raise ShapeError(f"mean: empty reduction over shape {x.shape}")
    if axis is None:
        value = np.array([[x.data.mean()]])
    else:
        value = x.data.mean(axis=axis, keepdims=True)

    def vjp(g):
        return (np.broadcast_to(g / count, x.shape).copy(),)

    return _result("mean", value, (x,), vjp)


# ────────────────────────────────────────────────────────────────────────────────
# Indexing and graph aggregation
# ────────────────────────────────────────────────────────────────────────────────

def gather_rows(x, index: np.ndarray) -> Tensor:
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.int64)

    def vjp(g):
        out = np.zeros_like(x.data)
        np.add.at(out, index, g)
        return (out,)

    return _result("gather_rows", x.data[index], (x,), vjp)


def hstack(*tensors) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    rows = {t.shape[0] for t in tensors}
    if len(rows) != 1:
        raise ShapeError(f"hstack: row counts differ {[t.shape for t in tensors]}")
    widths = np.cumsum([0] + [t.shape[1] for t in tensors])

    def vjp(g):
        return tuple(g[:, widths[i]:widths[i + 1]] for i in range(len(tensors)))

    return _result("hstack", np.hstack([t.data for t in tensors]), tensors, vjp)


def _segment_ids(indptr: np.ndarray) -> np.ndarray:
    return np.repeat(np.arange(len(indptr) - 1), np.diff(indptr))


def edge_softmax(scores, indptr: np.ndarray) -> Tensor:
    """
    Softmax of per-edge scores (E, 1) within each row segment of a CSR layout.

    Every segment must be non-empty (attention layers add self-loops).
    """
    scores = as_tensor(scores)
    indptr = np.asarray(indptr, dtype=np.int64)
    if scores.shape != (int(indptr[-1]), 1):
        raise ShapeError(f"edge_softmax: scores {scores.shape} do not match {int(indptr[-1])} edges")
    if np.any(np.diff(indptr) == 0):
        raise ShapeError("edge_softmax: every segment needs at least one edge")

    starts = indptr[:-1]
    segments = _segment_ids(indptr)
    flat = scores.data[:, 0]
    shifted = np.exp(flat - np.maximum.reduceat(flat, starts)[segments])
    y = (shifted / np.add.reduceat(shifted, starts)[segments])[:, None]

    def vjp(g):
        weighted = np.add.reduceat((g * y)[:, 0], starts)[segments][:, None]
        return (y * (g - weighted),)

    return _result("edge_softmax", y, (scores,), vjp)


def edge_aggregate(weights, values, indptr: np.ndarray, indices: np.ndarray) -> Tensor:
    """
    Weighted neighbor sum out_i = sum_e weights_e * values[indices_e] over row i's segment.
    """
    weights, values = as_tensor(weights), as_tensor(values)
    indptr = np.asarray(indptr, dtype=np.int64)
    indices = np.asarray(indices, dtype=np.int64)
    n_rows = len(indptr) - 1
    if weights.shape != (len(indices), 1):
        raise ShapeError(f"edge_aggregate: weights {weights.shape} do not match {len(indices)} edges")

    matrix = sp.csr_matrix((weights.data[:, 0], indices, indptr), shape=(n_rows, values.shape[0]))
    segments = _segment_ids(indptr)

    def vjp(g):
        grad_weights = np.sum(g[segments] * values.data[indices], axis=1, keepdims=True)
        grad_values = np.asarray(matrix.T @ g)
        return grad_weights, grad_values

    return _result("edge_aggregate", np.asarray(matrix @ values.data), (weights, values), vjp)


def stack_mean(tensors: Sequence[Tensor]) -> Tensor:
    """Elementwise mean of same-shape tensors (used to average attention heads)."""
    total = tensors[0]
    for t in tensors[1:]:
        total = add(total, t)
    return mul(total, 1.0 / len(tensors))
