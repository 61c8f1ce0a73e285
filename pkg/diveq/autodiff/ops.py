r"""Differentiable primitives

Every primitive computes its forward value with numpy and registers a pullback
mapping the output cotangent to the cotangents of its inputs. Elementwise
binary primitives follow numpy broadcasting; their pullbacks sum the cotangent
back to each operand's shape.
"""

from typing import Optional, Tuple, Union

import numpy as np

from diveq.autodiff.tensor import (
    Tensor,
    as_tensor,
    freeze_value,
    is_replaying,
    record,
)
from diveq.utils.checks import ShapeError

EPS = 1e-12

Axis = Optional[Union[int, Tuple[int, ...]]]


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast(primitive: str, a: Tensor, b: Tensor) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as error:
        raise ShapeError(primitive, [a.shape, b.shape]) from error


def _guard(denominator: np.ndarray) -> np.ndarray:
    return np.where(denominator < 0, denominator - EPS, denominator + EPS)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("add", a, b)

    def pullback(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record("add", (a, b), a.data + b.data, pullback)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("sub", a, b)

    def pullback(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return record("sub", (a, b), a.data - b.data, pullback)


def neg(a) -> Tensor:
    a = as_tensor(a)
    return record("neg", (a,), -a.data, lambda g: (-g,))


def scale(a, factor: float) -> Tensor:
    a = as_tensor(a)
    factor = float(factor)
    return record("scale", (a,), a.data * factor, lambda g: (g * factor,))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("mul", a, b)

    def pullback(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return record("mul", (a, b), a.data * b.data, pullback)


def div(a, b) -> Tensor:
    """Elementwise quotient, the denominator magnitude is guarded by ``EPS``"""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast("div", a, b)
    denominator = _guard(b.data)

    def pullback(g):
        grad_a = g / denominator
        grad_b = -g * a.data / denominator**2
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return record("div", (a, b), a.data / denominator, pullback)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", [a.shape, b.shape])

    def pullback(g):
        return g @ b.data.T, a.data.T @ g

    return record("matmul", (a, b), a.data @ b.data, pullback)


def transpose(a) -> Tensor:
    a = as_tensor(a)
    if a.ndim != 2:
        raise ShapeError("transpose", [a.shape], "expected a matrix")
    return record("transpose", (a,), a.data.T.copy(), lambda g: (g.T,))


def reshape(a, shape: Tuple[int, ...]) -> Tensor:
    a = as_tensor(a)
    try:
        value = a.data.reshape(shape)
    except ValueError as error:
        raise ShapeError("reshape", [a.shape, tuple(shape)]) from error
    return record("reshape", (a,), value.copy(), lambda g: (g.reshape(a.shape),))


def square(a) -> Tensor:
    a = as_tensor(a)
    return record("square", (a,), a.data**2, lambda g: (2.0 * g * a.data,))


def exp(a) -> Tensor:
    a = as_tensor(a)
    value = np.exp(a.data)
    return record("exp", (a,), value, lambda g: (g * value,))


def log(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.log(a.data)
    return record("log", (a,), value, lambda g: (g / a.data,))


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = (a.data > 0).astype(np.float64)
    return record("relu", (a,), a.data * mask, lambda g: (g * mask,))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    value = np.tanh(a.data)
    return record("tanh", (a,), value, lambda g: (g * (1.0 - value**2),))


def _expand(g: np.ndarray, shape: Tuple[int, ...], axis: Axis, keepdims: bool):
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return np.broadcast_to(g, shape).copy()


def total(a, axis: Axis = None, keepdims: bool = False) -> Tensor:
    """Sum of the entries, over ``axis`` if given"""
    a = as_tensor(a)
    value = np.sum(a.data, axis=axis, keepdims=keepdims)
    return record(
        "sum",
        (a,),
        np.asarray(value),
        lambda g: (_expand(g, a.shape, axis, keepdims),),
    )


def mean(a, axis: Axis = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    value = np.mean(a.data, axis=axis, keepdims=keepdims)
    count = a.size / max(np.asarray(value).size, 1)
    return record(
        "mean",
        (a,),
        np.asarray(value),
        lambda g: (_expand(g, a.shape, axis, keepdims) / count,),
    )


def l2norm(a, axis: int = -1, keepdims: bool = False) -> Tensor:
    r"""Euclidean norm along ``axis``

    The pullback divides by $\|a\|_2 + \epsilon$, hence a zero vector receives
    a zero cotangent.
    """
    a = as_tensor(a)
    norm = np.sqrt(np.sum(a.data**2, axis=axis, keepdims=True))

    def pullback(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (g * a.data / (norm + EPS),)

    value = norm if keepdims else np.squeeze(norm, axis=axis)
    return record("l2norm", (a,), value, pullback)


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - np.max(a.data, axis=axis, keepdims=True)
    weights = np.exp(shifted)
    value = weights / np.sum(weights, axis=axis, keepdims=True)

    def pullback(g):
        inner = np.sum(g * value, axis=axis, keepdims=True)
        return (value * (g - inner),)

    return record("softmax", (a,), value, pullback)


def gather_rows(a, indices: np.ndarray) -> Tensor:
    """Rows ``a[indices]``, the pullback scatters-adds into the selected rows"""
    a = as_tensor(a)
    indices = np.asarray(indices, dtype=np.int64)
    if a.ndim != 2 or (indices.size and (indices.min() < 0 or indices.max() >= len(a))):
        raise ShapeError("gather_rows", [a.shape, indices.shape], "index out of range")

    def pullback(g):
        grad = np.zeros_like(a.data)
        np.add.at(grad, indices, g)
        return (grad,)

    return record("gather_rows", (a,), a.data[indices], pullback)


def stop_gradient(a) -> Tensor:
    """Identity in the forward pass, blocks every cotangent"""
    a = as_tensor(a)
    return Tensor(freeze_value(a.data), requires_grad=False, name="sg")


def straight_through(a, target) -> Tensor:
    r"""Computes $a + sg[target - a]$

    The forward value is ``target`` bit-for-bit and the cotangent reaches ``a``
    unchanged. When stopped values are being replayed the frozen offset is
    added to ``a`` instead.
    """
    a = as_tensor(a)
    target = target.data if isinstance(target, Tensor) else np.asarray(target, np.float64)
    if target.shape != a.shape:
        raise ShapeError("straight_through", [a.shape, target.shape])
    offset = freeze_value(target - a.data)
    value = a.data + offset if is_replaying() else target.copy()
    return record("straight_through", (a,), value, lambda g: (g,))
