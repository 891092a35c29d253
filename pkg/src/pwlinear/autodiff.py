"""Float64 tensors with reverse-mode automatic differentiation.

Graphs are built define-by-run: every operation stores its differentiable
parents and a closure that routes the output gradient back to them.
:func:`backward` seeds a scalar root and replays each closure exactly once,
in reverse topological order.

Broadcasting is deliberately restricted to scalar-with-tensor. Anything
shape-changing (bias rows, tiling a weight vector across a batch, column
slices) goes through an explicit operation with an explicit gradient.
"""

import numpy as np

from .errors import ConfigError, ShapeError

# Self-normalizing network constants (Klambauer et al. 2017).
SELU_ALPHA = 1.6732632423543772
SELU_LAMBDA = 1.0507009873554805

ACTIVATION_KINDS = ("sigmoid", "tanh", "relu", "selu")


def _finite(arr) -> bool:
    return bool(np.isfinite(arr).all())


class Tensor:
    """Dense float64 array plus gradient bookkeeping.

    Tensors constructed directly from data are graph leaves; pass
    ``requires_grad=True`` to mark one as a trainable parameter. Tensors
    produced by operations carry the parent links that ``backward`` walks.
    A leaf with no graph attached is immutable by convention and safe to
    share across threads.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # Arithmetic operators. The right-hand side may be a Python scalar.
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def transpose(self):
        return transpose(self)

    def log(self):
        return log(self)

    def sqrt(self):
        return sqrt(self)

    def abs(self):
        return absolute(self)

    def sum(self):
        return total(self)

    def mean(self):
        return mean(self)

    def sum_rows(self):
        return sum_rows(self)

    def backward(self):
        backward(self)


def _lift(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim != 0:
        raise ShapeError(
            "only scalars are lifted implicitly; wrap array operands in Tensor"
        )
    return Tensor(arr)


def _op(data, parents) -> Tensor:
    assert _finite(data), "operation produced non-finite values"
    out = Tensor(data)
    tracked = tuple(p for p in parents if p.requires_grad)
    if tracked:
        out.requires_grad = True
        out._parents = tracked
    return out


def _accum(t: Tensor, g) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _fit_shape(g, shape):
    """Collapse a gradient onto a scalar operand when shapes differ."""
    if g.shape == shape:
        return g
    return np.asarray(g.sum())


def add(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    if a.data.shape != b.data.shape and a.data.ndim != 0 and b.data.ndim != 0:
        raise ShapeError(f"add shape mismatch: {a.data.shape} vs {b.data.shape}")
    out = _op(a.data + b.data, (a, b))
    if out.requires_grad:
        def bw():
            g = out.grad
            _accum(a, _fit_shape(g, a.data.shape))
            _accum(b, _fit_shape(g, b.data.shape))
        out._backward = bw
    return out


def sub(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)
    if a.data.shape != b.data.shape and a.data.ndim != 0 and b.data.ndim != 0:
        raise ShapeError(f"sub shape mismatch: {a.data.shape} vs {b.data.shape}")
    out = _op(a.data - b.data, (a, b))
    if out.requires_grad:
        def bw():
            g = out.grad
            _accum(a, _fit_shape(g, a.data.shape))
            _accum(b, _fit_shape(-g, b.data.shape))
        out._backward = bw
    return out


def neg(a) -> Tensor:
    a = _lift(a)
    out = _op(-a.data, (a,))
    if out.requires_grad:
        def bw():
            _accum(a, -out.grad)
        out._backward = bw
    return out


def mul(a, b) -> Tensor:
    """Element-wise product; one operand may be a scalar."""
    a, b = _lift(a), _lift(b)
    if a.data.shape != b.data.shape and a.data.ndim != 0 and b.data.ndim != 0:
        raise ShapeError(f"mul shape mismatch: {a.data.shape} vs {b.data.shape}")
    out = _op(a.data * b.data, (a, b))
    if out.requires_grad:
        def bw():
            g = out.grad
            _accum(a, _fit_shape(g * b.data, a.data.shape))
            _accum(b, _fit_shape(g * a.data, b.data.shape))
        out._backward = bw
    return out


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    """Element-wise product of two tensors of identical shape."""
    if a.data.shape != b.data.shape:
        raise ShapeError(
            f"hadamard shape mismatch: {a.data.shape} vs {b.data.shape}"
        )
    return mul(a, b)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(
            f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}"
        )
    out = _op(a.data @ b.data, (a, b))
    if out.requires_grad:
        def bw():
            g = out.grad
            _accum(a, g @ b.data.T)
            _accum(b, a.data.T @ g)
        out._backward = bw
    return out


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ShapeError(f"transpose expects a matrix, got shape {a.data.shape}")
    out = _op(a.data.T.copy(), (a,))
    if out.requires_grad:
        def bw():
            _accum(a, out.grad.T)
        out._backward = bw
    return out


def activation(x: Tensor, kind: str) -> Tensor:
    """Element-wise nonlinearity: one of sigmoid, tanh, relu, selu.

    The sigmoid is evaluated through exp(-|x|) only, so it neither
    overflows nor produces NaN at extreme inputs.
    """
    if kind not in ACTIVATION_KINDS:
        raise ConfigError(f"unknown activation kind: {kind!r}")
    xd = x.data
    if kind == "sigmoid":
        e = np.exp(-np.abs(xd))
        y = np.where(xd >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    elif kind == "tanh":
        y = np.tanh(xd)
    elif kind == "relu":
        y = np.maximum(xd, 0.0)
    else:  # selu; expm1 argument capped at 0 so the unused branch cannot overflow
        y = SELU_LAMBDA * np.where(
            xd > 0, xd, SELU_ALPHA * np.expm1(np.minimum(xd, 0.0))
        )
    out = _op(y, (x,))
    if out.requires_grad:
        def bw():
            g = out.grad
            if kind == "sigmoid":
                d = out.data * (1.0 - out.data)
            elif kind == "tanh":
                d = 1.0 - out.data * out.data
            elif kind == "relu":
                d = (xd > 0).astype(np.float64)
            else:
                d = np.where(
                    xd > 0,
                    SELU_LAMBDA,
                    SELU_LAMBDA * SELU_ALPHA * np.exp(np.minimum(xd, 0.0)),
                )
            _accum(x, g * d)
        out._backward = bw
    return out


def sigmoid(x: Tensor) -> Tensor:
    return activation(x, "sigmoid")


def clamp(x: Tensor, lo: float, hi: float) -> Tensor:
    """Element-wise saturation to [lo, hi].

    The subgradient is 1 on the closed interval, including both
    breakpoints, and 0 outside it.
    """
    if lo > hi:
        raise ConfigError(f"clamp bounds out of order: min={lo} > max={hi}")
    xd = x.data
    out = _op(np.clip(xd, lo, hi), (x,))
    if out.requires_grad:
        def bw():
            inside = (xd >= lo) & (xd <= hi)
            _accum(x, out.grad * inside)
        out._backward = bw
    return out


def log(x: Tensor) -> Tensor:
    out = _op(np.log(x.data), (x,))
    if out.requires_grad:
        def bw():
            _accum(x, out.grad / x.data)
        out._backward = bw
    return out


def sqrt(x: Tensor) -> Tensor:
    out = _op(np.sqrt(x.data), (x,))
    if out.requires_grad:
        def bw():
            # subgradient 0 at the origin, where the derivative diverges
            y = out.data
            d = np.where(y > 0.0, 0.5 / np.where(y > 0.0, y, 1.0), 0.0)
            _accum(x, out.grad * d)
        out._backward = bw
    return out


def absolute(x: Tensor) -> Tensor:
    out = _op(np.abs(x.data), (x,))
    if out.requires_grad:
        def bw():
            _accum(x, out.grad * np.sign(x.data))
        out._backward = bw
    return out


def total(x: Tensor) -> Tensor:
    """Sum of all elements, as a scalar tensor."""
    out = _op(np.asarray(x.data.sum()), (x,))
    if out.requires_grad:
        def bw():
            _accum(x, np.full_like(x.data, float(out.grad)))
        out._backward = bw
    return out


def mean(x: Tensor) -> Tensor:
    out = _op(np.asarray(x.data.mean()), (x,))
    if out.requires_grad:
        def bw():
            _accum(x, np.full_like(x.data, float(out.grad) / x.data.size))
        out._backward = bw
    return out


def sum_rows(x: Tensor) -> Tensor:
    """Per-row totals of a matrix: (N, D) -> (N,)."""
    if x.data.ndim != 2:
        raise ShapeError(f"sum_rows expects a matrix, got shape {x.data.shape}")
    out = _op(x.data.sum(axis=1), (x,))
    if out.requires_grad:
        def bw():
            _accum(x, np.broadcast_to(out.grad[:, None], x.data.shape))
        out._backward = bw
    return out


def broadcast_rows(v: Tensor, n: int) -> Tensor:
    """Tile a vector into n identical rows: (D,) -> (n, D)."""
    if v.data.ndim != 1:
        raise ShapeError(f"broadcast_rows expects a vector, got shape {v.data.shape}")
    out = _op(np.broadcast_to(v.data, (n, v.data.shape[0])).copy(), (v,))
    if out.requires_grad:
        def bw():
            _accum(v, out.grad.sum(axis=0))
        out._backward = bw
    return out


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    """Contiguous column slice of a matrix, with scatter gradient."""
    if x.data.ndim != 2:
        raise ShapeError(f"slice_cols expects a matrix, got shape {x.data.shape}")
    if not (0 <= start <= stop <= x.data.shape[1]):
        raise ShapeError(
            f"slice_cols range [{start}, {stop}) outside {x.data.shape[1]} columns"
        )
    out = _op(x.data[:, start:stop].copy(), (x,))
    if out.requires_grad:
        def bw():
            buf = np.zeros_like(x.data)
            buf[:, start:stop] = out.grad
            _accum(x, buf)
        out._backward = bw
    return out


def _topo_order(root: Tensor):
    """Parents-first ordering of the differentiable subgraph under root."""
    order = []
    visited = {id(root)}
    stack = [(root, iter(root._parents))]
    while stack:
        node, parents = stack[-1]
        for p in parents:
            if id(p) not in visited:
                visited.add(id(p))
                stack.append((p, iter(p._parents)))
                break
        else:
            order.append(node)
            stack.pop()
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into .grad over the whole graph.

    The loss must be scalar. Each node's closure runs exactly once, in
    reverse topological order. Gradients accumulate across calls; zero
    them (optimizers do) before reusing parameters in a new graph.
    """
    if loss.data.ndim != 0:
        raise ShapeError(f"backward requires a scalar loss, got shape {loss.data.shape}")
    if not loss.requires_grad:
        return
    loss.grad = np.ones((), dtype=np.float64)
    for node in reversed(_topo_order(loss)):
        if node._backward is not None:
            node._backward()
