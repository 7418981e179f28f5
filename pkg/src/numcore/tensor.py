"""Dense float64 tensors with reverse-mode differentiation.

Each op returns a new ``Tensor`` holding its inputs and a closure that pushes
the output gradient back to them. ``backward`` walks the graph in reverse
topological order. Every op output is checked for NaN/Inf.
"""
import threading
from contextlib import contextmanager
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from ..utils.errors import NumericError, ShapeError

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextmanager
def no_grad():
    """Build no graph on this thread (inference over frozen parameters)"""
    previous = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "op", "name", "_parents", "_backward")
    # ndarray <op> Tensor defers to the Tensor's reflected operator
    __array_ufunc__ = None

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        parents: Tuple["Tensor", ...] = (),
        op: str = "",
        name: Optional[str] = None,
    ):
        array = np.array(data, dtype=np.float64) if not isinstance(data, np.ndarray) else data.astype(np.float64, copy=False)
        if not np.all(np.isfinite(array)):
            raise NumericError(f"{op or name or 'tensor'}: non-finite value")
        self.data = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.op = op
        self.name = name
        self._parents = parents
        self._backward: Optional[Callable[[np.ndarray], None]] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def __repr__(self) -> str:
        label = self.name or self.op or "tensor"
        return f"Tensor({label}, shape={self.shape})"

    def _accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self) -> None:
        if self.data.size != 1:
            raise ShapeError("backward", self.shape)
        order: List[Tensor] = []
        visited = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited and parent.requires_grad:
                    stack.append((parent, False))
        # interior gradients are per-call; leaves accumulate
        for node in order:
            if node._parents:
                node.grad = None
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar

    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __neg__(self): return mul(self, -1.0)
    def __matmul__(self, other): return matmul(self, other)
    def __getitem__(self, index): return slice_(self, index)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise TypeError("division by a tensor is not supported")
        return mul(self, 1.0 / float(other))

    @property
    def T(self) -> "Tensor":
        return transpose(self)


ArrayLike = Union[Tensor, np.ndarray, float, int, Sequence]


def as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(data: np.ndarray, parents: Iterable[Tensor], op: str, backward: Callable[[np.ndarray], None]) -> Tensor:
    parents = tuple(parents)
    track = grad_enabled() and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=track, parents=parents if track else (), op=op)
    if track:
        out._backward = backward
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` after numpy broadcasting"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_check(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, a.shape, b.shape) from None


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_check("add", a, b)

    def backward(g):
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(g, b.shape))
    return _result(a.data + b.data, (a, b), "add", backward)


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_check("sub", a, b)

    def backward(g):
        a._accumulate(_unbroadcast(g, a.shape))
        b._accumulate(_unbroadcast(-g, b.shape))
    return _result(a.data - b.data, (a, b), "sub", backward)


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_check("mul", a, b)

    def backward(g):
        a._accumulate(_unbroadcast(g * b.data, a.shape))
        b._accumulate(_unbroadcast(g * a.data, b.shape))
    return _result(a.data * b.data, (a, b), "mul", backward)


def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)

    def backward(g):
        a._accumulate(g @ b.data.T)
        b._accumulate(a.data.T @ g)
    return _result(a.data @ b.data, (a, b), "matmul", backward)


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise ShapeError("transpose", a.shape)

    def backward(g):
        a._accumulate(g.T)
    return _result(a.data.T.copy(), (a,), "transpose", backward)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        data = a.data.reshape(shape)
    except ValueError:
        raise ShapeError("reshape", a.shape, tuple(shape)) from None

    def backward(g):
        a._accumulate(g.reshape(a.shape))
    return _result(data, (a,), "reshape", backward)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat", ())
    first = tensors[0]
    for t in tensors[1:]:
        if t.ndim != first.ndim or any(
            s1 != s2 for i, (s1, s2) in enumerate(zip(first.shape, t.shape)) if i != axis % first.ndim
        ):
            raise ShapeError("concat", first.shape, t.shape)
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        for t, start, stop in zip(tensors, bounds[:-1], bounds[1:]):
            index = [slice(None)] * g.ndim
            index[axis] = slice(int(start), int(stop))
            t._accumulate(g[tuple(index)])
    return _result(np.concatenate([t.data for t in tensors], axis=axis), tensors, "concat", backward)


def slice_(a: Tensor, index) -> Tensor:
    try:
        data = a.data[index]
    except IndexError:
        raise ShapeError("slice", a.shape) from None

    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, index, g)
        a._accumulate(full)
    return _result(np.array(data, dtype=np.float64), (a,), "slice", backward)


def softmax(a: Tensor) -> Tensor:
    """Row-wise (last axis), max-subtracted"""
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    s = exp / exp.sum(axis=-1, keepdims=True)

    def backward(g):
        a._accumulate(s * (g - (g * s).sum(axis=-1, keepdims=True)))
    return _result(s, (a,), "softmax", backward)


def sigmoid(a: Tensor) -> Tensor:
    s = expit(a.data)

    def backward(g):
        a._accumulate(g * s * (1.0 - s))
    return _result(s, (a,), "sigmoid", backward)


def tanh(a: Tensor) -> Tensor:
    t = np.tanh(a.data)

    def backward(g):
        a._accumulate(g * (1.0 - t * t))
    return _result(t, (a,), "tanh", backward)


def relu(a: Tensor) -> Tensor:
    """max(a, 0); subgradient 0 at 0"""
    positive = a.data > 0

    def backward(g):
        a._accumulate(g * positive)
    return _result(np.where(positive, a.data, 0.0), (a,), "relu", backward)


def log(a: Tensor, floor: float = 0.0) -> Tensor:
    """Natural log of max(a, floor); no gradient below the floor"""
    clipped = np.maximum(a.data, floor) if floor > 0 else a.data
    if np.any(clipped <= 0):
        raise NumericError("log: non-positive input")
    live = a.data >= floor

    def backward(g):
        a._accumulate(np.where(live, g / clipped, 0.0))
    return _result(np.log(clipped), (a,), "log", backward)


def sqrt(a: Tensor) -> Tensor:
    """Square root with zero gradient at 0"""
    if np.any(a.data < 0):
        raise NumericError("sqrt: negative input")
    r = np.sqrt(a.data)

    def backward(g):
        safe = np.where(r > 0, r, 1.0)
        a._accumulate(np.where(r > 0, g * 0.5 / safe, 0.0))
    return _result(r, (a,), "sqrt", backward)


def embedding(table: Tensor, ids: Sequence[int]) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2 or ids.ndim != 1 or (ids.size and (ids.min() < 0 or ids.max() >= table.shape[0])):
        raise ShapeError("embedding", table.shape, ids.shape)

    def backward(g):
        full = np.zeros_like(table.data)
        np.add.at(full, ids, g)
        table._accumulate(full)
    return _result(table.data[ids], (table,), "embedding", backward)


def sum_(a: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accumulate(np.broadcast_to(g, a.shape).copy())
    return _result(np.array(a.data.sum(axis=axis, keepdims=keepdims)), (a,), "sum", backward)


def mean(a: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    count = a.data.size if axis is None else a.shape[axis]

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accumulate(np.broadcast_to(g / count, a.shape).copy())
    return _result(np.array(a.data.mean(axis=axis, keepdims=keepdims)), (a,), "mean", backward)


def sqdist(a: ArrayLike, b: ArrayLike) -> Tensor:
    """Squared Euclidean distance summed over all entries"""
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError("sqdist", a.shape, b.shape)
    diff = a.data - b.data

    def backward(g):
        a._accumulate(2.0 * g * diff)
        b._accumulate(-2.0 * g * diff)
    return _result(np.array((diff * diff).sum()), (a, b), "sqdist", backward)


def pick(a: Tensor, rows: Sequence[int], cols: Sequence[int]) -> Tensor:
    """Gather a[rows[i], cols[i]] into a vector"""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if a.ndim != 2 or rows.shape != cols.shape:
        raise ShapeError("pick", a.shape, rows.shape)

    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, (rows, cols), g)
        a._accumulate(full)
    return _result(a.data[rows, cols], (a,), "pick", backward)
