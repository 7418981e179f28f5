from typing import Sequence, Tuple

import numpy as np

from ..utils.errors import ShapeError
from . import tensor as T
from .params import ParameterStore, glorot
from .tensor import Tensor


class Linear:
    def __init__(self, store: ParameterStore, name: str, in_dim: int, out_dim: int, rng: np.random.Generator, bias: bool = True):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = store.add(f"{name}.W", glorot(rng, in_dim, out_dim))
        self.bias = store.add(f"{name}.b", np.zeros(out_dim)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError("linear", x.shape, self.weight.shape)
        out = x @ self.weight
        return out + self.bias if self.bias is not None else out


class MLP:
    """Linear layers with tanh between them; the last layer is linear"""

    def __init__(self, store: ParameterStore, name: str, dims: Sequence[int], rng: np.random.Generator):
        self.layers = [
            Linear(store, f"{name}.{i}", d_in, d_out, rng)
            for i, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:]))
        ]

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = T.tanh(x)
        return x


class LSTM:
    """Single-layer LSTM; gate columns ordered input, forget, output, candidate"""

    def __init__(self, store: ParameterStore, name: str, input_dim: int, hidden_dim: int, rng: np.random.Generator):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.weight = store.add(f"{name}.W", glorot(rng, input_dim + hidden_dim, 4 * hidden_dim))
        bias = np.zeros(4 * hidden_dim)
        bias[hidden_dim:2 * hidden_dim] = 1.0
        self.bias = store.add(f"{name}.b", bias)

    def initial_state(self) -> Tuple[Tensor, Tensor]:
        zeros = np.zeros((1, self.hidden_dim))
        return Tensor(zeros), Tensor(zeros.copy())

    def step(self, x: Tensor, state: Tuple[Tensor, Tensor]) -> Tuple[Tensor, Tensor]:
        return lstm_step(self, x, state)

    def run(self, xs: Tensor) -> Tensor:
        """Hidden state for every row of ``xs`` (L, input_dim) -> (L, hidden_dim)"""
        if xs.ndim != 2 or xs.shape[1] != self.input_dim or xs.shape[0] == 0:
            raise ShapeError("lstm", xs.shape, (None, self.input_dim))
        state = self.initial_state()
        outputs = []
        for t in range(xs.shape[0]):
            state = lstm_step(self, xs[t:t + 1], state)
            outputs.append(state[0])
        return T.concat(outputs, axis=0)


def lstm_step(params: LSTM, x: Tensor, state: Tuple[Tensor, Tensor]) -> Tuple[Tensor, Tensor]:
    h, c = state
    n = params.hidden_dim
    if x.shape != (1, params.input_dim):
        raise ShapeError("lstm_step input", x.shape, (1, params.input_dim))
    if h.shape != (1, n) or c.shape != (1, n):
        raise ShapeError("lstm_step state", h.shape, (1, n))
    gates = T.concat([x, h], axis=1) @ params.weight + params.bias
    i = T.sigmoid(gates[:, 0:n])
    f = T.sigmoid(gates[:, n:2 * n])
    o = T.sigmoid(gates[:, 2 * n:3 * n])
    g = T.tanh(gates[:, 3 * n:4 * n])
    c_next = f * c + i * g
    h_next = o * T.tanh(c_next)
    return h_next, c_next


def mean_pool(x: Tensor) -> Tensor:
    return T.mean(x, axis=0, keepdims=True)


def pairwise_distance(a: Tensor, b: Tensor) -> Tensor:
    """Euclidean distance between the token-mean-pooled rows of ``a`` and ``b``.

    Sequence lengths may differ; the feature dimension must match.
    """
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1] or 0 in (a.shape[0], b.shape[0]):
        raise ShapeError("pairwise_distance", a.shape, b.shape)
    return T.sqrt(T.sqdist(mean_pool(a), mean_pool(b)))
