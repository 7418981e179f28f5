import logging
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from ..utils.errors import InvalidParameterError, NotFoundError, ShapeError
from .tensor import Tensor

logger = logging.getLogger(__name__)


class ParameterStore:
    """Named trainable tensors plus AdamW moment state.

    A store is owned by one training thread. ``union`` builds a store over the
    same tensors with its own optimizer state, so one update can cover several
    models.
    """

    def __init__(self):
        self._params: Dict[str, Tensor] = {}
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}
        self.step = 0

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise InvalidParameterError(f"parameter '{name}' registered twice")
        tensor = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self._adopt(name, tensor)
        return tensor

    def _adopt(self, name: str, tensor: Tensor) -> None:
        self._params[name] = tensor
        self.m[name] = np.zeros_like(tensor.data)
        self.v[name] = np.zeros_like(tensor.data)

    @classmethod
    def union(cls, *stores: "ParameterStore") -> "ParameterStore":
        joint = cls()
        for store in stores:
            for name, tensor in store.items():
                if name in joint:
                    raise InvalidParameterError(f"parameter '{name}' present in more than one store")
                joint._adopt(name, tensor)
        return joint

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self._params[name]
        except KeyError:
            raise NotFoundError(f"no parameter named '{name}'") from None

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def names(self) -> List[str]:
        return list(self._params)

    def items(self) -> List[Tuple[str, Tensor]]:
        return list(self._params.items())

    @property
    def num_parameters(self) -> int:
        return int(sum(t.data.size for t in self._params.values()))

    def zero_grad(self) -> None:
        for tensor in self._params.values():
            tensor.grad = None

    def gradients(self) -> Dict[str, np.ndarray]:
        return {
            name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
            for name, t in self._params.items()
        }

    def values(self) -> Dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self._params.items()}

    def load_values(self, arrays: Dict[str, np.ndarray]) -> None:
        """Replace every value; all shapes are checked before anything is written"""
        missing = [name for name in self._params if name not in arrays]
        if missing:
            raise NotFoundError(f"parameter '{missing[0]}' missing from loaded values")
        for name, tensor in self._params.items():
            if tuple(arrays[name].shape) != tensor.shape:
                raise ShapeError(f"parameter '{name}'", arrays[name].shape, tensor.shape)
        for name, tensor in self._params.items():
            tensor.data[...] = arrays[name]

    def copy_from(self, other: "ParameterStore") -> None:
        self.load_values(other.values())


def evaluate_and_grad(loss_fn: Callable[[], Tensor], store: ParameterStore) -> Tuple[float, Dict[str, np.ndarray]]:
    """Evaluate a scalar expression over ``store`` and populate its gradients"""
    store.zero_grad()
    loss = loss_fn()
    if loss.data.size != 1:
        raise ShapeError("evaluate_and_grad", loss.shape)
    loss.backward()
    return loss.item(), store.gradients()


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape: Optional[Tuple[int, ...]] = None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))
