"""Central finite-difference verification of analytic gradients."""
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Optional, Tuple

import numpy as np

from .params import ParameterStore, evaluate_and_grad
from .tensor import Tensor, no_grad


@dataclass
class GradCheckReport:
    max_rel_error: float = 0.0
    worst: Optional[Tuple[str, Tuple[int, ...]]] = None
    checked: int = 0
    per_parameter: Dict[str, float] = field(default_factory=dict)

    def ok(self, tol: float = 1e-4) -> bool:
        return self.max_rel_error < tol


def relative_error(analytic: float, numeric: float, floor: float = 1e-6) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def numerical_gradient(loss_fn: Callable[[], Tensor], target: Tensor, h: float = 1e-5,
                       indices: Optional[Iterable[Tuple[int, ...]]] = None) -> np.ndarray:
    grad = np.zeros_like(target.data)
    for index in (indices if indices is not None else np.ndindex(target.shape)):
        original = target.data[index]
        with no_grad():
            target.data[index] = original + h
            plus = loss_fn().item()
            target.data[index] = original - h
            minus = loss_fn().item()
        target.data[index] = original
        grad[index] = (plus - minus) / (2.0 * h)
    return grad


def check_gradients(
    loss_fn: Callable[[], Tensor],
    store: ParameterStore,
    h: float = 1e-5,
    max_entries: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> GradCheckReport:
    """Compare backprop gradients with central differences over every parameter.

    ``max_entries`` samples that many coordinates per parameter instead of all.
    """
    _, analytic = evaluate_and_grad(loss_fn, store)
    report = GradCheckReport()
    rng = rng or np.random.default_rng(0)
    for name, tensor in store.items():
        all_indices = list(np.ndindex(tensor.shape))
        if max_entries is not None and len(all_indices) > max_entries:
            picks = rng.choice(len(all_indices), size=max_entries, replace=False)
            all_indices = [all_indices[i] for i in sorted(picks)]
        numeric = numerical_gradient(loss_fn, tensor, h, all_indices)
        worst = 0.0
        for index in all_indices:
            err = relative_error(analytic[name][index], numeric[index])
            report.checked += 1
            if err > worst:
                worst = err
            if err > report.max_rel_error:
                report.max_rel_error = err
                report.worst = (name, tuple(int(i) for i in index))
        report.per_parameter[name] = worst
    store.zero_grad()
    return report
