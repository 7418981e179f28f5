import logging
from typing import Optional, Sequence

import numpy as np

from ..numcore import ops
from ..numcore.tensor import Tensor
from ..utils.errors import InvalidInputError, ShapeError
from .rollout import RolloutTrace, discounted_returns

logger = logging.getLogger(__name__)

BCE_CLAMP = 1e-12


def _stack(values: Sequence[Tensor]) -> Tensor:
    return ops.concat([ops.reshape(v, (1,)) for v in values])


def loss_nav(
    sampled: Sequence[RolloutTrace],
    teacher: Sequence[RolloutTrace],
    lambda_il: float,
    discount: float = 0.9,
) -> Tensor:
    """Policy-gradient term on sampled episodes plus λ-weighted imitation on teacher-forced ones.

    Both terms sum over steps and average over episodes; advantages subtract
    the mean return of the whole sampled batch.
    """
    if not sampled and not teacher:
        raise InvalidInputError("navigation loss needs at least one episode")
    total: Optional[Tensor] = None

    if sampled:
        returns = [discounted_returns(trace.episode.rewards, discount) for trace in sampled]
        flat = [g for episode_returns in returns for g in episode_returns]
        baseline = float(np.mean(flat)) if flat else 0.0
        terms = []
        for trace, episode_returns in zip(sampled, returns):
            if not trace.action_log_probs:
                continue
            advantages = np.array([g - baseline for g in episode_returns])
            terms.append(-ops.sum_(_stack(trace.action_log_probs) * advantages))
        if terms:
            total = ops.mean(_stack(terms))

    if teacher:
        terms = [-ops.sum_(_stack(trace.action_log_probs)) for trace in teacher if trace.action_log_probs]
        if terms:
            il = ops.mean(_stack(terms))
            total = lambda_il * il if total is None else total + lambda_il * il

    if total is None:
        raise InvalidInputError("navigation loss batch has no steps")
    return total


def loss_ss(predicted: Sequence[Tensor], truth: Sequence[Sequence[int]], literal: bool = False) -> Tensor:
    """Binary cross-entropy between predicted split masks and span masks, averaged over steps.

    ``literal`` keeps only the positive-class term.
    """
    if not predicted or len(predicted) != len(truth):
        raise InvalidInputError(f"split loss got {len(predicted)} predictions for {len(truth)} targets")
    clamped = False
    per_step = []
    for mask, target in zip(predicted, truth):
        y = np.asarray(target, dtype=np.float64).reshape(-1, 1)
        if mask.shape != y.shape:
            raise ShapeError("loss_ss", mask.shape, y.shape)
        complement = 1.0 - mask
        clamped = clamped or bool(np.any(mask.data < BCE_CLAMP) or np.any(complement.data < BCE_CLAMP))
        positive = y * ops.log(mask, floor=BCE_CLAMP)
        if literal:
            inner = positive
        else:
            inner = positive + (1.0 - y) * ops.log(complement, floor=BCE_CLAMP)
        per_step.append(-ops.mean(inner))
    if clamped:
        logger.warning("split-mask probabilities clamped to [%g, 1 - %g]", BCE_CLAMP, BCE_CLAMP)
    return ops.mean(_stack(per_step))
