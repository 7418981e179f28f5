from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ..numcore import ops
from ..numcore.layers import pairwise_distance
from ..numcore.tensor import Tensor
from ..syfis.tokenizer import PAD_ID, pad_tokens
from ..utils.errors import InvalidInputError
from .model import TextEncoding, TranslatorModel, encode, generate_tokens

LOG_FLOOR = 1e-300


def loss_sig(token_dists: Tensor, target_tokens: Sequence[int]) -> Tensor:
    """Mean negative log-likelihood of the target tokens, PAD positions excluded.

    The target is padded or truncated to the number of rows of ``token_dists``.
    """
    length = token_dists.shape[0]
    target = np.asarray(pad_tokens(target_tokens, length), dtype=np.int64)
    positions = np.nonzero(target != PAD_ID)[0]
    if positions.size == 0:
        raise InvalidInputError("sub-instruction target has no non-PAD tokens")
    picked = ops.pick(token_dists, positions, target[positions])
    return -ops.sum_(ops.log(picked, floor=LOG_FLOOR)) / float(positions.size)


def triplet_hinge(d_ap: Union[Tensor, float], d_an: Union[Tensor, float], margin: float) -> Tensor:
    return ops.relu(ops.sub(d_ap, d_an) + margin)


def loss_dsl(
    model: TranslatorModel,
    anchor: Union[Sequence[int], TextEncoding],
    positive: Union[Sequence[int], TextEncoding],
    negative: Union[Sequence[int], TextEncoding],
    vision_states: Tensor,
    margin: float,
    literal: bool = False,
) -> Tensor:
    """Triplet hinge over pooled translator representations.

    ``literal`` compares the anchor's generated distribution, mapped back
    through the token embedding table, against the negative.
    """
    h_anchor, _ = encode(model, anchor, None, vision_states)
    h_positive, _ = encode(model, positive, None, vision_states)
    h_negative, _ = encode(model, negative, None, vision_states)
    return triplet_from_hidden(model, h_anchor, h_positive, h_negative, margin, literal)


def triplet_from_hidden(
    model: TranslatorModel, h_anchor: Tensor, h_positive: Tensor, h_negative: Tensor, margin: float, literal: bool = False
) -> Tensor:
    d_ap = pairwise_distance(h_anchor, h_positive)
    if literal:
        generated = generate_tokens(model, h_anchor) @ model.embedding
        d_an = pairwise_distance(generated, h_negative)
    else:
        d_an = pairwise_distance(h_anchor, h_negative)
    return triplet_hinge(d_ap, d_an, margin)


@dataclass
class LossBreakdown:
    total: float
    sig: float
    dsl: float

    def to_dict(self):
        return {"total": self.total, "sig": self.sig, "dsl": self.dsl}
