"""Sub-instruction translator.

Text tokens and the ordered candidate features run through separate LSTMs. A
bilinear soft attention from every text position over the candidate states
gives the hidden sub-instruction representation; two MLP heads turn it into
per-position token distributions and a per-token split mask.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..numcore import ops
from ..numcore.layers import LSTM, MLP
from ..numcore.params import ParameterStore, glorot
from ..numcore.tensor import Tensor
from ..utils.errors import InvalidInputError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class TranslatorOutput:
    hidden: Tensor        # (L, d), rows in the convex hull of the vision states
    token_dists: Tensor   # (L, vocab), rows on the simplex
    split_mask: Tensor    # (L, 1), entries in (0, 1)
    attended: Optional[Tensor]  # (L, d) mask-scaled instruction embeddings
    attention: Tensor     # (L, candidates)


@dataclass
class TextEncoding:
    tokens: Sequence[int]
    states: Tensor  # (L, d) text LSTM states


class TranslatorModel:
    def __init__(
        self,
        vocab_size: int,
        feature_dim: int,
        dim: int = 32,
        mlp_hidden: int = 32,
        max_len: int = 64,
        seed: int = 0,
        prefix: str = "translator",
    ):
        self.vocab_size = vocab_size
        self.feature_dim = feature_dim
        self.dim = dim
        self.max_len = max_len
        self.store = ParameterStore()
        rng = np.random.default_rng([seed, 101])
        self.embedding = self.store.add(f"{prefix}.embedding", rng.normal(0.0, 0.1, size=(vocab_size, dim)))
        self.text_lstm = LSTM(self.store, f"{prefix}.text_lstm", dim, dim, rng)
        self.vision_lstm = LSTM(self.store, f"{prefix}.vision_lstm", feature_dim, dim, rng)
        self.attention_weight = self.store.add(f"{prefix}.W", glorot(rng, dim, dim))
        self.generation_head = MLP(self.store, f"{prefix}.generation", [dim, mlp_hidden, vocab_size], rng)
        self.split_head = MLP(self.store, f"{prefix}.split", [dim, mlp_hidden, 1], rng)

    @classmethod
    def from_config(cls, config, vocab_size: int) -> "TranslatorModel":
        m = config.model
        return cls(
            vocab_size=vocab_size,
            feature_dim=config.feature_dim,
            dim=m.embed_dim,
            mlp_hidden=m.mlp_hidden,
            max_len=m.max_text_len,
            seed=config.seeds.seed,
        )

    def encode_text(self, tokens: Sequence[int]) -> TextEncoding:
        if len(tokens) == 0:
            raise InvalidInputError("translator input text is empty")
        if len(tokens) > self.max_len:
            raise InvalidInputError(f"translator input has {len(tokens)} tokens, limit {self.max_len}")
        return TextEncoding(list(tokens), self.text_lstm.run(ops.embedding(self.embedding, tokens)))

    def encode_vision(self, features: np.ndarray) -> Tensor:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] == 0 or features.shape[1] != self.feature_dim:
            raise ShapeError("translator candidates", features.shape, (None, self.feature_dim))
        return self.vision_lstm.run(Tensor(features))

    def embed_tokens(self, tokens: Sequence[int]) -> Tensor:
        return ops.embedding(self.embedding, tokens)


def soft_attention(text_states: Tensor, weight: Tensor, vision_states: Tensor):
    """(attended, attention): attention = softmax(X̃ W Ṽᵀ) row-wise, attended = attention Ṽ"""
    attention = ops.softmax(text_states @ weight @ vision_states.T)
    return attention @ vision_states, attention


def encode(model: TranslatorModel, tokens, candidate_features, vision_states: Optional[Tensor] = None):
    """X̃′ for ``tokens`` over the candidates; returns (hidden, attention)"""
    text = tokens if isinstance(tokens, TextEncoding) else model.encode_text(tokens)
    vision = vision_states if vision_states is not None else model.encode_vision(candidate_features)
    return soft_attention(text.states, model.attention_weight, vision)


def generate_tokens(model: TranslatorModel, hidden: Tensor) -> Tensor:
    return ops.softmax(model.generation_head(hidden))


def split_mask(model: TranslatorModel, hidden: Tensor) -> Tensor:
    return ops.sigmoid(model.split_head(hidden))


def attended_instruction(mask: Tensor, embeddings: Tensor) -> Tensor:
    """Scale row t of the instruction embeddings by mask[t]"""
    if mask.ndim != 2 or mask.shape[1] != 1 or embeddings.ndim != 2 or mask.shape[0] != embeddings.shape[0]:
        raise ShapeError("attended_instruction", mask.shape, embeddings.shape)
    return mask * embeddings


def translate(
    model: TranslatorModel,
    tokens,
    candidate_features=None,
    instruction_embeddings: Optional[Tensor] = None,
    vision_states: Optional[Tensor] = None,
) -> TranslatorOutput:
    hidden, attention = encode(model, tokens, candidate_features, vision_states)
    mask = split_mask(model, hidden)
    attended = attended_instruction(mask, instruction_embeddings) if instruction_embeddings is not None else None
    return TranslatorOutput(hidden, generate_tokens(model, hidden), mask, attended, attention)
