"""Navigation policy: one cross-attention layer over the instruction plus an action scorer.

The recurrent state and the candidate embeddings attend to the (optionally
translator-augmented) instruction. The updated state scores the updated
candidates; the next state mixes the updated state with its attended context.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..models.world import CandidateSet
from ..numcore import ops
from ..numcore.layers import Linear, mean_pool
from ..numcore.params import ParameterStore
from ..numcore.tensor import Tensor
from ..translator.model import TranslatorOutput
from ..utils.errors import ShapeError

ORIENTATION_DIM = 4


@dataclass
class PolicyOutput:
    state: Tensor          # S_{t+1}, (1, d)
    logits: Tensor         # (1, candidates)
    probabilities: Tensor  # (1, candidates)


class AgentModel:
    def __init__(self, vocab_size: int, feature_dim: int, dim: int = 32, seed: int = 0, prefix: str = "agent"):
        self.vocab_size = vocab_size
        self.feature_dim = feature_dim
        self.dim = dim
        self.store = ParameterStore()
        rng = np.random.default_rng([seed, 404])
        self.embedding = self.store.add(f"{prefix}.embedding", rng.normal(0.0, 0.1, size=(vocab_size, dim)))
        self.candidate_proj = Linear(self.store, f"{prefix}.candidate", feature_dim + ORIENTATION_DIM, dim, rng)
        self.stop_vector = self.store.add(f"{prefix}.stop", rng.normal(0.0, 0.1, size=(1, dim)))
        self.init = Linear(self.store, f"{prefix}.init", dim, dim, rng)
        self.query = Linear(self.store, f"{prefix}.query", dim, dim, rng, bias=False)
        self.key = Linear(self.store, f"{prefix}.key", dim, dim, rng, bias=False)
        self.value = Linear(self.store, f"{prefix}.value", dim, dim, rng, bias=False)
        self.output = Linear(self.store, f"{prefix}.output", dim, dim, rng)
        self.action = Linear(self.store, f"{prefix}.action", dim, dim, rng, bias=False)
        self.update = Linear(self.store, f"{prefix}.update", 2 * dim, dim, rng)

    @classmethod
    def from_config(cls, config, vocab_size: int) -> "AgentModel":
        return cls(vocab_size, config.feature_dim, config.model.hidden_dim, seed=config.seeds.seed)

    def embed_text(self, tokens) -> Tensor:
        return ops.embedding(self.embedding, tokens)

    def initial_state(self, text: Tensor) -> Tensor:
        return ops.tanh(self.init(mean_pool(text)))

    def embed_candidates(self, candidates: CandidateSet) -> Tensor:
        inputs = np.concatenate([candidates.feature_matrix(), candidates.orientation_matrix()], axis=1)
        if inputs.shape[1] != self.feature_dim + ORIENTATION_DIM:
            raise ShapeError("agent candidates", inputs.shape, (len(candidates), self.feature_dim + ORIENTATION_DIM))
        stop_rows = np.zeros((len(candidates), 1))
        stop_rows[candidates.stop_index, 0] = 1.0
        return self.candidate_proj(Tensor(inputs)) + Tensor(stop_rows) * self.stop_vector


def augment_text(text: Tensor, output: Optional[TranslatorOutput]) -> Tensor:
    """[X; X̃′; X″] along the sequence axis, or X itself without a translator"""
    if output is None:
        return text
    for part in (output.hidden, output.attended):
        if part is None or part.shape != text.shape:
            raise ShapeError("augment_text", text.shape, part.shape if part is not None else ())
    return ops.concat([text, output.hidden, output.attended], axis=0)


def policy_step(agent: AgentModel, text: Tensor, state: Tensor, candidates: CandidateSet) -> PolicyOutput:
    vision = agent.embed_candidates(candidates)
    joint = ops.concat([state, vision], axis=0)  # (1 + n, d)
    scores = agent.query(joint) @ agent.key(text).T
    context = ops.softmax(scores / np.sqrt(agent.dim)) @ agent.value(text)
    updated = ops.tanh(agent.output(joint + context))
    state_hat = updated[0:1]
    vision_hat = updated[1:]
    logits = agent.action(state_hat) @ vision_hat.T
    next_state = ops.tanh(agent.update(ops.concat([state_hat, context[0:1]], axis=1)))
    return PolicyOutput(next_state, logits, ops.softmax(logits))
