import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..models.episode import Episode, EpisodeSpec, StepLog
from ..models.instruction import STOP_TARGET
from ..models.world import EnvironmentGraph
from ..numcore import ops
from ..numcore.tensor import Tensor
from ..sim.simulator import WorldSimulator, simulator_for
from ..translator.model import TranslatorModel, translate
from ..utils.errors import InvalidParameterError
from .model import AgentModel, augment_text, policy_step

logger = logging.getLogger(__name__)

MODES = ("teacher", "sample", "greedy")
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class RewardParams:
    success_radius: float = 1.0
    success_reward: float = 2.0
    failure_penalty: float = 2.0
    discount: float = 0.9

    @classmethod
    def from_config(cls, config) -> "RewardParams":
        r = config.rollout
        return cls(r.success_radius, r.success_reward, r.failure_penalty, r.discount)


@dataclass
class RolloutTrace:
    """An episode plus the differentiable per-step quantities the losses need"""
    episode: Episode
    action_log_probs: List[Tensor] = field(default_factory=list)
    token_dists: List[Optional[Tensor]] = field(default_factory=list)
    split_masks: List[Optional[Tensor]] = field(default_factory=list)


def run_episode(
    agent: AgentModel,
    translator: Optional[TranslatorModel],
    graph: EnvironmentGraph,
    spec: EpisodeSpec,
    mode: str,
    max_steps: int,
    rng: Optional[np.random.Generator] = None,
    rewards: RewardParams = RewardParams(),
) -> RolloutTrace:
    if mode not in MODES:
        raise InvalidParameterError(f"rollout mode must be one of {MODES}, got '{mode}'")
    if mode == "sample" and rng is None:
        raise InvalidParameterError("sample mode needs a random generator")
    simulator: WorldSimulator = simulator_for(graph)
    simulator.distance(spec.start, spec.goal)  # validates both ids and reachability
    distances = simulator.distances_to(spec.goal)

    tokens = spec.instruction.tokens
    text = agent.embed_text(tokens)
    text_encoding = translator.encode_text(tokens) if translator is not None else None
    state = agent.initial_state(text)

    episode = Episode(spec.episode_id, spec.world_id, spec.start, spec.goal, mode, list(tokens), path=[spec.start])
    trace = RolloutTrace(episode)
    current, heading = spec.start, spec.start_heading

    for step in range(max_steps):
        _, candidates = simulator.observe(current, heading)
        output = None
        if translator is not None:
            vision = translator.encode_vision(candidates.feature_matrix())
            output = translate(translator, text_encoding, instruction_embeddings=text, vision_states=vision)
        policy = policy_step(agent, augment_text(text, output), state, candidates)
        probabilities = policy.probabilities.data[0]

        teacher = simulator.teacher_action(current, spec.goal, heading)
        if mode == "teacher":
            action = teacher
        elif mode == "greedy":
            action = int(np.argmax(probabilities))
        else:
            action = int(rng.choice(len(candidates), p=probabilities / probabilities.sum()))

        trace.action_log_probs.append(ops.log(ops.pick(policy.probabilities, [0], [action]), floor=LOG_FLOOR))
        trace.token_dists.append(output.token_dists if output is not None else None)
        trace.split_masks.append(output.split_mask if output is not None else None)

        nxt, next_heading = simulator.move(current, heading, candidates, action)
        episode.steps.append(StepLog(
            viewpoint=current,
            heading=heading,
            candidates=[STOP_TARGET if e.is_stop else e.viewpoint_id for e in candidates],
            probabilities=[float(p) for p in probabilities],
            action=action,
            teacher_action=teacher,
            reward=distances[current] - distances[nxt],
        ))
        if candidates[action].is_stop:
            episode.stop_reason = "stopped"
            break
        current, heading = nxt, next_heading
        episode.path.append(current)
        state = policy.state
    else:
        episode.stop_reason = "max_steps"

    success = distances[episode.final_viewpoint] <= rewards.success_radius
    episode.terminal_reward = rewards.success_reward if success else -rewards.failure_penalty
    return trace


def rollout(
    agent: AgentModel,
    translator: Optional[TranslatorModel],
    graph: EnvironmentGraph,
    spec: EpisodeSpec,
    mode: str,
    max_steps: int,
    rng: Optional[np.random.Generator] = None,
    rewards: RewardParams = RewardParams(),
) -> Episode:
    return run_episode(agent, translator, graph, spec, mode, max_steps, rng, rewards).episode


def discounted_returns(rewards: List[float], discount: float) -> List[float]:
    returns = [0.0] * len(rewards)
    running = 0.0
    for t in reversed(range(len(rewards))):
        running = rewards[t] + discount * running
        returns[t] = running
    return returns
