"""Agent training on SyFiS episodes and greedy evaluation over frozen parameters.

One update collects a teacher-forced and a sampled rollout per episode spec,
then optimizes β1·L_nav + β2·L_SIG + β3·L_SS over the agent parameters, plus
the translator parameters when the translator is attached and trainable.
"""
import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..models.episode import Episode, EpisodeSpec
from ..models.instruction import SyfisRecord, Trajectory
from ..models.world import EnvironmentGraph
from ..numcore import ops
from ..numcore.optim import AdamW
from ..numcore.params import ParameterStore
from ..numcore.tensor import Tensor, no_grad
from ..syfis.builder import group_by_trajectory, trajectory_instruction
from ..translator.losses import loss_sig
from ..translator.model import TranslatorModel
from ..utils.errors import InvalidInputError, NotFoundError
from ..utils.workers import run_jobs
from .losses import loss_nav, loss_ss
from .model import AgentModel
from .rollout import RewardParams, RolloutTrace, run_episode

logger = logging.getLogger(__name__)


@dataclass
class TrainBreakdown:
    total: float
    nav: float
    sig: float
    ss: float
    imitation: float  # mean teacher-forced −Σ log p(a*), unweighted

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class AgentTrainResult:
    history: List[Dict] = field(default_factory=list)
    episodes: int = 0
    translator_trained: bool = False

    def to_dict(self) -> Dict:
        return asdict(self)


def episode_specs(
    records: Sequence[SyfisRecord],
    trajectories: Sequence[Trajectory],
    mode: str = "full",
    max_len: Optional[int] = None,
) -> List[EpisodeSpec]:
    """Episode specs for trajectories whose every step produced a record"""
    groups = group_by_trajectory(records)
    specs = []
    for trajectory in sorted(trajectories, key=lambda t: (t.world_id, t.trajectory_id)):
        group = groups.get(trajectory.trajectory_id, [])
        if len(group) != len(trajectory.path) or group[0].step_index != 0:
            continue
        specs.append(EpisodeSpec(
            episode_id=trajectory.trajectory_id,
            world_id=trajectory.world_id,
            reference_path=trajectory.path,
            start_heading=trajectory.start_heading,
            instruction=trajectory_instruction(group, mode, max_len),
        ))
    logger.debug("%d of %d trajectories are complete episodes", len(specs), len(trajectories))
    return specs


def _world(worlds: Mapping[str, EnvironmentGraph], world_id: str) -> EnvironmentGraph:
    if world_id not in worlds:
        raise NotFoundError(f"world '{world_id}' not loaded")
    return worlds[world_id]


def _mean(terms: List[Tensor]) -> Optional[Tensor]:
    if not terms:
        return None
    return ops.mean(ops.concat([ops.reshape(t, (1,)) for t in terms]))


def supervised_steps(spec: EpisodeSpec, trace: RolloutTrace) -> int:
    """Leading teacher steps that stay on the reference path the step targets describe"""
    count = 0
    for step, viewpoint in zip(trace.episode.steps, spec.reference_path):
        if step.viewpoint != viewpoint:
            break
        count += 1
    return count


class AgentTrainer:
    """Joint optimizer state and loss assembly for agent training"""

    def __init__(
        self,
        agent: AgentModel,
        translator: Optional[TranslatorModel],
        worlds: Mapping[str, EnvironmentGraph],
        config,
    ):
        self.agent = agent
        self.translator = None if config.ablation.no_translator else translator
        self.worlds = worlds
        self.config = config
        self.betas = config.effective_betas
        self.lambda_il = config.losses.lambda_il
        self.literal_ss = config.losses.literal_ss
        self.max_steps = config.rollout.max_steps
        self.rewards = RewardParams.from_config(config)
        self.train_translator = self.translator is not None and (self.betas[1] > 0 or self.betas[2] > 0)
        if self.train_translator:
            self.store = ParameterStore.union(agent.store, self.translator.store)
        else:
            self.store = agent.store
        self.optimizer = AdamW.from_config(config.optimizer)

    def collect(self, specs: Sequence[EpisodeSpec], rng: np.random.Generator) -> Tuple[List[RolloutTrace], List[RolloutTrace]]:
        """(teacher-forced, sampled) rollouts, one of each per spec"""
        teacher, sampled = [], []
        for spec in specs:
            graph = _world(self.worlds, spec.world_id)
            teacher.append(run_episode(
                self.agent, self.translator, graph, spec, "teacher", self.max_steps, rewards=self.rewards
            ))
            sampled.append(run_episode(
                self.agent, self.translator, graph, spec, "sample", self.max_steps, rng, self.rewards
            ))
        return teacher, sampled

    def supervision_losses(
        self, specs: Sequence[EpisodeSpec], teacher: Sequence[RolloutTrace]
    ) -> Tuple[Optional[Tensor], Optional[Tensor]]:
        """Mean SIG and SS losses over teacher-forced steps that carry supervision"""
        sig_terms, ss_masks, ss_truth = [], [], []
        for spec, trace in zip(specs, teacher):
            instruction = spec.instruction
            supervised = supervised_steps(spec, trace)
            for t, (dists, mask) in enumerate(zip(trace.token_dists[:supervised], trace.split_masks[:supervised])):
                target = instruction.step_targets[t] if t < len(instruction.step_targets) else None
                truth = instruction.step_masks[t] if t < len(instruction.step_masks) else None
                if dists is not None and target:
                    sig_terms.append(loss_sig(dists, target))
                if mask is not None and truth is not None:
                    ss_masks.append(mask)
                    ss_truth.append(truth)
        ss = loss_ss(ss_masks, ss_truth, self.literal_ss) if ss_masks else None
        return _mean(sig_terms), ss

    def batch_loss(self, specs: Sequence[EpisodeSpec], rng: np.random.Generator) -> Tuple[Tensor, TrainBreakdown]:
        if not specs:
            raise InvalidInputError("training batch has no episodes")
        beta1, beta2, beta3 = self.betas
        teacher, sampled = self.collect(specs, rng)
        nav = loss_nav(sampled, teacher, self.lambda_il, self.rewards.discount)
        total = beta1 * nav
        sig_value = ss_value = 0.0
        if self.translator is not None and (beta2 > 0 or beta3 > 0):
            sig, ss = self.supervision_losses(specs, teacher)
            if sig is not None and beta2 > 0:
                total = total + beta2 * sig
                sig_value = sig.item()
            if ss is not None and beta3 > 0:
                total = total + beta3 * ss
                ss_value = ss.item()
        imitation = float(np.mean([-sum(lp.item() for lp in trace.action_log_probs) for trace in teacher]))
        return total, TrainBreakdown(total.item(), nav.item(), sig_value, ss_value, imitation)

    def train_step(self, specs: Sequence[EpisodeSpec], rng: np.random.Generator) -> TrainBreakdown:
        self.store.zero_grad()
        if self.translator is not None and not self.train_translator:
            self.translator.store.zero_grad()
        loss, breakdown = self.batch_loss(specs, rng)
        loss.backward()
        self.optimizer.step(self.store)
        return breakdown

    def train(self, specs: Sequence[EpisodeSpec], steps: int, progress: bool = False) -> AgentTrainResult:
        if not specs:
            raise InvalidInputError("no complete episodes to train the agent on")
        t = self.config.train
        rng = np.random.default_rng([self.config.seeds.seed, 505])
        batch_size = min(t.agent_batch, len(specs))
        result = AgentTrainResult(episodes=len(specs), translator_trained=self.train_translator)
        for step in tqdm(range(steps), desc="agent", disable=not progress, leave=False):
            batch = [specs[i] for i in rng.choice(len(specs), size=batch_size, replace=False)]
            breakdown = self.train_step(batch, rng)
            result.history.append({"step": step, **breakdown.to_dict()})
            if (step + 1) % t.log_every == 0:
                logger.info(
                    "agent step %d: loss %.4f nav %.4f sig %.4f ss %.4f il %.4f",
                    step + 1, breakdown.total, breakdown.nav, breakdown.sig, breakdown.ss, breakdown.imitation,
                )
        return result


def train_step(
    agent: AgentModel,
    translator: Optional[TranslatorModel],
    batch: Sequence[EpisodeSpec],
    worlds: Mapping[str, EnvironmentGraph],
    config,
    rng: np.random.Generator,
    trainer: Optional[AgentTrainer] = None,
) -> TrainBreakdown:
    """One joint update; pass ``trainer`` to keep optimizer moments across calls"""
    trainer = trainer or AgentTrainer(agent, translator, worlds, config)
    return trainer.train_step(batch, rng)


def train_agent(
    agent: AgentModel,
    translator: Optional[TranslatorModel],
    specs: Sequence[EpisodeSpec],
    worlds: Mapping[str, EnvironmentGraph],
    config,
    progress: bool = False,
) -> AgentTrainResult:
    trainer = AgentTrainer(agent, translator, worlds, config)
    return trainer.train(specs, config.train.agent_steps, progress)


def evaluate_episodes(
    agent: AgentModel,
    translator: Optional[TranslatorModel],
    specs: Sequence[EpisodeSpec],
    worlds: Mapping[str, EnvironmentGraph],
    config,
    mode: str = "greedy",
    progress: bool = False,
) -> List[Episode]:
    """Rollouts over frozen parameters on the worker pool, in input order"""
    if config.ablation.no_translator:
        translator = None
    rewards = RewardParams.from_config(config)

    def _work(spec: EpisodeSpec) -> Episode:
        with no_grad():
            return run_episode(
                agent, translator, _world(worlds, spec.world_id), spec, mode, config.rollout.max_steps, rewards=rewards
            ).episode

    return run_jobs(list(specs), _work, config.worker_threads, desc=f"{mode} rollouts", progress=progress)


def split_f1(
    translator: TranslatorModel,
    agent: AgentModel,
    specs: Sequence[EpisodeSpec],
    worlds: Mapping[str, EnvironmentGraph],
    config,
    threshold: float = 0.5,
) -> Dict:
    """Token F1 of thresholded split masks against the span masks on teacher-forced steps"""
    tp = fp = fn = 0
    rewards = RewardParams.from_config(config)
    with no_grad():
        for spec in specs:
            trace = run_episode(
                agent, translator, _world(worlds, spec.world_id), spec, "teacher", config.rollout.max_steps,
                rewards=rewards,
            )
            for t, mask in enumerate(trace.split_masks[:supervised_steps(spec, trace)]):
                truth = spec.instruction.step_masks[t] if t < len(spec.instruction.step_masks) else None
                if mask is None or truth is None:
                    continue
                predicted = mask.data[:, 0] > threshold
                actual = np.asarray(truth, dtype=bool)
                tp += int(np.sum(predicted & actual))
                fp += int(np.sum(predicted & ~actual))
                fn += int(np.sum(~predicted & actual))
    denominator = 2 * tp + fp + fn
    return {
        "f1": 2 * tp / denominator if denominator else 1.0,
        "precision": tp / (tp + fp) if tp + fp else 0.0,
        "recall": tp / (tp + fn) if tp + fn else 0.0,
    }
