from .losses import loss_nav, loss_ss
from .model import AgentModel, PolicyOutput, augment_text, policy_step
from .rollout import MODES, RewardParams, RolloutTrace, discounted_returns, rollout, run_episode
from .trainer import (
    AgentTrainer,
    AgentTrainResult,
    TrainBreakdown,
    episode_specs,
    evaluate_episodes,
    split_f1,
    train_agent,
    train_step,
)

__all__ = [
    "AgentModel",
    "AgentTrainResult",
    "AgentTrainer",
    "MODES",
    "PolicyOutput",
    "RewardParams",
    "RolloutTrace",
    "TrainBreakdown",
    "augment_text",
    "discounted_returns",
    "episode_specs",
    "evaluate_episodes",
    "loss_nav",
    "loss_ss",
    "policy_step",
    "rollout",
    "run_episode",
    "split_f1",
    "train_agent",
    "train_step",
]
