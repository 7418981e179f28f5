from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .instruction import TrajectoryInstruction

STOP_REASONS = ("stopped", "max_steps")


@dataclass(frozen=True)
class EpisodeSpec:
    episode_id: str
    world_id: str
    reference_path: Tuple[str, ...]
    start_heading: float
    instruction: TrajectoryInstruction

    @property
    def start(self) -> str:
        return self.reference_path[0]

    @property
    def goal(self) -> str:
        return self.reference_path[-1]

    def to_dict(self) -> Dict:
        return {
            "episode_id": self.episode_id,
            "world_id": self.world_id,
            "reference_path": list(self.reference_path),
            "start_heading": self.start_heading,
            "instruction": self.instruction.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "EpisodeSpec":
        return cls(
            episode_id=data["episode_id"],
            world_id=data["world_id"],
            reference_path=tuple(data["reference_path"]),
            start_heading=float(data["start_heading"]),
            instruction=TrajectoryInstruction.from_dict(data["instruction"]),
        )


@dataclass
class StepLog:
    viewpoint: str
    heading: float
    candidates: List[str]
    probabilities: List[float]
    action: int
    teacher_action: int
    reward: float = 0.0  # geodesic progress toward the goal

    def to_dict(self) -> Dict:
        return {
            "viewpoint": self.viewpoint,
            "heading": self.heading,
            "candidates": self.candidates,
            "probabilities": self.probabilities,
            "action": self.action,
            "teacher_action": self.teacher_action,
            "reward": self.reward,
        }


@dataclass
class Episode:
    episode_id: str
    world_id: str
    start: str
    goal: str
    mode: str
    instruction_tokens: List[int]
    steps: List[StepLog] = field(default_factory=list)
    path: List[str] = field(default_factory=list)
    stop_reason: Optional[str] = None
    terminal_reward: float = 0.0

    @property
    def final_viewpoint(self) -> str:
        return self.path[-1]

    @property
    def rewards(self) -> List[float]:
        """Per-step rewards with the terminal reward folded into the last step"""
        rewards = [s.reward for s in self.steps]
        if rewards:
            rewards[-1] += self.terminal_reward
        return rewards

    def to_dict(self) -> Dict:
        return {
            "episode_id": self.episode_id,
            "world_id": self.world_id,
            "start": self.start,
            "goal": self.goal,
            "mode": self.mode,
            "instruction_tokens": self.instruction_tokens,
            "path": self.path,
            "final_viewpoint": self.final_viewpoint,
            "stop_reason": self.stop_reason,
            "terminal_reward": self.terminal_reward,
            "steps": [s.to_dict() for s in self.steps],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Episode":
        return cls(
            episode_id=data["episode_id"],
            world_id=data["world_id"],
            start=data["start"],
            goal=data["goal"],
            mode=data["mode"],
            instruction_tokens=list(data["instruction_tokens"]),
            steps=[StepLog(**s) for s in data["steps"]],
            path=list(data["path"]),
            stop_reason=data["stop_reason"],
            terminal_reward=float(data["terminal_reward"]),
        )
