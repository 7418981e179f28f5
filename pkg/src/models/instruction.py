from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from ..utils.errors import FormatError

STOP_TARGET = "STOP"


class MotionCategory(str, Enum):
    FORWARD = "FORWARD"
    LEFT = "LEFT"
    RIGHT = "RIGHT"
    UP = "UP"
    DOWN = "DOWN"
    STOP = "STOP"


@dataclass(frozen=True)
class SubInstruction:
    phrase: str
    landmark: str
    tokens: Tuple[int, ...]
    category: MotionCategory

    @property
    def text(self) -> str:
        return f"{self.phrase} the {self.landmark}"

    def to_dict(self) -> Dict:
        return {"phrase": self.phrase, "landmark": self.landmark, "tokens": list(self.tokens)}

    @classmethod
    def from_dict(cls, data: Dict, category: MotionCategory) -> "SubInstruction":
        return cls(
            phrase=data["phrase"],
            landmark=data["landmark"],
            tokens=tuple(int(t) for t in data["tokens"]),
            category=category,
        )


@dataclass(frozen=True)
class Negative:
    instruction: SubInstruction
    kind: str  # "hard" (nondistinctive) or "easy" (irrelevant)

    def to_dict(self) -> Dict:
        return {**self.instruction.to_dict(), "kind": self.kind}


@dataclass(frozen=True)
class Trajectory:
    trajectory_id: str
    world_id: str
    path: Tuple[str, ...]
    start_heading: float

    def to_dict(self) -> Dict:
        return {
            "trajectory_id": self.trajectory_id,
            "world_id": self.world_id,
            "path": list(self.path),
            "start_heading": self.start_heading,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Trajectory":
        return cls(data["trajectory_id"], data["world_id"], tuple(data["path"]), float(data["start_heading"]))


@dataclass(frozen=True)
class SyfisRecord:
    record_id: str
    world_id: str
    trajectory_id: str
    step_index: int
    source: str
    target: str  # neighbor id or STOP_TARGET
    heading: float
    candidates: Tuple[str, ...]
    category: MotionCategory
    anchor: SubInstruction
    positive: SubInstruction
    negatives: Tuple[Negative, ...]

    @property
    def is_stop(self) -> bool:
        return self.target == STOP_TARGET

    def to_dict(self) -> Dict:
        return {
            "record_id": self.record_id,
            "world_id": self.world_id,
            "trajectory_id": self.trajectory_id,
            "step_index": self.step_index,
            "source": self.source,
            "target": self.target,
            "heading": self.heading,
            "candidates": list(self.candidates),
            "category": self.category.value,
            "anchor": self.anchor.to_dict(),
            "positive": self.positive.to_dict(),
            "negatives": [n.to_dict() for n in self.negatives],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "SyfisRecord":
        try:
            category = MotionCategory(data["category"])
            negatives = tuple(
                Negative(SubInstruction.from_dict(n, category), n["kind"]) for n in data["negatives"]
            )
            return cls(
                record_id=data["record_id"],
                world_id=data["world_id"],
                trajectory_id=data["trajectory_id"],
                step_index=int(data["step_index"]),
                source=data["source"],
                target=data["target"],
                heading=float(data["heading"]),
                candidates=tuple(data["candidates"]),
                category=category,
                anchor=SubInstruction.from_dict(data["anchor"], category),
                positive=SubInstruction.from_dict(data["positive"], category),
                negatives=negatives,
            )
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"malformed SyFiS record: {e}") from e


@dataclass
class TrajectoryInstruction:
    """Episode text plus per-step supervision; masks/targets are None where a step has none"""
    tokens: List[int]
    step_masks: List[Optional[List[int]]] = field(default_factory=list)
    step_targets: List[Optional[List[int]]] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {"tokens": self.tokens, "step_masks": self.step_masks, "step_targets": self.step_targets}

    @classmethod
    def from_dict(cls, data: Dict) -> "TrajectoryInstruction":
        return cls(list(data["tokens"]), list(data["step_masks"]), list(data["step_targets"]))
