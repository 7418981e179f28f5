import json
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence

from ..models.instruction import MotionCategory
from ..utils.errors import ConfigError

logger = logging.getLogger(__name__)

# Phrases carry their own prepositions and precede "the <landmark>".
DEFAULT_PHRASES: Dict[MotionCategory, List[str]] = {
    MotionCategory.FORWARD: [
        "walk forward to", "go straight to", "continue toward", "head forward to",
        "walk ahead to", "move forward to", "go past", "proceed to",
    ],
    MotionCategory.LEFT: [
        "turn left to", "go left to", "make a left to", "veer left toward",
        "turn left at", "bear left to", "head left to", "walk left to",
    ],
    MotionCategory.RIGHT: [
        "turn right to", "go right to", "make a right to", "veer right toward",
        "turn right at", "bear right to", "head right to", "walk right to",
    ],
    MotionCategory.UP: [
        "go up to", "walk up to", "climb up to", "take the stairs up to",
        "head upstairs to", "go upstairs to", "ascend to", "climb toward",
    ],
    MotionCategory.DOWN: [
        "go down to", "walk down to", "climb down to", "take the stairs down to",
        "head downstairs to", "go downstairs to", "descend to", "step down to",
    ],
    MotionCategory.STOP: [
        "stop at", "wait at", "stop near", "stand by",
        "wait near", "stop in front of", "halt at", "stay by",
    ],
}


class MotionIndicatorDictionary:
    def __init__(self, phrases: Mapping[MotionCategory, Sequence[str]]):
        self.phrases: Dict[MotionCategory, List[str]] = {}
        for category in MotionCategory:
            entries = [" ".join(p.lower().split()) for p in phrases.get(category, [])]
            if not entries:
                raise ConfigError(f"motion dictionary has no phrases for {category.value}")
            if len(set(entries)) != len(entries):
                raise ConfigError(f"motion dictionary has duplicate phrases for {category.value}")
            if len(entries) < 3:
                logger.warning("motion category %s has only %d phrase(s)", category.value, len(entries))
            self.phrases[category] = entries

    @classmethod
    def default(cls) -> "MotionIndicatorDictionary":
        return cls(DEFAULT_PHRASES)

    @classmethod
    def load(cls, path: Optional[str] = None) -> "MotionIndicatorDictionary":
        """Built-in phrases, with categories present in the JSON file replaced"""
        if path is None:
            return cls.default()
        try:
            with open(Path(path), "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"motion dictionary not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"motion dictionary {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"motion dictionary {path} must be an object of phrase lists")
        merged = dict(DEFAULT_PHRASES)
        for key, values in data.items():
            try:
                category = MotionCategory(key.upper())
            except ValueError:
                raise ConfigError(f"unknown motion category '{key}' in {path}") from None
            if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
                raise ConfigError(f"motion category '{key}' in {path} must be a list of strings")
            merged[category] = values
        return cls(merged)

    def __getitem__(self, category: MotionCategory) -> List[str]:
        return self.phrases[category]

    def all_phrases(self) -> List[str]:
        return [p for category in MotionCategory for p in self.phrases[category]]

    def counts(self) -> Dict[str, int]:
        return {category.value: len(self.phrases[category]) for category in MotionCategory}


def select_motion_category(
    delta_heading: float,
    delta_elevation: float,
    is_stop: bool,
    threshold: float = 30.0,
) -> MotionCategory:
    """STOP, then elevation, then heading; positive Δheading turns right"""
    if is_stop:
        return MotionCategory.STOP
    if abs(delta_elevation) > threshold:
        return MotionCategory.UP if delta_elevation > 0 else MotionCategory.DOWN
    if abs(delta_heading) > threshold:
        return MotionCategory.RIGHT if delta_heading > 0 else MotionCategory.LEFT
    return MotionCategory.FORWARD
