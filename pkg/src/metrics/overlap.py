"""Overlap between instruction landmarks and what the detector recognizes along a path"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Sequence, Set

from ..landmark.detector import Detector, recognizable_landmarks
from ..models.episode import Episode
from ..models.instruction import SyfisRecord
from ..models.world import EnvironmentGraph
from ..syfis.builder import group_by_trajectory
from ..utils.errors import NotFoundError

logger = logging.getLogger(__name__)

BIN_WIDTH = 10
BIN_COUNT = 100 // BIN_WIDTH + 1


@dataclass
class OverlapReport:
    bins: List[int] = field(default_factory=lambda: [i * BIN_WIDTH for i in range(BIN_COUNT)])
    all_counts: List[int] = field(default_factory=lambda: [0] * BIN_COUNT)
    success_counts: List[int] = field(default_factory=lambda: [0] * BIN_COUNT)
    excluded: int = 0
    per_episode: Dict[str, float] = field(default_factory=dict)

    @property
    def included(self) -> int:
        return sum(self.all_counts)

    def to_dict(self) -> Dict:
        return {
            "bins": self.bins,
            "all": self.all_counts,
            "successful": self.success_counts,
            "excluded": self.excluded,
            "included": self.included,
            "per_episode": self.per_episode,
        }


def overlap_bin(percent: float) -> int:
    return min(BIN_COUNT - 1, int(percent / BIN_WIDTH + 1e-9))


class PathLandmarks:
    """Recognizable landmarks per viewpoint, over every view of its panorama"""

    def __init__(self, detector: Detector, k: int, tau: float):
        self.detector = detector
        self.k = k
        self.tau = tau
        self._cache: Dict[str, FrozenSet[int]] = {}

    def at(self, graph: EnvironmentGraph, viewpoint_id: str) -> FrozenSet[int]:
        key = f"{graph.world_id}/{viewpoint_id}"
        if key not in self._cache:
            viewpoint = graph.viewpoint(viewpoint_id)
            labels: Set[int] = set()
            for view in viewpoint.views.values():
                labels.update(recognizable_landmarks(self.detector, view, self.k, self.tau))
            self._cache[key] = frozenset(labels)
        return self._cache[key]

    def along(self, graph: EnvironmentGraph, path: Sequence[str]) -> Set[int]:
        labels: Set[int] = set()
        for viewpoint_id in path:
            labels.update(self.at(graph, viewpoint_id))
        return labels


def overlap_percent(instruction_landmarks: Set[int], path_landmarks: Set[int]) -> float:
    return 100.0 * len(instruction_landmarks & path_landmarks) / len(instruction_landmarks)


def overlap_report(
    episodes: Sequence[Episode],
    instruction_landmarks: Mapping[str, Sequence[str]],
    worlds: Mapping[str, EnvironmentGraph],
    detector: Detector,
    k: int,
    tau: float,
    successes: Mapping[str, int],
) -> OverlapReport:
    """Histogram of per-episode landmark overlap, all episodes vs successful ones.

    ``instruction_landmarks`` maps episode ids to the landmark labels their
    instruction mentions; episodes whose instruction names none are excluded.
    """
    report = OverlapReport()
    landmarks = PathLandmarks(detector, k, tau)
    vocabulary = detector.vocabulary
    for episode in episodes:
        mentioned = {vocabulary.index(label) for label in instruction_landmarks.get(episode.episode_id, ())}
        if not mentioned:
            report.excluded += 1
            continue
        if episode.world_id not in worlds:
            raise NotFoundError(f"world '{episode.world_id}' not loaded")
        percent = overlap_percent(mentioned, landmarks.along(worlds[episode.world_id], episode.path))
        report.per_episode[episode.episode_id] = percent
        index = overlap_bin(percent)
        report.all_counts[index] += 1
        if successes.get(episode.episode_id, 0):
            report.success_counts[index] += 1
    if report.excluded:
        logger.info("overlap report excluded %d episodes without instruction landmarks", report.excluded)
    return report


def instruction_landmarks(records: Sequence[SyfisRecord]) -> Dict[str, List[str]]:
    """Positive landmarks of each trajectory, in step order"""
    return {tid: [r.positive.landmark for r in group] for tid, group in group_by_trajectory(records).items()}


def landmark_association(records: Sequence[SyfisRecord]) -> Dict[str, Dict[str, float]]:
    """For each positive landmark X, the share of X's trajectories that also mention each other landmark Y"""
    per_trajectory = [set(labels) for labels in instruction_landmarks(records).values()]
    mentions: Counter = Counter()
    together: Dict[str, Counter] = {}
    for labels in per_trajectory:
        for x in labels:
            mentions[x] += 1
            row = together.setdefault(x, Counter())
            for y in labels:
                if y != x:
                    row[y] += 1
    return {
        x: {y: 100.0 * together[x][y] / mentions[x] for y in sorted(together[x])}
        for x in sorted(mentions)
    }
