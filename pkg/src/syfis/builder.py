"""Synthetic sub-instruction records: one contrastive bundle per trajectory step.

For each step the target candidate's recognizable landmarks are split against
the other candidates' into distinctive, nondistinctive and irrelevant sets.
The positive sub-instruction names the best distinctive landmark, the hard
negative a nondistinctive one, the easy negatives irrelevant ones, and the
anchor repeats the positive with a different motion phrase.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..landmark.detector import Detector, LandmarkPartition, classify_landmarks, rank_labels
from ..models.instruction import (
    STOP_TARGET,
    MotionCategory,
    Negative,
    SubInstruction,
    SyfisRecord,
    Trajectory,
    TrajectoryInstruction,
)
from ..models.world import EnvironmentGraph
from ..sim import geometry
from ..sim.simulator import simulator_for
from ..utils.errors import (
    InvalidInputError,
    InvalidParameterError,
    MalformedTrajectoryError,
    StepIndexError,
    VocabularyError,
)
from ..utils.io import write_json, write_jsonl
from ..utils.workers import run_jobs
from .motion import MotionIndicatorDictionary, select_motion_category
from .tokenizer import Tokenizer, split_words

logger = logging.getLogger(__name__)

NEGATIVE_SLOTS = ("hard", "easy", "easy")


@dataclass(frozen=True)
class Skip:
    reason: str
    trajectory_id: str
    step_index: int


@dataclass
class DatasetStats:
    total_steps: int = 0
    emitted: int = 0
    skipped: Counter = field(default_factory=Counter)
    fills: Counter = field(default_factory=Counter)
    degenerate_anchors: int = 0
    categories: Counter = field(default_factory=Counter)
    distinctive_sizes: Counter = field(default_factory=Counter)
    nondistinctive_sizes: Counter = field(default_factory=Counter)
    irrelevant_sizes: Counter = field(default_factory=Counter)
    positive_landmarks: Counter = field(default_factory=Counter)
    complete_trajectories: int = 0
    trajectories: int = 0

    def merge(self, other: "DatasetStats") -> None:
        self.total_steps += other.total_steps
        self.emitted += other.emitted
        self.degenerate_anchors += other.degenerate_anchors
        self.complete_trajectories += other.complete_trajectories
        self.trajectories += other.trajectories
        for name in ("skipped", "fills", "categories", "distinctive_sizes",
                     "nondistinctive_sizes", "irrelevant_sizes", "positive_landmarks"):
            getattr(self, name).update(getattr(other, name))

    def to_dict(self) -> Dict:
        def _sorted(counter: Counter) -> Dict[str, int]:
            return {str(k): counter[k] for k in sorted(counter, key=lambda k: (str(type(k)), k))}
        return {
            "total_steps": self.total_steps,
            "emitted": self.emitted,
            "skipped": _sorted(self.skipped),
            "skipped_total": sum(self.skipped.values()),
            "negative_fills": _sorted(self.fills),
            "degenerate_anchors": self.degenerate_anchors,
            "categories": _sorted(self.categories),
            "landmark_classes": {
                "distinctive": _sorted(self.distinctive_sizes),
                "nondistinctive": _sorted(self.nondistinctive_sizes),
                "irrelevant": _sorted(self.irrelevant_sizes),
            },
            "positive_landmarks": _sorted(self.positive_landmarks),
            "trajectories": self.trajectories,
            "complete_trajectories": self.complete_trajectories,
        }


@dataclass
class DatasetResult:
    records: List[SyfisRecord]
    trajectories: List[Trajectory]
    stats: DatasetStats
    tokenizer: Tokenizer


def step_heading(graph: EnvironmentGraph, trajectory: Trajectory, step_index: int) -> float:
    """Agent heading on arrival at step ``step_index``"""
    if step_index == 0:
        return trajectory.start_heading
    prev = graph.viewpoint(trajectory.path[step_index - 1]).position
    here = graph.viewpoint(trajectory.path[step_index]).position
    return geometry.bearing(prev, here)


class SyfisBuilder:
    """Shared state for record construction over one detector and dictionary"""

    def __init__(
        self,
        detector: Detector,
        dictionary: MotionIndicatorDictionary,
        k: int = 5,
        tau: float = 0.1,
        threshold: float = 30.0,
        max_tokens: int = 8,
        tokenizer: Optional[Tokenizer] = None,
    ):
        if k < 1:
            raise InvalidParameterError(f"k must be >= 1, got {k}")
        self.detector = detector
        self.dictionary = dictionary
        self.k = k
        self.tau = tau
        self.threshold = threshold
        self.max_tokens = max_tokens
        self.tokenizer = tokenizer or Tokenizer.build(dictionary.all_phrases(), detector.vocabulary.labels)

    @classmethod
    def from_config(cls, detector: Detector, config, dictionary: Optional[MotionIndicatorDictionary] = None) -> "SyfisBuilder":
        dictionary = dictionary or MotionIndicatorDictionary.load(config.syfis.dictionary_path)
        return cls(
            detector,
            dictionary,
            k=config.detector.k,
            tau=config.detector.tau,
            threshold=config.syfis.motion_threshold,
            max_tokens=config.syfis.max_tokens,
        )

    def compose(self, category: MotionCategory, landmark: str, phrase: str) -> SubInstruction:
        if landmark not in self.detector.vocabulary:
            raise VocabularyError(f"unknown landmark label '{landmark}'")
        tokens = self.tokenizer.encode(phrase, strict=True) + [self.tokenizer.token_id("the", strict=True)]
        tokens += self.tokenizer.encode(landmark, strict=True)
        if len(tokens) > self.max_tokens:
            raise InvalidInputError(
                f"sub-instruction '{phrase} the {landmark}' has {len(tokens)} tokens, limit {self.max_tokens}"
            )
        return SubInstruction(" ".join(split_words(phrase)), landmark, tuple(tokens), category)

    def compose_subinstruction(self, category: MotionCategory, landmark: str, rng: np.random.Generator) -> SubInstruction:
        phrases = self.dictionary[category]
        return self.compose(category, landmark, phrases[int(rng.integers(len(phrases)))])

    def partition_for(self, graph: EnvironmentGraph, trajectory: Trajectory, step_index: int):
        """(heading, candidates, target index, partition) of one step"""
        if not 0 <= step_index < len(trajectory.path):
            raise StepIndexError(
                f"step {step_index} outside trajectory {trajectory.trajectory_id} of {len(trajectory.path)} steps"
            )
        simulator = simulator_for(graph)
        source = trajectory.path[step_index]
        heading = step_heading(graph, trajectory, step_index)
        _, candidates = simulator.observe(source, heading)
        if step_index == len(trajectory.path) - 1:
            target_index = candidates.stop_index
        else:
            target_index = candidates.index_of(trajectory.path[step_index + 1])
            if target_index is None:
                raise MalformedTrajectoryError(
                    f"{trajectory.path[step_index + 1]} is not adjacent to {source} in {trajectory.trajectory_id}"
                )
        others = [entry.feature for i, entry in enumerate(candidates) if i != target_index]
        partition = classify_landmarks(candidates[target_index].feature, others, self.detector, self.k, self.tau)
        return heading, candidates, target_index, partition

    def _negatives(self, partition: LandmarkPartition, stats: DatasetStats) -> List[Tuple[int, str]]:
        pools = {
            "hard": [l for l in rank_labels(partition.target_probabilities) if l in partition.nondistinctive],
            "easy": [l for l in rank_labels(partition.other_probabilities) if l in partition.irrelevant],
        }
        used = set()
        chosen = []
        for slot in NEGATIVE_SLOTS:
            other = "easy" if slot == "hard" else "hard"
            preference = [(label, slot) for label in pools[slot]] + [(label, other) for label in pools[other]]
            pick = next(((label, kind) for label, kind in preference if label not in used), None)
            if pick is None:
                pick = preference[0]
                stats.fills["duplicate"] += 1
            if pick[1] != slot:
                stats.fills["hard_filled_from_irrelevant" if slot == "hard" else "easy_filled_from_nondistinctive"] += 1
            used.add(pick[0])
            chosen.append(pick)
        return chosen

    def build_record(
        self,
        graph: EnvironmentGraph,
        trajectory: Trajectory,
        step_index: int,
        rng: np.random.Generator,
        stats: Optional[DatasetStats] = None,
    ) -> Union[SyfisRecord, Skip]:
        stats = stats if stats is not None else DatasetStats()
        heading, candidates, target_index, partition = self.partition_for(graph, trajectory, step_index)
        stats.total_steps += 1
        stats.distinctive_sizes[len(partition.distinctive)] += 1
        stats.nondistinctive_sizes[len(partition.nondistinctive)] += 1
        stats.irrelevant_sizes[len(partition.irrelevant)] += 1

        if not partition.distinctive:
            stats.skipped["no_distinctive"] += 1
            logger.debug("skip %s step %d: no distinctive landmark", trajectory.trajectory_id, step_index)
            return Skip("no_distinctive", trajectory.trajectory_id, step_index)
        if not partition.nondistinctive and not partition.irrelevant:
            stats.skipped["no_negatives"] += 1
            logger.debug("skip %s step %d: no negative landmark", trajectory.trajectory_id, step_index)
            return Skip("no_negatives", trajectory.trajectory_id, step_index)

        target = candidates[target_index]
        category = select_motion_category(
            target.relative_heading, target.relative_elevation, target.is_stop, self.threshold
        )
        labels = self.detector.vocabulary
        positive_label = next(l for l in rank_labels(partition.target_probabilities) if l in partition.distinctive)
        phrases = self.dictionary[category]
        phrase = phrases[int(rng.integers(len(phrases)))]
        positive = self.compose(category, labels.label(positive_label), phrase)

        alternatives = [p for p in phrases if p != phrase]
        if alternatives:
            anchor_phrase = alternatives[int(rng.integers(len(alternatives)))]
        else:
            anchor_phrase = phrase
            stats.degenerate_anchors += 1
            logger.debug("degenerate anchor for %s: category %s has one phrase", trajectory.trajectory_id, category.value)
        anchor = self.compose(category, labels.label(positive_label), anchor_phrase)

        negatives = tuple(
            Negative(self.compose(category, labels.label(label), phrase), kind)
            for label, kind in self._negatives(partition, stats)
        )
        stats.emitted += 1
        stats.categories[category.value] += 1
        stats.positive_landmarks[labels.label(positive_label)] += 1
        return SyfisRecord(
            record_id=f"{trajectory.trajectory_id}-s{step_index:02d}",
            world_id=graph.world_id,
            trajectory_id=trajectory.trajectory_id,
            step_index=step_index,
            source=trajectory.path[step_index],
            target=STOP_TARGET if target.is_stop else target.viewpoint_id,
            heading=heading,
            candidates=tuple(STOP_TARGET if e.is_stop else e.viewpoint_id for e in candidates),
            category=category,
            anchor=anchor,
            positive=positive,
            negatives=negatives,
        )

    def build_trajectory(
        self, graph: EnvironmentGraph, trajectory: Trajectory, rng: np.random.Generator
    ) -> Tuple[List[SyfisRecord], DatasetStats]:
        stats = DatasetStats(trajectories=1)
        records = []
        for step in range(len(trajectory.path)):
            outcome = self.build_record(graph, trajectory, step, rng, stats)
            if isinstance(outcome, SyfisRecord):
                records.append(outcome)
        if len(records) == len(trajectory.path):
            stats.complete_trajectories = 1
        return records, stats


def compose_subinstruction(
    category: MotionCategory,
    landmark: str,
    rng: np.random.Generator,
    builder: SyfisBuilder,
) -> SubInstruction:
    return builder.compose_subinstruction(category, landmark, rng)


def build_record(
    graph: EnvironmentGraph,
    trajectory: Trajectory,
    step_index: int,
    detector: Detector,
    config,
    rng: np.random.Generator,
    stats: Optional[DatasetStats] = None,
) -> Union[SyfisRecord, Skip]:
    return SyfisBuilder.from_config(detector, config).build_record(graph, trajectory, step_index, rng, stats)


def compose_trajectory_instruction(records: Sequence[SyfisRecord]) -> Tuple[List[int], List[List[int]]]:
    """Concatenate positive tokens; mask t marks step t's span"""
    if not records:
        raise MalformedTrajectoryError("trajectory has no records")
    trajectory_id = records[0].trajectory_id
    for expected, record in enumerate(records, start=records[0].step_index):
        if record.trajectory_id != trajectory_id:
            raise MalformedTrajectoryError(
                f"record {record.record_id} belongs to {record.trajectory_id}, not {trajectory_id}"
            )
        if record.step_index != expected:
            raise MalformedTrajectoryError(
                f"gap in {trajectory_id}: expected step {expected}, got {record.step_index}"
            )
    tokens: List[int] = []
    spans = []
    for record in records:
        spans.append((len(tokens), len(tokens) + len(record.positive.tokens)))
        tokens.extend(record.positive.tokens)
    masks = [[1 if start <= i < end else 0 for i in range(len(tokens))] for start, end in spans]
    return tokens, masks


def trajectory_instruction(
    records: Sequence[SyfisRecord], mode: str = "full", max_len: Optional[int] = None
) -> TrajectoryInstruction:
    """Episode text and per-step supervision for ``full`` or ``last`` instruction mode"""
    tokens, masks = compose_trajectory_instruction(records)
    targets: List[Optional[List[int]]] = [list(r.positive.tokens) for r in records]
    if mode == "last":
        tokens = list(records[-1].positive.tokens)
        masks = [None] * (len(records) - 1) + [[1] * len(tokens)]
        targets = [None] * (len(records) - 1) + [targets[-1]]
    elif mode != "full":
        raise InvalidParameterError(f"unknown instruction mode '{mode}'")
    if max_len is not None and len(tokens) > max_len:
        logger.debug("truncating %s instruction from %d to %d tokens", records[0].trajectory_id, len(tokens), max_len)
        tokens = tokens[:max_len]
        masks = [m[:max_len] if m is not None else None for m in masks]
    return TrajectoryInstruction(tokens, list(masks), targets)


def _eligible_pairs(graph: EnvironmentGraph, min_len: int, max_len: int) -> List[Tuple[str, str]]:
    simulator = simulator_for(graph)
    by_length: Dict[int, List[Tuple[str, str]]] = {}
    for a in graph.node_ids:
        for b in graph.node_ids:
            if a == b:
                continue
            path, _ = simulator.shortest_path(a, b)
            by_length.setdefault(len(path), []).append((a, b))
    eligible = [pair for n in range(min_len, max_len + 1) for pair in by_length.get(n, [])]
    if not eligible:
        longest = max(by_length)
        logger.warning(
            "world %s has no shortest paths of %d-%d viewpoints, using %d", graph.world_id, min_len, max_len, longest
        )
        eligible = by_length[longest]
    return sorted(eligible)


def sample_trajectories(
    graph: EnvironmentGraph,
    count: int,
    min_len: int,
    max_len: int,
    seed: int,
    world_index: int = 0,
    concat: bool = False,
) -> List[Trajectory]:
    """Shortest-path trajectories; ``concat`` chains two segments tail to head"""
    simulator = simulator_for(graph)
    eligible = _eligible_pairs(graph, min_len, max_len)
    by_start: Dict[str, List[Tuple[str, str]]] = {}
    for pair in eligible:
        by_start.setdefault(pair[0], []).append(pair)
    trajectories = []
    for t in range(count):
        rng = np.random.default_rng([seed, world_index, t])
        start, goal = eligible[int(rng.integers(len(eligible)))]
        path, _ = simulator.shortest_path(start, goal)
        if concat:
            onward = [pair for pair in by_start.get(goal, []) if pair[1] != start]
            if onward:
                _, final = onward[int(rng.integers(len(onward)))]
                path = path + simulator.shortest_path(goal, final)[0][1:]
        heading = float(geometry.VIEW_INTERVAL * int(rng.integers(geometry.HEADING_COUNT)))
        trajectories.append(Trajectory(f"{graph.world_id}-t{t:04d}", graph.world_id, tuple(path), heading))
    return trajectories


def generate_dataset(
    worlds: Sequence[EnvironmentGraph],
    trajectories_per_world: int,
    detector: Detector,
    config,
    seed: int,
    out_dir: Optional[Path] = None,
    worker_threads: int = 1,
    progress: bool = False,
) -> DatasetResult:
    """Sample trajectories, build records and (optionally) write the dataset files.

    Records are ordered by (world_id, trajectory_id, step_index) regardless of
    worker count.
    """
    if not worlds:
        raise InvalidInputError("generate_dataset needs at least one world")
    builder = SyfisBuilder.from_config(detector, config)
    s = config.syfis
    jobs = []
    trajectories: List[Trajectory] = []
    for world_index, graph in enumerate(worlds):
        sampled = sample_trajectories(
            graph, trajectories_per_world, s.path_length_min, s.path_length_max, seed,
            world_index=world_index, concat=s.concat_trajectories,
        )
        trajectories.extend(sampled)
        for t, trajectory in enumerate(sampled):
            jobs.append((graph, trajectory, np.random.default_rng([seed, world_index, t, 1])))

    def _work(job):
        graph, trajectory, rng = job
        return builder.build_trajectory(graph, trajectory, rng)

    results = run_jobs(jobs, _work, worker_threads, desc="syfis", progress=progress)
    stats = DatasetStats()
    records: List[SyfisRecord] = []
    for trajectory_records, trajectory_stats in results:
        records.extend(trajectory_records)
        stats.merge(trajectory_stats)
    records.sort(key=lambda r: (r.world_id, r.trajectory_id, r.step_index))
    trajectories.sort(key=lambda t: (t.world_id, t.trajectory_id))
    logger.info(
        "built %d records from %d steps (%d skipped) over %d worlds",
        stats.emitted, stats.total_steps, sum(stats.skipped.values()), len(worlds),
    )

    result = DatasetResult(records, trajectories, stats, builder.tokenizer)
    if out_dir is not None:
        write_dataset(result, Path(out_dir), builder.dictionary)
    return result


def write_dataset(result: DatasetResult, out_dir: Path, dictionary: MotionIndicatorDictionary) -> Dict[str, Path]:
    paths = {
        "records": write_jsonl(out_dir / "syfis.jsonl", (r.to_dict() for r in result.records)),
        "trajectories": write_jsonl(out_dir / "trajectories.jsonl", (t.to_dict() for t in result.trajectories)),
        "stats": write_json(out_dir / "stats.json", {**result.stats.to_dict(), "dictionary_counts": dictionary.counts()}),
        "tokenizer": result.tokenizer.save(out_dir / "tokenizer.json"),
    }
    return paths


def group_by_trajectory(records: Sequence[SyfisRecord]) -> Dict[str, List[SyfisRecord]]:
    groups: Dict[str, List[SyfisRecord]] = {}
    for record in records:
        groups.setdefault(record.trajectory_id, []).append(record)
    for group in groups.values():
        group.sort(key=lambda r: r.step_index)
    return groups


def split_trajectory_ids(trajectory_ids, fraction: float, seed: int) -> Tuple[List[str], List[str]]:
    """Deterministic (train, held-out) split of trajectory ids"""
    ids = sorted(set(trajectory_ids))
    if len(ids) < 2:
        return ids, []
    rng = np.random.default_rng([seed, 202])
    order = rng.permutation(len(ids))
    held_count = min(len(ids) - 1, max(1, int(round(fraction * len(ids)))))
    held = {ids[i] for i in order[:held_count]}
    return [i for i in ids if i not in held], [i for i in ids if i in held]
