"""Path-level navigation metrics on a world graph.

All node-to-node distances are geodesic. The success radius doubles as the
DTW and coverage distance scale.
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..models.episode import Episode
from ..models.world import EnvironmentGraph
from ..sim.simulator import simulator_for
from ..utils.errors import InvalidInputError, InvalidParameterError, MalformedTrajectoryError

logger = logging.getLogger(__name__)

METRICS = ("ne", "sr", "spl", "cls", "ndtw", "sdtw")


@dataclass(frozen=True)
class TrajectoryPair:
    predicted: Tuple[str, ...]
    reference: Tuple[str, ...]
    graph: EnvironmentGraph
    success_radius: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "predicted", tuple(self.predicted))
        object.__setattr__(self, "reference", tuple(self.reference))
        if not self.predicted or not self.reference:
            raise InvalidInputError("trajectory pair needs non-empty predicted and reference paths")
        if self.success_radius <= 0:
            raise InvalidParameterError(f"success radius must be > 0, got {self.success_radius}")
        for name, path in (("predicted", self.predicted), ("reference", self.reference)):
            for a, b in zip(path, path[1:]):
                if a != b and b not in self.graph.neighbors(a):
                    raise MalformedTrajectoryError(f"{name} path steps from {a} to non-adjacent {b}")

    def distance(self, a: str, b: str) -> float:
        return simulator_for(self.graph).distance(a, b)

    def length(self, path: Sequence[str]) -> float:
        return simulator_for(self.graph).path_length(list(path))


@dataclass
class EvalResult:
    ne: float
    sr: int
    spl: float
    cls: float
    ndtw: float
    sdtw: float
    dtw: float = 0.0
    path_length: float = 0.0

    def to_dict(self) -> Dict:
        return asdict(self)


def navigation_error(pair: TrajectoryPair) -> float:
    return pair.distance(pair.predicted[-1], pair.reference[-1])


def success_rate_spl(pair: TrajectoryPair) -> Tuple[int, float]:
    sr = int(navigation_error(pair) <= pair.success_radius)
    shortest = pair.distance(pair.reference[0], pair.reference[-1])
    taken = pair.length(pair.predicted)
    longest = max(taken, shortest)
    if longest == 0.0:
        return sr, float(sr)
    return sr, sr * shortest / longest


def distance_matrix(pair: TrajectoryPair) -> np.ndarray:
    """Geodesic distance of every predicted node (rows) to every reference node (columns)"""
    return np.array([[pair.distance(p, r) for r in pair.reference] for p in pair.predicted])


def dtw(costs: np.ndarray) -> float:
    """Minimum total cost over monotone alignments of the two index sequences"""
    n, m = costs.shape
    table = np.full((n + 1, m + 1), np.inf)
    table[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            table[i, j] = costs[i - 1, j - 1] + min(table[i - 1, j], table[i, j - 1], table[i - 1, j - 1])
    return float(table[n, m])


def dtw_ndtw_sdtw(pair: TrajectoryPair) -> Tuple[float, float, float]:
    total = dtw(distance_matrix(pair))
    ndtw = math.exp(-total / (len(pair.reference) * pair.success_radius))
    sr, _ = success_rate_spl(pair)
    return total, ndtw, sr * ndtw


def cls(pair: TrajectoryPair) -> float:
    """Path coverage of the reference times a length score against the expected length"""
    costs = distance_matrix(pair)
    coverage = float(np.mean(np.exp(-costs.min(axis=0) / pair.success_radius)))
    expected = coverage * pair.length(pair.reference)
    taken = pair.length(pair.predicted)
    denominator = expected + abs(expected - taken)
    length_score = expected / denominator if denominator > 0 else 1.0
    return coverage * length_score


def evaluate_pair(pair: TrajectoryPair) -> EvalResult:
    ne = navigation_error(pair)
    sr, spl = success_rate_spl(pair)
    total, ndtw, sdtw = dtw_ndtw_sdtw(pair)
    return EvalResult(
        ne=ne, sr=sr, spl=spl, cls=cls(pair), ndtw=ndtw, sdtw=sdtw, dtw=total, path_length=pair.length(pair.predicted)
    )


def evaluate_episode(episode: Episode, reference: Sequence[str], graph: EnvironmentGraph, success_radius: float) -> EvalResult:
    return evaluate_pair(TrajectoryPair(tuple(episode.path), tuple(reference), graph, success_radius))


def aggregate(results: Sequence[EvalResult]) -> Dict[str, float]:
    """Unweighted means of every per-episode metric"""
    if not results:
        return {"episodes": 0, **{name: 0.0 for name in METRICS}}
    summary: Dict[str, float] = {"episodes": len(results)}
    for name in METRICS + ("path_length",):
        summary[name] = float(np.mean([getattr(r, name) for r in results]))
    return summary


def metric_rows(results: Sequence[EvalResult], episode_ids: Sequence[str]) -> List[Dict]:
    return [{"episode_id": eid, **r.to_dict()} for eid, r in zip(episode_ids, results)]
