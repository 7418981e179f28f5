"""Label scoring and landmark classes for candidate views.

The detector plays the role of a contrastive image-text model: it scores each
vocabulary label against a view feature with a cosine similarity, and a
temperature softmax turns the scores into label probabilities. In the method
this mirrors, labels are scored through prompts such as "a photo of {label}";
here the synthetic detector embeds each label as an indicator direction of the
bag-of-objects feature space.
"""
import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, List, Protocol, Sequence, Union

import numpy as np
from scipy.special import softmax

from ..models.world import View
from ..utils.errors import ContractError, InvalidParameterError
from .vocabulary import LabelVocabulary

logger = logging.getLogger(__name__)

ViewLike = Union[View, np.ndarray]


class Detector(Protocol):
    vocabulary: LabelVocabulary

    @property
    def dim(self) -> int: ...

    def score(self, feature: np.ndarray, label_id: int) -> float: ...

    def scores(self, feature: np.ndarray) -> np.ndarray: ...


class SyntheticDetector:
    """Cosine similarity against per-label indicator embeddings"""

    def __init__(self, vocabulary: LabelVocabulary, dim: int = 0):
        self.vocabulary = vocabulary
        self._dim = dim or vocabulary.size
        if self._dim < vocabulary.size:
            raise InvalidParameterError(f"detector dim {self._dim} smaller than vocabulary {vocabulary.size}")
        self.label_embeddings = np.eye(vocabulary.size, self._dim, dtype=np.float64)

    @property
    def dim(self) -> int:
        return self._dim

    def scores(self, feature: np.ndarray) -> np.ndarray:
        feature = np.asarray(feature, dtype=np.float64)
        if feature.shape != (self._dim,):
            raise ContractError(f"view feature shape {feature.shape} does not match detector dim ({self._dim},)")
        norm = np.linalg.norm(feature)
        if norm == 0.0:
            return np.zeros(self.vocabulary.size, dtype=np.float64)
        # label embeddings are unit rows
        return np.clip(self.label_embeddings @ feature / norm, -1.0, 1.0)

    def score(self, feature: np.ndarray, label_id: int) -> float:
        return float(self.scores(feature)[label_id])


@dataclass(frozen=True)
class LandmarkPartition:
    recognizable: List[List[int]]  # target first, then the other candidates in order
    distinctive: FrozenSet[int]
    nondistinctive: FrozenSet[int]
    irrelevant: FrozenSet[int]
    target_probabilities: np.ndarray
    other_probabilities: np.ndarray  # max probability of each label across other candidates

    @property
    def target(self) -> List[int]:
        return self.recognizable[0]


def _feature(view: ViewLike) -> np.ndarray:
    return view.feature if isinstance(view, View) else np.asarray(view, dtype=np.float64)


def similarity_scores(detector: Detector, view: ViewLike) -> np.ndarray:
    return detector.scores(_feature(view))


def label_probabilities(scores: np.ndarray, tau: float) -> np.ndarray:
    if not tau > 0:
        raise InvalidParameterError(f"temperature must be > 0, got {tau}")
    return softmax(np.asarray(scores, dtype=np.float64) / tau)


def rank_labels(probabilities: np.ndarray) -> List[int]:
    """All label ids by descending probability, ties in vocabulary order"""
    return sorted(range(len(probabilities)), key=lambda i: (-probabilities[i], i))


def recognizable_landmarks(detector: Detector, view: ViewLike, k: int, tau: float) -> List[int]:
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    probabilities = label_probabilities(similarity_scores(detector, view), tau)
    return rank_labels(probabilities)[:k]


def classify_landmarks(
    target: ViewLike,
    others: Sequence[ViewLike],
    detector: Detector,
    k: int,
    tau: float,
) -> LandmarkPartition:
    target_probs = label_probabilities(similarity_scores(detector, target), tau)
    target_top = rank_labels(target_probs)[:k]
    recognizable = [target_top]
    other_union = set()
    other_probs = np.zeros_like(target_probs)
    for view in others:
        probs = label_probabilities(similarity_scores(detector, view), tau)
        top = rank_labels(probs)[:k]
        recognizable.append(top)
        other_union.update(top)
        other_probs = np.maximum(other_probs, probs)
    target_set = set(target_top)
    return LandmarkPartition(
        recognizable=recognizable,
        distinctive=frozenset(target_set - other_union),
        nondistinctive=frozenset(target_set & other_union),
        irrelevant=frozenset(other_union - target_set),
        target_probabilities=target_probs,
        other_probabilities=other_probs,
    )


def dump_scores_csv(detector: Detector, view: ViewLike, path: Path) -> Path:
    """Debug dump of (label, score) rows"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    scores = similarity_scores(detector, view)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["label", "score"])
        for label, score in zip(detector.vocabulary.labels, scores):
            writer.writerow([label, repr(float(score))])
    logger.debug("dumped %d label scores to %s", len(scores), path)
    return path
