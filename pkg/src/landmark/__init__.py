from .detector import (
    Detector,
    LandmarkPartition,
    SyntheticDetector,
    classify_landmarks,
    dump_scores_csv,
    label_probabilities,
    rank_labels,
    recognizable_landmarks,
    similarity_scores,
)
from .vocabulary import DEFAULT_LABELS, LabelVocabulary

__all__ = [
    "DEFAULT_LABELS",
    "Detector",
    "LabelVocabulary",
    "LandmarkPartition",
    "SyntheticDetector",
    "classify_landmarks",
    "dump_scores_csv",
    "label_probabilities",
    "rank_labels",
    "recognizable_landmarks",
    "similarity_scores",
]
