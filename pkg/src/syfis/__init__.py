from .builder import (
    DatasetResult,
    DatasetStats,
    Skip,
    SyfisBuilder,
    build_record,
    compose_subinstruction,
    compose_trajectory_instruction,
    generate_dataset,
    group_by_trajectory,
    sample_trajectories,
    split_trajectory_ids,
    step_heading,
    trajectory_instruction,
)
from .motion import DEFAULT_PHRASES, MotionIndicatorDictionary, select_motion_category
from .tokenizer import PAD_ID, UNK_ID, Tokenizer, normalize_text, pad_tokens

__all__ = [
    "DEFAULT_PHRASES",
    "DatasetResult",
    "DatasetStats",
    "MotionIndicatorDictionary",
    "PAD_ID",
    "Skip",
    "SyfisBuilder",
    "Tokenizer",
    "UNK_ID",
    "build_record",
    "compose_subinstruction",
    "compose_trajectory_instruction",
    "generate_dataset",
    "group_by_trajectory",
    "normalize_text",
    "pad_tokens",
    "sample_trajectories",
    "split_trajectory_ids",
    "select_motion_category",
    "step_heading",
    "trajectory_instruction",
]
