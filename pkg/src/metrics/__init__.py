from .figures import render_overlap_chart, render_world_map
from .overlap import (
    OverlapReport,
    PathLandmarks,
    instruction_landmarks,
    landmark_association,
    overlap_bin,
    overlap_report,
)
from .report import LADDER, aggregate_table, order_labels, seed_statistics, write_association_csv, write_episode_csv
from .trajectory import (
    METRICS,
    EvalResult,
    TrajectoryPair,
    aggregate,
    cls,
    dtw,
    dtw_ndtw_sdtw,
    evaluate_episode,
    evaluate_pair,
    metric_rows,
    navigation_error,
    success_rate_spl,
)

__all__ = [
    "EvalResult",
    "LADDER",
    "METRICS",
    "OverlapReport",
    "PathLandmarks",
    "TrajectoryPair",
    "aggregate",
    "aggregate_table",
    "cls",
    "dtw",
    "dtw_ndtw_sdtw",
    "evaluate_episode",
    "evaluate_pair",
    "instruction_landmarks",
    "landmark_association",
    "metric_rows",
    "navigation_error",
    "order_labels",
    "overlap_bin",
    "overlap_report",
    "render_overlap_chart",
    "render_world_map",
    "seed_statistics",
    "success_rate_spl",
    "write_association_csv",
    "write_episode_csv",
]
