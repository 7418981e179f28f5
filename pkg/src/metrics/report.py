"""Result tables: per-episode CSV, aggregate rows per run and split, seed statistics"""
import csv
import io
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from ..utils.io import fmt_float, write_text
from .trajectory import METRICS

logger = logging.getLogger(__name__)

LADDER = ("Baseline", "+SIG", "+SIG+DSL", "+SIG+DSL+SS")
EPISODE_COLUMNS = ("episode_id",) + METRICS + ("dtw", "path_length")
TABLE_HEADERS = {"ne": "NE", "sr": "SR", "spl": "SPL", "cls": "CLS", "ndtw": "nDTW", "sdtw": "sDTW"}


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_float(v) if isinstance(v, float) else v for v in row])
    return buffer.getvalue()


def write_episode_csv(path: Path, rows: Sequence[Mapping]) -> Path:
    return write_text(path, _csv_text(EPISODE_COLUMNS, [[row[c] for c in EPISODE_COLUMNS] for row in rows]))


def seed_statistics(summaries: Sequence[Mapping[str, float]]) -> Dict[str, Dict[str, float]]:
    """Mean and population standard deviation of each metric across seeds"""
    stats = {}
    for name in METRICS:
        values = np.array([s[name] for s in summaries], dtype=np.float64)
        stats[name] = {
            "mean": float(values.mean()) if len(values) else 0.0,
            "std": float(values.std()) if len(values) else 0.0,
        }
    stats["seeds"] = {"mean": float(len(summaries)), "std": 0.0}
    return stats


def order_labels(labels) -> List[str]:
    """Ablation ladder rows first, in ladder order, then the rest alphabetically"""
    present = set(labels)
    return [l for l in LADDER if l in present] + sorted(present - set(LADDER))


def group_runs(runs: Sequence[Mapping]) -> Dict[Tuple[str, str], List[Mapping[str, float]]]:
    """(label, split) -> per-seed aggregate summaries"""
    grouped: Dict[Tuple[str, str], List[Mapping[str, float]]] = {}
    for run in sorted(runs, key=lambda r: (r["label"], r["seed"])):
        for split, summary in sorted(run["splits"].items()):
            grouped.setdefault((run["label"], split), []).append(summary)
    return grouped


def aggregate_table(runs: Sequence[Mapping], delimiter: str = "\t") -> str:
    """One row per (run label, split): seed means, with ± std when more than one seed"""
    grouped = group_runs(runs)
    header = ["run", "split", "seeds"] + [TABLE_HEADERS[m] for m in METRICS]
    lines = [delimiter.join(header)]
    labels = order_labels(label for label, _ in grouped)
    for label in labels:
        for split in sorted(split for (l, split) in grouped if l == label):
            summaries = grouped[(label, split)]
            stats = seed_statistics(summaries)
            cells = [label, split, str(len(summaries))]
            for name in METRICS:
                cell = f"{stats[name]['mean']:.4f}"
                if len(summaries) > 1:
                    cell += f"±{stats[name]['std']:.4f}"
                cells.append(cell)
            lines.append(delimiter.join(cells))
    return "\n".join(lines) + "\n"


def write_association_csv(path: Path, association: Mapping[str, Mapping[str, float]]) -> Path:
    rows = [[x, y, pct] for x in sorted(association) for y, pct in sorted(association[x].items())]
    return write_text(path, _csv_text(("landmark", "co_landmark", "percent"), rows))
