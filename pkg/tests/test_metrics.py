import csv
import itertools
import math
from types import SimpleNamespace

import numpy as np
import pytest
from PIL import Image

from src.metrics.figures import render_overlap_chart, render_world_map
from src.metrics.overlap import (
    BIN_COUNT,
    OverlapReport,
    PathLandmarks,
    landmark_association,
    overlap_bin,
    overlap_percent,
    overlap_report,
)
from src.metrics.report import aggregate_table, order_labels, seed_statistics, write_association_csv, write_episode_csv
from src.metrics.trajectory import (
    METRICS,
    TrajectoryPair,
    aggregate,
    cls,
    distance_matrix,
    dtw,
    dtw_ndtw_sdtw,
    evaluate_episode,
    evaluate_pair,
    metric_rows,
    navigation_error,
    success_rate_spl,
)
from src.models.episode import Episode
from src.utils.errors import ArtifactIOError, InvalidInputError, InvalidParameterError, MalformedTrajectoryError


def ids(*indices):
    return tuple(f"line-{i:03d}" for i in indices)


def brute_force_dtw(costs):
    """Minimum over every monotone alignment path, enumerated explicitly"""
    n, m = costs.shape
    best = math.inf

    def walk(i, j, total):
        nonlocal best
        total += costs[i, j]
        if (i, j) == (n - 1, m - 1):
            best = min(best, total)
            return
        if i + 1 < n:
            walk(i + 1, j, total)
        if j + 1 < m:
            walk(i, j + 1, total)
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, total)
    walk(0, 0, 0.0)
    return best


def random_walk(rng, length, nodes=6):
    position = int(rng.integers(nodes))
    path = [position]
    for _ in range(length - 1):
        position = int(np.clip(position + rng.integers(-1, 2), 0, nodes - 1))
        path.append(position)
    return ids(*path)


def test_identical_paths_score_perfectly(line_graph):
    for path in (ids(0, 1, 2, 3), ids(2), ids(1, 1, 2)):
        result = evaluate_pair(TrajectoryPair(path, path, line_graph))
        assert result.ne == 0.0
        assert result.sr == 1
        assert result.ndtw == pytest.approx(1.0)
        assert result.cls == pytest.approx(1.0)
        assert result.dtw == 0.0


@pytest.mark.parametrize("predicted, radius, expected", [
    (ids(0, 1, 2), 1.0, 1.0),
    (ids(0, 1), 0.5, 0.0),
    (ids(0, 1, 2, 3, 2), 1.0, 0.5),
])
def test_spl(line_graph, predicted, radius, expected):
    sr, spl = success_rate_spl(TrajectoryPair(predicted, ids(0, 1, 2), line_graph, radius))
    assert spl == pytest.approx(expected)
    assert sr == int(expected > 0)


def test_spl_when_start_is_goal(line_graph):
    assert success_rate_spl(TrajectoryPair(ids(3), ids(3), line_graph)) == (1, 1.0)
    assert success_rate_spl(TrajectoryPair(ids(0), ids(3), line_graph)) == (0, 0.0)


def test_navigation_error_is_geodesic(line_graph):
    assert navigation_error(TrajectoryPair(ids(2, 1, 0), ids(2, 3), line_graph)) == pytest.approx(3.0)


def test_dtw_matches_exhaustive_alignment(line_graph):
    rng = np.random.default_rng(21)
    for _ in range(150):
        p = random_walk(rng, int(rng.integers(1, 6)))
        r = random_walk(rng, int(rng.integers(1, 6)))
        pair = TrajectoryPair(p, r, line_graph)
        costs = distance_matrix(pair)
        assert dtw(costs) == pytest.approx(brute_force_dtw(costs))
        total, ndtw, _ = dtw_ndtw_sdtw(pair)
        assert ndtw == pytest.approx(math.exp(-total / len(r)))


def test_metric_bounds_and_dtw_reversal(line_graph):
    rng = np.random.default_rng(5)
    for _ in range(100):
        p = random_walk(rng, int(rng.integers(1, 7)))
        r = random_walk(rng, int(rng.integers(1, 7)))
        result = evaluate_pair(TrajectoryPair(p, r, line_graph, success_radius=1.5))
        assert result.ne >= 0.0
        assert 0.0 <= result.spl <= result.sr
        assert 0.0 < result.ndtw <= 1.0
        assert result.sdtw == pytest.approx(result.sr * result.ndtw)
        assert 0.0 <= result.cls <= 1.0 + 1e-12
        backwards = TrajectoryPair(p[::-1], r[::-1], line_graph, success_radius=1.5)
        assert dtw(distance_matrix(backwards)) == pytest.approx(result.dtw)
        swapped = TrajectoryPair(r, p, line_graph, success_radius=1.5)
        assert dtw(distance_matrix(swapped)) == pytest.approx(result.dtw)


def test_cls_penalizes_detours(line_graph):
    direct = cls(TrajectoryPair(ids(0, 1, 2), ids(0, 1, 2), line_graph))
    detour = cls(TrajectoryPair(ids(0, 1, 2, 3, 4, 3, 2), ids(0, 1, 2), line_graph))
    assert detour < direct


def test_pair_validation(line_graph):
    with pytest.raises(InvalidInputError):
        TrajectoryPair((), ids(0), line_graph)
    with pytest.raises(InvalidParameterError):
        TrajectoryPair(ids(0), ids(0), line_graph, success_radius=0.0)
    with pytest.raises(MalformedTrajectoryError):
        TrajectoryPair(ids(0, 2), ids(0, 1, 2), line_graph)


def test_evaluate_episode_and_aggregate(line_graph):
    episode = Episode("e1", "line", ids(0)[0], ids(2)[0], "greedy", [2, 3], path=list(ids(0, 1, 2)))
    result = evaluate_episode(episode, ids(0, 1, 2), line_graph, 1.0)
    assert result.sr == 1 and result.path_length == pytest.approx(2.0)
    failed = evaluate_pair(TrajectoryPair(ids(0), ids(0, 1, 2), line_graph, 1.0))
    summary = aggregate([result, failed])
    assert summary["episodes"] == 2
    assert summary["sr"] == pytest.approx(0.5)
    assert summary["ne"] == pytest.approx(1.0)
    assert aggregate([]) == {"episodes": 0, **{name: 0.0 for name in METRICS}}
    rows = metric_rows([result, failed], ["e1", "e2"])
    assert [row["episode_id"] for row in rows] == ["e1", "e2"]


@pytest.mark.parametrize("percent, expected", [(0.0, 0), (9.99, 0), (10.0, 1), (55.0, 5), (99.9, 9), (100.0, 10)])
def test_overlap_bin(percent, expected):
    assert overlap_bin(percent) == expected


def test_overlap_report(world, detector):
    start = world.node_ids[0]
    landmarks = PathLandmarks(detector, k=2, tau=0.1)
    present = sorted(landmarks.at(world, start))
    vocabulary = detector.vocabulary
    mentions = {
        "full": [vocabulary.label(i) for i in present[:2]],
        "everything": [vocabulary.label(i) for i in range(vocabulary.size)],
    }
    episodes = [
        Episode(eid, world.world_id, start, start, "greedy", [2], path=[start])
        for eid in ("full", "everything", "silent")
    ]
    report = overlap_report(episodes, mentions, {world.world_id: world}, detector, 2, 0.1, {"full": 1})
    assert report.excluded == 1
    assert report.included == 2
    assert report.per_episode["full"] == pytest.approx(100.0)
    assert report.per_episode["everything"] == pytest.approx(overlap_percent(set(range(vocabulary.size)), set(present)))
    assert report.success_counts[BIN_COUNT - 1] == 1
    assert sum(report.success_counts) == 1
    assert report.to_dict()["included"] == 2


def test_landmark_association():
    def record(tid, step, landmark):
        return SimpleNamespace(trajectory_id=tid, step_index=step, positive=SimpleNamespace(landmark=landmark))
    records = [
        record("t1", 0, "door"), record("t1", 1, "lamp"),
        record("t2", 0, "door"),
        record("t3", 0, "lamp"), record("t3", 1, "sofa"), record("t3", 2, "lamp"),
    ]
    association = landmark_association(records)
    assert association == {
        "door": {"lamp": 50.0},
        "lamp": {"door": 50.0, "sofa": 50.0},
        "sofa": {"lamp": 100.0},
    }


def _summary(value):
    return {"episodes": 4, **{name: value for name in METRICS}}


def test_aggregate_table_orders_ladder_and_reports_spread():
    runs = [
        {"label": "custom", "seed": 1, "splits": {"seen": _summary(0.1)}},
        {"label": "+SIG", "seed": 1, "splits": {"seen": _summary(0.3), "unseen": _summary(0.2)}},
        {"label": "Baseline", "seed": 2, "splits": {"seen": _summary(0.4)}},
        {"label": "Baseline", "seed": 1, "splits": {"seen": _summary(0.2)}},
    ]
    lines = aggregate_table(runs).splitlines()
    assert lines[0].split("\t") == ["run", "split", "seeds", "NE", "SR", "SPL", "CLS", "nDTW", "sDTW"]
    rows = [line.split("\t") for line in lines[1:]]
    assert [(r[0], r[1]) for r in rows] == [("Baseline", "seen"), ("+SIG", "seen"), ("+SIG", "unseen"), ("custom", "seen")]
    assert rows[0][2] == "2"
    assert rows[0][3] == "0.3000±0.1000"
    assert rows[1][3] == "0.3000"
    assert order_labels(["+SIG+DSL+SS", "zeta", "Baseline", "alpha"]) == ["Baseline", "+SIG+DSL+SS", "alpha", "zeta"]


def test_seed_statistics():
    stats = seed_statistics([_summary(1.0), _summary(3.0)])
    assert stats["sr"] == {"mean": 2.0, "std": 1.0}
    assert stats["seeds"]["mean"] == 2.0


def test_csv_writers(tmp_path, line_graph):
    result = evaluate_pair(TrajectoryPair(ids(0, 1), ids(0, 1, 2), line_graph))
    path = write_episode_csv(tmp_path / "episodes.csv", metric_rows([result], ["e1"]))
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    assert rows[0]["episode_id"] == "e1"
    assert float(rows[0]["ne"]) == pytest.approx(result.ne)
    path = write_association_csv(tmp_path / "assoc.csv", {"door": {"lamp": 50.0}})
    assert path.read_text().splitlines() == ["landmark,co_landmark,percent", "door,lamp,50.0"]


def test_figures(tmp_path, two_floor_world):
    report = OverlapReport()
    report.all_counts[3] = 4
    report.success_counts[3] = 2
    chart = render_overlap_chart(report, tmp_path / "overlap.png")
    with Image.open(chart) as image:
        assert image.size == (640, 360)
    world_map = render_world_map(two_floor_world, tmp_path / "maps" / "world.png", size=200)
    with Image.open(world_map) as image:
        assert image.size == (200, 200)
    blocker = tmp_path / "blocker"
    blocker.write_text("x")
    with pytest.raises(ArtifactIOError):
        render_overlap_chart(report, blocker / "overlap.png")


def test_exhaustive_small_grid_agrees_with_table(line_graph):
    # every pair of short walks over the first three viewpoints
    walks = [ids(*w) for n in (1, 2, 3) for w in itertools.product(range(3), repeat=n)
             if all(abs(a - b) <= 1 for a, b in zip(w, w[1:]))]
    for p, r in itertools.product(walks, repeat=2):
        costs = distance_matrix(TrajectoryPair(p, r, line_graph))
        assert dtw(costs) == pytest.approx(brute_force_dtw(costs))
