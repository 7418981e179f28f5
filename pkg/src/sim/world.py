"""Procedural graph worlds: perturbed multi-floor lattices with object annotations."""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from ..models.world import (
    ELEVATION_COUNT,
    HEADING_COUNT,
    EnvironmentGraph,
    Vec3,
    View,
    Viewpoint,
)
from ..utils.errors import InvalidParameterError
from .geometry import bearing, elevation, elevation_index, heading_index

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WorldParams:
    node_count: int = 20
    floors: int = 2
    spacing: float = 1.0
    floor_height: float = 1.0
    jitter: float = 0.08
    extra_edge_prob: float = 0.25
    stairs_per_floor: int = 2
    vocab_size: int = 32
    feature_dim: int = 0
    anchored_objects: int = 2
    clutter_density: float = 1.5
    zipf_exponent: float = 1.1
    sight_radius: float = 1.75
    feature_noise: float = 0.05

    @classmethod
    def from_config(cls, config) -> "WorldParams":
        w = config.world
        return cls(
            node_count=w.node_count,
            floors=w.floors,
            spacing=w.spacing,
            floor_height=w.floor_height,
            jitter=w.jitter,
            extra_edge_prob=w.extra_edge_prob,
            stairs_per_floor=w.stairs_per_floor,
            vocab_size=w.vocab_size,
            feature_dim=w.feature_dim,
            anchored_objects=w.anchored_objects,
            clutter_density=w.clutter_density,
            zipf_exponent=w.zipf_exponent,
            sight_radius=w.sight_radius,
            feature_noise=config.detector.noise,
        )

    @property
    def dim(self) -> int:
        return self.feature_dim or self.vocab_size


def zipf_weights(size: int, exponent: float) -> np.ndarray:
    ranks = np.arange(1, size + 1, dtype=np.float64)
    weights = ranks ** (-exponent)
    return weights / weights.sum()


def bag_of_objects_feature(labels: Iterable[int], dim: int, noise: float, rng: Optional[np.random.Generator]) -> np.ndarray:
    """L2-normalized indicator vector plus Gaussian noise"""
    feature = np.zeros(dim, dtype=np.float64)
    for label in labels:
        feature[label] = 1.0
    norm = np.linalg.norm(feature)
    if norm > 0:
        feature /= norm
    if noise > 0 and rng is not None:
        feature += rng.normal(0.0, noise, size=dim)
    feature.setflags(write=False)
    return feature


def _lattice(rng: np.random.Generator, params: WorldParams) -> Tuple[List[Vec3], Set[Tuple[int, int]]]:
    floors = max(1, min(params.floors, params.node_count))
    per_floor = [params.node_count // floors + (1 if f < params.node_count % floors else 0) for f in range(floors)]
    positions: List[Vec3] = []
    cells: List[Tuple[int, int, int]] = []
    edges: Set[Tuple[int, int]] = set()
    floor_nodes: List[List[int]] = []

    for f, count in enumerate(per_floor):
        width = int(math.ceil(math.sqrt(count)))
        start = len(positions)
        grid: Dict[Tuple[int, int], int] = {}
        for k in range(count):
            col, row = k % width, k // width
            x = col * params.spacing + rng.normal(0.0, params.jitter)
            y = row * params.spacing + rng.normal(0.0, params.jitter)
            z = f * params.floor_height + rng.normal(0.0, params.jitter * 0.25)
            positions.append(Vec3(float(x), float(y), float(z)))
            cells.append((f, col, row))
            grid[(col, row)] = start + k
        for (col, row), node in grid.items():
            for dc, dr in ((1, 0), (0, 1)):
                other = grid.get((col + dc, row + dr))
                if other is not None:
                    edges.add((node, other))
        # diagonal shortcuts, visited in node order for determinism
        for k in range(count):
            col, row = k % width, k // width
            for dc in (1, -1):
                other = grid.get((col + dc, row + 1))
                if other is not None and rng.random() < params.extra_edge_prob:
                    edges.add((min(start + k, other), max(start + k, other)))
        floor_nodes.append(list(range(start, start + count)))

    for f in range(floors - 1):
        lower, upper = floor_nodes[f], floor_nodes[f + 1]
        for _ in range(max(1, params.stairs_per_floor)):
            a = lower[int(rng.integers(len(lower)))]
            angle = math.radians(90.0 * int(rng.integers(4)))
            target = (positions[a].x + params.spacing * math.sin(angle),
                      positions[a].y + params.spacing * math.cos(angle))
            b = min(upper, key=lambda n: ((positions[n].x - target[0]) ** 2 + (positions[n].y - target[1]) ** 2, n))
            edges.add((min(a, b), max(a, b)))
    return positions, edges


def _views_for(
    node: int,
    positions: Sequence[Vec3],
    anchored: Sequence[Sequence[int]],
    params: WorldParams,
    rng: np.random.Generator,
    clutter_p: np.ndarray,
) -> Dict[Tuple[int, int], View]:
    visible: Dict[Tuple[int, int], Set[int]] = {
        (h, e): set() for h in range(HEADING_COUNT) for e in range(ELEVATION_COUNT)
    }
    here = positions[node]
    for other, pos in enumerate(positions):
        if other == node or here.distance(pos) > params.sight_radius:
            continue
        key = (heading_index(bearing(here, pos)), elevation_index(elevation(here, pos)))
        visible[key].update(anchored[other])
    views = {}
    for (h, e), labels in sorted(visible.items()):
        objects = set(labels)
        if e == 0:
            objects.update(anchored[node])
        clutter_count = int(rng.poisson(params.clutter_density))
        if clutter_count:
            objects.update(int(c) for c in rng.choice(params.vocab_size, size=clutter_count, p=clutter_p))
        views[(h, e)] = View(frozenset(objects), bag_of_objects_feature(sorted(objects), params.dim, params.feature_noise, rng))
    return views


def assemble_world(
    world_id: str,
    seed: int,
    positions: Sequence[Vec3],
    edge_pairs: Iterable[Tuple[int, int]],
    params: WorldParams,
    split: str = "seen",
    rng: Optional[np.random.Generator] = None,
    ids: Optional[Sequence[str]] = None,
) -> EnvironmentGraph:
    """Annotate a laid-out graph with objects and views"""
    if params.vocab_size < 2:
        raise InvalidParameterError(f"vocabulary size must be >= 2, got {params.vocab_size}")
    if params.dim < params.vocab_size:
        raise InvalidParameterError(f"feature_dim {params.dim} smaller than vocabulary {params.vocab_size}")
    rng = rng if rng is not None else np.random.default_rng(seed)
    ids = list(ids) if ids is not None else [f"{world_id}-{i:03d}" for i in range(len(positions))]

    anchored_p = zipf_weights(params.vocab_size, params.zipf_exponent / 2.0)  # flatter than clutter
    clutter_p = zipf_weights(params.vocab_size, params.zipf_exponent)
    count = min(params.anchored_objects, params.vocab_size)
    anchored = [
        sorted(int(c) for c in rng.choice(params.vocab_size, size=count, replace=False, p=anchored_p))
        for _ in positions
    ]
    viewpoints = [
        Viewpoint(ids[i], positions[i], _views_for(i, positions, anchored, params, rng, clutter_p))
        for i in range(len(positions))
    ]
    edges = []
    for a, b in sorted({(min(a, b), max(a, b)) for a, b in edge_pairs if a != b}):
        edges.append((ids[a], ids[b], positions[a].distance(positions[b])))
    return EnvironmentGraph(world_id, int(seed), split, viewpoints, edges)


def generate_world(seed: int, params: WorldParams, world_id: Optional[str] = None, split: str = "seen") -> EnvironmentGraph:
    """Deterministic in (seed, params)"""
    if params.node_count < 2:
        raise InvalidParameterError(f"node_count must be >= 2, got {params.node_count}")
    if params.vocab_size < 2:
        raise InvalidParameterError(f"vocabulary size must be >= 2, got {params.vocab_size}")
    rng = np.random.default_rng(seed)
    world_id = world_id or f"w{seed}"
    positions, edges = _lattice(rng, params)
    graph = assemble_world(world_id, seed, positions, edges, params, split=split, rng=rng)
    logger.debug("generated world %s: %d viewpoints, %d edges", world_id, len(graph.viewpoints), len(graph.edges))
    return graph


def world_seeds(base_seed: int, count: int, offset: int = 0) -> List[int]:
    """Seen and unseen splits draw from disjoint seed ranges via ``offset``"""
    return [base_seed * 10_000 + offset + i for i in range(count)]
