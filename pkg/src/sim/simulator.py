import logging
import threading
import weakref
from typing import Dict, List, Tuple

import networkx as nx

from ..models.world import (
    CandidateEntry,
    CandidateSet,
    EnvironmentGraph,
    PanoramicObservation,
    Viewpoint,
)
from ..utils.errors import NoPathError, NotFoundError
from . import geometry

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-9


class WorldSimulator:
    """Read-only navigation queries over one world, with cached distance fields.

    Safe to share across threads: the graph never changes and cache fills are
    guarded by a lock.
    """

    def __init__(self, graph: EnvironmentGraph):
        self.graph = graph
        self.nx_graph = nx.Graph()
        self.nx_graph.add_nodes_from(graph.node_ids)
        for a, b, dist in graph.edges:
            self.nx_graph.add_edge(a, b, weight=dist)
        self._distance_cache: Dict[str, Dict[str, float]] = {}
        self._observe_cache: Dict[Tuple[str, float], Tuple[PanoramicObservation, CandidateSet]] = {}
        self._lock = threading.Lock()

    def _check(self, viewpoint_id: str) -> Viewpoint:
        return self.graph.viewpoint(viewpoint_id)

    def distances_to(self, goal: str) -> Dict[str, float]:
        """Geodesic distance of every reachable node to ``goal``"""
        self._check(goal)
        with self._lock:
            cached = self._distance_cache.get(goal)
        if cached is not None:
            return cached
        lengths = nx.single_source_dijkstra_path_length(self.nx_graph, goal, weight="weight")
        with self._lock:
            self._distance_cache[goal] = lengths
        return lengths

    def distance(self, a: str, b: str) -> float:
        self._check(a)
        lengths = self.distances_to(b)
        if a not in lengths:
            raise NoPathError(f"no path from {a} to {b} in world {self.graph.world_id}")
        return lengths[a]

    def next_hop(self, current: str, goal: str) -> str:
        """Neighbor on a shortest path to ``goal``; ties by smallest id"""
        lengths = self.distances_to(goal)
        if current not in lengths:
            raise NoPathError(f"goal {goal} unreachable from {current} in world {self.graph.world_id}")
        here = lengths[current]
        best = None
        for neighbor, weight in sorted(self.graph.neighbors(current).items()):
            if neighbor not in lengths:
                continue
            slack = abs(weight + lengths[neighbor] - here)
            if slack <= TIE_TOLERANCE * max(1.0, here):
                best = neighbor
                break
        if best is None:
            # float drift: fall back to the neighbor minimizing weight + remaining distance
            best = min(
                (n for n in self.graph.neighbors(current) if n in lengths),
                key=lambda n: (self.graph.neighbors(current)[n] + lengths[n], n),
            )
        return best

    def shortest_path(self, a: str, b: str) -> Tuple[List[str], float]:
        self._check(a)
        self._check(b)
        path = [a]
        length = 0.0
        current = a
        while current != b:
            nxt = self.next_hop(current, b)
            length += self.graph.neighbors(current)[nxt]
            path.append(nxt)
            current = nxt
        return path, length

    def path_length(self, path: List[str]) -> float:
        total = 0.0
        for a, b in zip(path, path[1:]):
            if a == b:
                continue
            neighbors = self.graph.neighbors(a)
            if b not in neighbors:
                raise NoPathError(f"{a} and {b} are not adjacent in world {self.graph.world_id}")
            total += neighbors[b]
        return total

    def observe(self, viewpoint_id: str, heading: float) -> Tuple[PanoramicObservation, CandidateSet]:
        here = self._check(viewpoint_id)
        key = (viewpoint_id, round(heading % 360.0, 9))
        with self._lock:
            cached = self._observe_cache.get(key)
        if cached is not None:
            return cached

        entries = []
        for neighbor_id in self.graph.neighbors(viewpoint_id):
            target = self.graph.viewpoint(neighbor_id)
            d_heading, d_elevation = geometry.relative_orientation(here.position, heading, target.position)
            h_index = geometry.heading_index(geometry.bearing(here.position, target.position))
            e_index = geometry.elevation_index(d_elevation)
            view = here.view(h_index, e_index)
            entries.append(CandidateEntry(
                viewpoint_id=neighbor_id,
                relative_heading=d_heading,
                relative_elevation=d_elevation,
                feature=view.feature,
                object_labels=view.object_labels,
                heading_index=h_index,
                elevation_index=e_index,
            ))
        entries.sort(key=lambda entry: (entry.relative_heading, entry.relative_elevation, entry.viewpoint_id))

        stop_heading = geometry.heading_index(heading)
        stop_view = here.view(stop_heading, 0)
        entries.append(CandidateEntry(
            viewpoint_id=viewpoint_id,
            relative_heading=0.0,
            relative_elevation=-30.0,
            feature=stop_view.feature,
            object_labels=stop_view.object_labels,
            is_stop=True,
            heading_index=stop_heading,
            elevation_index=0,
        ))
        result = (PanoramicObservation(viewpoint_id, heading, dict(here.views)), CandidateSet(entries))
        with self._lock:
            self._observe_cache[key] = result
        return result

    def teacher_action(self, current: str, goal: str, heading: float) -> int:
        self._check(current)
        self._check(goal)
        _, candidates = self.observe(current, heading)
        if current == goal:
            return candidates.stop_index
        nxt = self.next_hop(current, goal)
        index = candidates.index_of(nxt)
        if index is None:
            raise NotFoundError(f"next hop {nxt} missing from candidates at {current}")
        return index

    def move(self, current: str, heading: float, candidates: CandidateSet, action: int) -> Tuple[str, float]:
        """Apply a candidate choice; STOP keeps position and heading"""
        entry = candidates[action]
        if entry.is_stop:
            return current, heading
        source = self.graph.viewpoint(current).position
        target = self.graph.viewpoint(entry.viewpoint_id).position
        return entry.viewpoint_id, geometry.bearing(source, target)


_simulators: "weakref.WeakKeyDictionary[EnvironmentGraph, WorldSimulator]" = weakref.WeakKeyDictionary()
_simulators_lock = threading.Lock()


def simulator_for(graph: EnvironmentGraph) -> WorldSimulator:
    with _simulators_lock:
        sim = _simulators.get(graph)
        if sim is None:
            sim = WorldSimulator(graph)
            _simulators[graph] = sim
        return sim


def shortest_path(graph: EnvironmentGraph, a: str, b: str) -> Tuple[List[str], float]:
    return simulator_for(graph).shortest_path(a, b)


def relative_orientation(current: Viewpoint, heading: float, target: Viewpoint) -> Tuple[float, float]:
    return geometry.relative_orientation(current.position, heading, target.position)


def observe(graph: EnvironmentGraph, viewpoint_id: str, heading: float) -> Tuple[PanoramicObservation, CandidateSet]:
    return simulator_for(graph).observe(viewpoint_id, heading)


def teacher_action(graph: EnvironmentGraph, current: str, goal: str, heading: float) -> int:
    return simulator_for(graph).teacher_action(current, goal, heading)
