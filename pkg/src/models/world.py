import json
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from ..utils.errors import FormatError, NotFoundError
from ..utils.io import fmt_float

HEADING_COUNT = 12
ELEVATION_COUNT = 3
VIEW_INTERVAL = 30.0  # degrees, both axes
ELEVATIONS = (-30.0, 0.0, 30.0)


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite position {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    def distance(self, other: "Vec3") -> float:
        return math.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2)


@dataclass(frozen=True, eq=False)
class View:
    object_labels: FrozenSet[int]
    feature: np.ndarray


@dataclass(frozen=True, eq=False)
class Viewpoint:
    id: str
    position: Vec3
    views: Dict[Tuple[int, int], View]

    def view(self, heading_index: int, elevation_index: int) -> View:
        return self.views[(heading_index % HEADING_COUNT, elevation_index)]


@dataclass(frozen=True, eq=False)
class EnvironmentGraph:
    world_id: str
    seed: int
    split: str
    viewpoints: List[Viewpoint]
    edges: List[Tuple[str, str, float]]
    _index: Dict[str, Viewpoint] = field(init=False, repr=False)
    _adjacency: Dict[str, Dict[str, float]] = field(init=False, repr=False)

    def __post_init__(self):
        index = {vp.id: vp for vp in self.viewpoints}
        adjacency: Dict[str, Dict[str, float]] = {vp.id: {} for vp in self.viewpoints}
        for a, b, dist in self.edges:
            adjacency[a][b] = dist
            adjacency[b][a] = dist
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_adjacency", adjacency)

    @property
    def feature_dim(self) -> int:
        return int(next(iter(self.viewpoints[0].views.values())).feature.shape[0])

    @property
    def node_ids(self) -> List[str]:
        return [vp.id for vp in self.viewpoints]

    def __contains__(self, viewpoint_id: str) -> bool:
        return viewpoint_id in self._index

    def viewpoint(self, viewpoint_id: str) -> Viewpoint:
        try:
            return self._index[viewpoint_id]
        except KeyError:
            raise NotFoundError(f"viewpoint '{viewpoint_id}' not in world {self.world_id}") from None

    def neighbors(self, viewpoint_id: str) -> Dict[str, float]:
        self.viewpoint(viewpoint_id)
        return self._adjacency[viewpoint_id]

    def to_json(self) -> str:
        """Canonical serialization (fixed field order, 17 significant digits)"""
        parts = [
            '{"world_id":', json.dumps(self.world_id),
            ',"seed":', str(int(self.seed)),
            ',"split":', json.dumps(self.split),
            ',"viewpoints":[',
        ]
        vp_parts = []
        for vp in self.viewpoints:
            pos = vp.position
            views = []
            for (h, e) in sorted(vp.views):
                view = vp.views[(h, e)]
                views.append(
                    '{"h":%d,"e":%d,"objects":[%s],"feature":[%s]}' % (
                        h, e,
                        ",".join(str(label) for label in sorted(view.object_labels)),
                        ",".join(fmt_float(v) for v in view.feature),
                    )
                )
            vp_parts.append(
                '{"id":%s,"position":[%s],"views":[%s]}' % (
                    json.dumps(vp.id),
                    ",".join(fmt_float(v) for v in (pos.x, pos.y, pos.z)),
                    ",".join(views),
                )
            )
        parts.append(",".join(vp_parts))
        parts.append('],"edges":[')
        parts.append(",".join(
            "[%s,%s,%s]" % (json.dumps(a), json.dumps(b), fmt_float(d)) for a, b, d in self.edges
        ))
        parts.append("]}")
        return "".join(parts)

    @classmethod
    def from_json(cls, text: str) -> "EnvironmentGraph":
        try:
            data = json.loads(text)
            viewpoints = []
            for vp in data["viewpoints"]:
                views = {}
                for v in vp["views"]:
                    feature = np.array(v["feature"], dtype=np.float64)
                    feature.setflags(write=False)
                    views[(int(v["h"]), int(v["e"]))] = View(frozenset(int(o) for o in v["objects"]), feature)
                viewpoints.append(Viewpoint(vp["id"], Vec3(*(float(c) for c in vp["position"])), views))
            edges = [(a, b, float(d)) for a, b, d in data["edges"]]
            return cls(data["world_id"], int(data["seed"]), data["split"], viewpoints, edges)
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"malformed world JSON: {e}") from e


@dataclass(frozen=True, eq=False)
class CandidateEntry:
    viewpoint_id: str
    relative_heading: float
    relative_elevation: float
    feature: np.ndarray
    object_labels: FrozenSet[int]
    is_stop: bool = False
    heading_index: int = 0
    elevation_index: int = 1


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """Neighbors in canonical order followed by the STOP pseudo-candidate"""
    entries: List[CandidateEntry]

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: int) -> CandidateEntry:
        return self.entries[index]

    @property
    def stop_index(self) -> int:
        return len(self.entries) - 1

    def index_of(self, viewpoint_id: str) -> Optional[int]:
        for i, entry in enumerate(self.entries[:-1]):
            if entry.viewpoint_id == viewpoint_id:
                return i
        return None

    def feature_matrix(self) -> np.ndarray:
        return np.stack([entry.feature for entry in self.entries])

    def orientation_matrix(self) -> np.ndarray:
        """[sin Δh, cos Δh, sin Δe, cos Δe] per entry; zeros for STOP"""
        rows = []
        for entry in self.entries:
            if entry.is_stop:
                rows.append([0.0, 0.0, 0.0, 0.0])
                continue
            h = math.radians(entry.relative_heading)
            e = math.radians(entry.relative_elevation)
            rows.append([math.sin(h), math.cos(h), math.sin(e), math.cos(e)])
        return np.array(rows, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class PanoramicObservation:
    viewpoint_id: str
    heading: float
    views: Dict[Tuple[int, int], View]
