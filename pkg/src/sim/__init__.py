from .geometry import bearing, elevation, heading_index, elevation_index, normalize_heading
from .simulator import WorldSimulator, observe, relative_orientation, shortest_path, simulator_for, teacher_action
from .world import WorldParams, generate_world, world_seeds

__all__ = [
    "WorldParams",
    "WorldSimulator",
    "bearing",
    "elevation",
    "elevation_index",
    "generate_world",
    "heading_index",
    "normalize_heading",
    "observe",
    "relative_orientation",
    "shortest_path",
    "simulator_for",
    "teacher_action",
    "world_seeds",
]
