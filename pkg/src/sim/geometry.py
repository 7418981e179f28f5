"""Planar and vertical angles between viewpoint positions (degrees)."""
import math
from typing import Tuple

from ..models.world import ELEVATION_COUNT, HEADING_COUNT, VIEW_INTERVAL, Vec3


def normalize_heading(degrees: float) -> float:
    """Map any angle into (-180, 180]"""
    value = math.fmod(degrees, 360.0)
    if value <= -180.0:
        value += 360.0
    elif value > 180.0:
        value -= 360.0
    return value


def bearing(source: Vec3, target: Vec3) -> float:
    """Clockwise angle from +y in [0, 360)"""
    angle = math.degrees(math.atan2(target.x - source.x, target.y - source.y))
    return angle % 360.0


def elevation(source: Vec3, target: Vec3) -> float:
    dz = target.z - source.z
    horizontal = math.hypot(target.x - source.x, target.y - source.y)
    if dz == 0.0 and horizontal == 0.0:
        return 0.0
    return math.degrees(math.atan2(dz, horizontal))


def heading_index(absolute_heading: float) -> int:
    return int(math.floor((absolute_heading % 360.0 + VIEW_INTERVAL / 2) / VIEW_INTERVAL)) % HEADING_COUNT


def elevation_index(elevation_degrees: float) -> int:
    if elevation_degrees < -VIEW_INTERVAL / 2:
        return 0
    if elevation_degrees > VIEW_INTERVAL / 2:
        return ELEVATION_COUNT - 1
    return 1


def relative_orientation(source: Vec3, heading: float, target: Vec3) -> Tuple[float, float]:
    """(Δheading, Δelevation) from an agent at ``source`` facing ``heading``"""
    if source == target:
        return 0.0, 0.0
    delta_heading = normalize_heading(bearing(source, target) - heading)
    return delta_heading, elevation(source, target)
