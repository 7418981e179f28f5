import logging
from pathlib import Path
from typing import Dict, Tuple

from PIL import Image, ImageDraw

from ..models.world import EnvironmentGraph
from ..utils.errors import ArtifactIOError
from .overlap import OverlapReport

logger = logging.getLogger(__name__)

BACKGROUND = (255, 255, 255)
AXIS = (40, 40, 40)
ALL_COLOR = (66, 114, 196)
SUCCESS_COLOR = (237, 125, 49)
FLOOR_COLORS = [(66, 114, 196), (237, 125, 49), (112, 173, 71), (165, 105, 189), (91, 155, 213)]


def _save(image: Image.Image, path: Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        image.save(path, format="PNG")
    except OSError as e:
        raise ArtifactIOError(f"failed writing {path}: {e}") from e
    logger.info("wrote figure %s", path)
    return path


def render_overlap_chart(report: OverlapReport, path: Path, size: Tuple[int, int] = (640, 360)) -> Path:
    """Grouped bars per overlap bin: all episodes, then successful ones"""
    width, height = size
    left, right, top, bottom = 48, 16, 28, 40
    image = Image.new("RGB", size, BACKGROUND)
    draw = ImageDraw.Draw(image)
    plot_w, plot_h = width - left - right, height - top - bottom
    peak = max(report.all_counts + [1])

    draw.line([(left, top), (left, top + plot_h), (left + plot_w, top + plot_h)], fill=AXIS)
    draw.text((left, 6), f"landmark overlap (n={report.included}, excluded={report.excluded})", fill=AXIS)
    draw.text((left - 40, top - 4), str(peak), fill=AXIS)

    slot = plot_w / len(report.bins)
    bar = slot * 0.38
    for i, (label, total, success) in enumerate(zip(report.bins, report.all_counts, report.success_counts)):
        x0 = left + i * slot + slot * 0.1
        for offset, count, color in ((0.0, total, ALL_COLOR), (bar, success, SUCCESS_COLOR)):
            if count:
                bar_h = plot_h * count / peak
                draw.rectangle([x0 + offset, top + plot_h - bar_h, x0 + offset + bar - 1, top + plot_h], fill=color)
        draw.text((x0, top + plot_h + 6), f"{label}%", fill=AXIS)

    legend_x = width - right - 150
    draw.rectangle([legend_x, 8, legend_x + 10, 18], fill=ALL_COLOR)
    draw.text((legend_x + 14, 6), "all", fill=AXIS)
    draw.rectangle([legend_x + 50, 8, legend_x + 60, 18], fill=SUCCESS_COLOR)
    draw.text((legend_x + 64, 6), "successful", fill=AXIS)
    return _save(image, path)


def render_world_map(graph: EnvironmentGraph, path: Path, size: int = 480) -> Path:
    """Top-down map: edges in grey, nodes coloured by floor"""
    margin = 24
    xs = [vp.position.x for vp in graph.viewpoints]
    ys = [vp.position.y for vp in graph.viewpoints]
    zs = sorted({round(vp.position.z, 6) for vp in graph.viewpoints})
    floor_of: Dict[float, int] = {z: i for i, z in enumerate(zs)}
    span = max(max(xs) - min(xs), max(ys) - min(ys), 1e-9)
    scale = (size - 2 * margin) / span

    def _pixel(vp) -> Tuple[float, float]:
        # +y points up on the map
        return margin + (vp.position.x - min(xs)) * scale, size - margin - (vp.position.y - min(ys)) * scale

    image = Image.new("RGB", (size, size), BACKGROUND)
    draw = ImageDraw.Draw(image)
    for a, b, _ in graph.edges:
        draw.line([_pixel(graph.viewpoint(a)), _pixel(graph.viewpoint(b))], fill=(170, 170, 170), width=1)
    for vp in graph.viewpoints:
        x, y = _pixel(vp)
        color = FLOOR_COLORS[floor_of[round(vp.position.z, 6)] % len(FLOOR_COLORS)]
        draw.ellipse([x - 4, y - 4, x + 4, y + 4], fill=color, outline=AXIS)
    draw.text((margin, 4), f"{graph.world_id} ({len(graph.viewpoints)} viewpoints, {len(zs)} floors)", fill=AXIS)
    return _save(image, path)
