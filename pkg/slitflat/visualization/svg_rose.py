"""SVG rose plot of a direction spectrum.

Coordinates are floats and only meant for looking at; element order follows
the spectrum order so repeated runs produce the same file.
"""
from pathlib import Path
from typing import List, Optional, Union
import logging

from .visualization_base import DepthReport, LevelStyle, RoseTick, Spectrum, rose_ticks

logger = logging.getLogger(__name__)

WIDTH = 640
HEIGHT = 380
MARGIN = 40


def _to_canvas(x: float, y: float):
    scale = (WIDTH - 2 * MARGIN) / 2
    return WIDTH / 2 + x * scale, HEIGHT - MARGIN - y * scale


def _title(spectrum: Spectrum, report: Optional[DepthReport]) -> str:
    title = f"{spectrum.surface_id}: {len(spectrum.entries)} directions, L = {spectrum.max_length}"
    if report is not None:
        title += f", eps = {report.epsilon}, depth {report.depth}"
    return title


def render_layer(lines: List[str], ticks: List[RoseTick]):
    cx, cy = _to_canvas(0, 0)
    for t in ticks:
        x, y = _to_canvas(*t.tip)
        lines.append(f'  <line x1="{cx:.3f}" y1="{cy:.3f}" x2="{x:.3f}" y2="{y:.3f}" '
                     f'stroke="{t.style.color}" stroke-width="1.2">'
                     f'<title>({t.dx},{t.dy}) length {t.min_length:.4f} level {t.level}</title></line>')


def render_rose(spectrum: Spectrum, report: Optional[DepthReport] = None) -> str:
    ticks = rose_ticks(spectrum, report)
    left_x, base_y = _to_canvas(-1, 0)
    right_x, _ = _to_canvas(1, 0)
    radius = (WIDTH - 2 * MARGIN) / 2
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'  <title>{_title(spectrum, report)}</title>',
        f'  <rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'  <path d="M {left_x:.3f} {base_y:.3f} A {radius:.3f} {radius:.3f} 0 0 1 {right_x:.3f} {base_y:.3f} Z" '
        f'fill="none" stroke="#CCCCCC"/>',
    ]
    render_layer(lines, ticks)
    levels = sorted({t.style for t in ticks}, key=lambda s: list(LevelStyle).index(s))
    for i, style in enumerate(levels):
        lines.append(f'  <text x="{MARGIN}" y="{MARGIN + 14 * i}" font-size="11" fill="{style.color}">'
                     f'{style.label}</text>')
    lines.append(f'  <text x="{WIDTH / 2:.1f}" y="{HEIGHT - 10}" font-size="12" text-anchor="middle">'
                 f'{_title(spectrum, report)}</text>')
    lines.append('</svg>')
    return "\n".join(lines) + "\n"


def write_rose_svg(spectrum: Spectrum, report: Optional[DepthReport], path: Union[str, Path]):
    Path(path).write_text(render_rose(spectrum, report))
    logger.info(f"Rose plot with {len(spectrum.entries)} directions saved to {path}")
