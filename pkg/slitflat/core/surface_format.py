"""Reader and writer for the line-oriented ``slitsurf 1`` surface format."""
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union
import re
import logging

from .errors import SlitflatError, SurfaceFormatError
from .geometry import Vec2, format_scalar, parse_scalar
from .kernel import (
    Convention, EdgeRef, FlatSurface, GluedPair, Gluing, Polygon, SlitKind, SlitSpec,
    SurfacePoint, build_half_translation, build_surface,
)

logger = logging.getLogger(__name__)

HEADER = "slitsurf 1"
EDGE_PATTERN = re.compile(r'^(\d+)\.(\d+)$')


@dataclass
class SurfaceDescription:
    """Raw surface data as read from text, before validation."""
    polygons: List[Polygon] = field(default_factory=list)
    pairs: List[GluedPair] = field(default_factory=list)
    slits: List[SlitSpec] = field(default_factory=list)
    marks: List[SurfacePoint] = field(default_factory=list)
    convention: Convention = Convention.MARKED

    @property
    def has_flips(self) -> bool:
        return any(p.flip for p in self.pairs)

    def build(self) -> FlatSurface:
        builder = build_half_translation if self.has_flips else build_surface
        return builder(self.polygons, Gluing(self.pairs), self.slits, self.marks, self.convention)


def _edge(token: str, line_number: int) -> EdgeRef:
    match = EDGE_PATTERN.match(token)
    if not match:
        raise SurfaceFormatError(line_number, f"expected <polygon>.<edge>, got {token!r}")
    return EdgeRef(int(match.group(1)), int(match.group(2)))


def _scalars(tokens: List[str], line_number: int):
    try:
        return [parse_scalar(t) for t in tokens]
    except (ValueError, ZeroDivisionError) as e:
        raise SurfaceFormatError(line_number, f"bad rational: {e}") from e


def parse_surface_text(text: str) -> SurfaceDescription:
    description = SurfaceDescription()
    current_id: Optional[int] = None
    current_vertices: List[Vec2] = []
    seen_header = False

    def close_polygon(line_number: int):
        nonlocal current_id, current_vertices
        if current_id is not None:
            if len(current_vertices) < 3:
                raise SurfaceFormatError(line_number, f"polygon {current_id} has fewer than 3 vertices")
            description.polygons.append(Polygon(current_id, tuple(current_vertices)))
        current_id, current_vertices = None, []

    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if not seen_header:
            if line != HEADER:
                raise SurfaceFormatError(line_number, f"expected header {HEADER!r}")
            seen_header = True
            continue
        keyword, args = tokens[0], tokens[1:]
        if keyword == 'polygon':
            close_polygon(line_number)
            if len(args) != 1 or not args[0].isdigit():
                raise SurfaceFormatError(line_number, "usage: polygon <id>")
            current_id = int(args[0])
            if any(p.id == current_id for p in description.polygons):
                raise SurfaceFormatError(line_number, f"duplicate polygon id {current_id}")
        elif keyword == 'v':
            if current_id is None:
                raise SurfaceFormatError(line_number, "vertex outside of a polygon block")
            if len(args) != 2:
                raise SurfaceFormatError(line_number, "usage: v <x> <y>")
            x, y = _scalars(args, line_number)
            current_vertices.append(Vec2(x, y))
        elif keyword == 'glue':
            close_polygon(line_number)
            if len(args) not in (2, 3) or (len(args) == 3 and args[2] != 'flip'):
                raise SurfaceFormatError(line_number, "usage: glue <pid>.<edge> <pid>.<edge> [flip]")
            description.pairs.append(
                GluedPair(_edge(args[0], line_number), _edge(args[1], line_number), len(args) == 3))
        elif keyword == 'slit':
            close_polygon(line_number)
            slit_id = len(description.slits)
            if args and args[0] == 'boundary':
                if len(args) != 2:
                    raise SurfaceFormatError(line_number, "usage: slit boundary <pid>.<edge>")
                description.slits.append(SlitSpec.boundary(slit_id, _edge(args[1], line_number)))
            else:
                if len(args) != 5 or not args[0].isdigit():
                    raise SurfaceFormatError(line_number, "usage: slit <pid> <x> <y> <dx> <dy>")
                x, y, dx, dy = _scalars(args[1:], line_number)
                description.slits.append(
                    SlitSpec.interior(slit_id, SurfacePoint(int(args[0]), Vec2(x, y)), Vec2(dx, dy)))
        elif keyword == 'mark':
            close_polygon(line_number)
            if len(args) != 3 or not args[0].isdigit():
                raise SurfaceFormatError(line_number, "usage: mark <pid> <x> <y>")
            x, y = _scalars(args[1:], line_number)
            description.marks.append(SurfacePoint(int(args[0]), Vec2(x, y)))
        elif keyword == 'convention':
            close_polygon(line_number)
            try:
                description.convention = Convention(args[0] if args else '')
            except ValueError:
                raise SurfaceFormatError(line_number, "usage: convention marked|unmarked")
        else:
            raise SurfaceFormatError(line_number, f"unknown keyword {keyword!r}")
    if not seen_header:
        raise SurfaceFormatError(1, f"missing header {HEADER!r}")
    close_polygon(len(text.splitlines()))
    return description


def load_surface(path: Union[str, Path], convention: Optional[Convention] = None) -> FlatSurface:
    """Read and validate a slitsurf file; ``convention`` overrides the one in the file."""
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise SlitflatError(f"cannot read surface file {path}: {e}") from e
    description = parse_surface_text(text)
    if convention is not None:
        description.convention = convention
    logger.info(f"Loaded {path}: {len(description.polygons)} polygons, {len(description.slits)} slits")
    return description.build()


def serialize_surface(surface: FlatSurface) -> str:
    lines = [HEADER, f"convention {surface.convention.value}"]
    for pid in surface.polygon_ids:
        lines.append(f"polygon {pid}")
        for v in surface.polygons[pid].vertices:
            lines.append(f"v {format_scalar(v.x)} {format_scalar(v.y)}")
    for pair in surface.gluing.pairs:
        lines.append(f"glue {pair.first} {pair.second}" + (" flip" if pair.flip else ""))
    for slit in surface.slits:
        if slit.kind is SlitKind.BOUNDARY:
            lines.append(f"slit boundary {slit.edge}")
        else:
            p, h = slit.start.position, slit.holonomy
            lines.append(f"slit {slit.start.polygon_id} {format_scalar(p.x)} {format_scalar(p.y)} "
                         f"{format_scalar(h.x)} {format_scalar(h.y)}")
    for mark in surface.user_marks:
        lines.append(f"mark {mark.polygon_id} {format_scalar(mark.position.x)} {format_scalar(mark.position.y)}")
    return "\n".join(lines) + "\n"


def write_surface(surface: FlatSurface, path: Union[str, Path]):
    Path(path).write_text(serialize_surface(surface), encoding='utf-8')
