"""Immutable slit translation surfaces built from convex polygons.

A surface is a set of strictly convex counterclockwise polygons, a gluing
of their edges (translations, and point reflections for half-translation
inputs), a list of slits and a list of user marks. ``build_surface`` and
``build_half_translation`` validate everything once and precompute the data
the tracer and the search need: vertex classes with cone angles, the marked
set, per-polygon slit pieces and per-polygon mark locations.
"""
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple
import logging

from .errors import (
    ConeAngleNotMultipleOf2Pi, DegenerateSlit, DisconnectedSurface, EdgeVectorMismatch,
    FlipNotAllowed, InvalidGluing, InvalidHalfTranslation, NonConvexPolygon,
    SingularMatrix, SlitLeavesSurface, SurfaceValidationError,
)
from .geometry import (
    Matrix2, Scalar, Vec2, ceil_sqrt, determinant, in_sector, point_in_open_segment,
    primitive_direction, same_direction, strictly_between,
)

logger = logging.getLogger(__name__)


class EdgeRef(NamedTuple):
    polygon_id: int
    edge_index: int

    def __str__(self) -> str:
        return f"{self.polygon_id}.{self.edge_index}"


@dataclass(frozen=True)
class Polygon:
    id: int
    vertices: Tuple[Vec2, ...]

    def __post_init__(self):
        object.__setattr__(self, 'vertices', tuple(self.vertices))

    @property
    def size(self) -> int:
        return len(self.vertices)

    def vertex(self, i: int) -> Vec2:
        return self.vertices[i % self.size]

    def edge_vector(self, i: int) -> Vec2:
        return self.vertex(i + 1) - self.vertex(i)

    def area(self) -> Scalar:
        total = Fraction(0)
        for i in range(self.size):
            total += self.vertex(i).cross(self.vertex(i + 1))
        return total / 2

    def validate(self):
        if self.size < 3:
            raise NonConvexPolygon(f"polygon {self.id} has {self.size} vertices, need at least 3")
        for i in range(self.size):
            if self.edge_vector(i).cross(self.edge_vector(i + 1)) <= 0:
                raise NonConvexPolygon(
                    f"polygon {self.id} is not strictly convex counterclockwise at vertex {(i + 1) % self.size}")

    def corner_sector(self, i: int) -> Tuple[Vec2, Vec2]:
        """Outgoing edge direction and reversed incoming edge at vertex i."""
        return self.edge_vector(i), self.vertex(i - 1) - self.vertex(i)

    def locate(self, p: Vec2) -> Optional[Tuple[str, int]]:
        """('vertex', i), ('edge', i), ('interior', -1) or None when outside."""
        on_edge = -1
        for i in range(self.size):
            side = self.edge_vector(i).cross(p - self.vertex(i))
            if side < 0:
                return None
            if side == 0:
                on_edge = i
        for i, v in enumerate(self.vertices):
            if v == p:
                return ('vertex', i)
        if on_edge >= 0:
            return ('edge', on_edge)
        return ('interior', -1)

    def exit_parameter(self, p: Vec2, d: Vec2, skip_edges: Iterable[int] = ()) -> Tuple[Scalar, int]:
        """First s > 0 where p + s*d leaves the polygon, and the edge it leaves through."""
        best: Optional[Scalar] = None
        best_edge = -1
        skip = set(skip_edges)
        for i in range(self.size):
            e = self.edge_vector(i)
            outward = e.cross(d)
            if outward >= 0 or i in skip:
                continue
            s = e.cross(p - self.vertex(i)) / (-outward)
            if s <= 0:
                continue
            if best is None or s < best:
                best, best_edge = s, i
        if best is None:
            raise SurfaceValidationError(f"ray from {p} in direction {d} does not leave polygon {self.id}")
        return best, best_edge

    def diameter_sq(self) -> Scalar:
        return max((a - b).norm_sq() for a in self.vertices for b in self.vertices)


@dataclass(frozen=True)
class GluedPair:
    first: EdgeRef
    second: EdgeRef
    flip: bool = False


class Gluing:
    """Involutive pairing of polygon edges; unpaired edges are boundary edges."""

    def __init__(self, pairs: Iterable[GluedPair]):
        self.pairs: Tuple[GluedPair, ...] = tuple(pairs)
        self._partner: Dict[EdgeRef, Tuple[EdgeRef, bool]] = {}
        for pair in self.pairs:
            for a, b in ((pair.first, pair.second), (pair.second, pair.first)):
                if a in self._partner:
                    raise InvalidGluing(f"edge {a} appears in more than one pair")
                self._partner[a] = (b, pair.flip)
            if pair.first == pair.second:
                raise InvalidGluing(f"edge {pair.first} is glued to itself")

    def partner(self, edge: EdgeRef) -> Optional[Tuple[EdgeRef, bool]]:
        return self._partner.get(edge)

    def is_boundary(self, edge: EdgeRef) -> bool:
        return edge not in self._partner

    @property
    def has_flips(self) -> bool:
        return any(p.flip for p in self.pairs)

    def relabeled(self, edge_map: Dict[EdgeRef, EdgeRef]) -> 'Gluing':
        return Gluing(GluedPair(edge_map[p.first], edge_map[p.second], p.flip) for p in self.pairs)


@dataclass(frozen=True)
class SurfacePoint:
    polygon_id: int
    position: Vec2

    def __str__(self) -> str:
        return f"{self.polygon_id}:{self.position}"


class SlitKind(Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class SlitSpec:
    id: int
    kind: SlitKind
    start: Optional[SurfacePoint] = None
    holonomy: Optional[Vec2] = None
    edge: Optional[EdgeRef] = None

    @staticmethod
    def interior(slit_id: int, start: SurfacePoint, holonomy: Vec2) -> 'SlitSpec':
        return SlitSpec(slit_id, SlitKind.INTERIOR, start=start, holonomy=holonomy)

    @staticmethod
    def boundary(slit_id: int, edge: EdgeRef) -> 'SlitSpec':
        return SlitSpec(slit_id, SlitKind.BOUNDARY, edge=edge)


class Convention(Enum):
    MARKED = "marked"
    UNMARKED = "unmarked"


class MarkKind(Enum):
    CONE = "cone"
    USER = "user"
    SLIT_END = "slit-end"


@dataclass(frozen=True)
class SlitPiece:
    slit_id: int
    polygon_id: int
    a: Vec2
    b: Vec2
    a_is_end: bool
    b_is_end: bool


@dataclass(frozen=True)
class VertexClass:
    id: int
    corners: Tuple[Tuple[int, int], ...]
    corner_signs: Tuple[int, ...]
    half_turns: Optional[int]
    on_boundary: bool

    @property
    def is_regular(self) -> bool:
        return not self.on_boundary and self.half_turns == 2


@dataclass(frozen=True)
class MarkedPoint:
    id: int
    key: tuple
    kind: MarkKind
    order: Optional[int]
    location: SurfacePoint


@dataclass(frozen=True)
class MarkLocation:
    polygon_id: int
    position: Vec2
    marked_id: int


@dataclass(frozen=True)
class StratumSignature:
    orders: Tuple[int, ...]
    genus: int
    marked_count: int
    dimension: int

    def label(self) -> str:
        return "H(" + ", ".join(str(k) for k in self.orders) + ")"


class FlatSurface:
    """Validated polygon complex shared by translation and half-translation surfaces."""

    allows_flips = False

    def __init__(self, polygons: Sequence[Polygon], gluing: Gluing, slits: Sequence[SlitSpec],
                 user_marks: Sequence[SurfacePoint], convention: Convention):
        self.polygons: Dict[int, Polygon] = {p.id: p for p in polygons}
        self.polygon_ids: Tuple[int, ...] = tuple(sorted(self.polygons))
        self.gluing = gluing
        self.slits: Tuple[SlitSpec, ...] = tuple(slits)
        self.user_marks: Tuple[SurfacePoint, ...] = tuple(user_marks)
        self.convention = convention

        self.vertex_classes: List[VertexClass] = []
        self.corner_class: Dict[Tuple[int, int], int] = {}
        self.corner_sign: Dict[Tuple[int, int], int] = {}
        self.slit_pieces: Dict[int, List[SlitPiece]] = defaultdict(list)
        self.slit_endpoints: Dict[int, Tuple[SurfacePoint, SurfacePoint]] = {}
        self.marked_points: List[MarkedPoint] = []
        self.mark_locations: Dict[int, List[MarkLocation]] = defaultdict(list)
        self._marked_by_key: Dict[tuple, int] = {}

        self._validate_polygons()
        self._validate_gluing()
        self._check_connected()
        self._build_vertex_classes()
        self._check_cone_angles()
        self._trace_slits()
        self._assemble_marked_set()
        self._check_marks_off_slits()

    # -- validation ---------------------------------------------------------

    def _validate_polygons(self):
        if not self.polygons:
            raise SurfaceValidationError("surface has no polygons")
        for polygon in self.polygons.values():
            polygon.validate()

    def _validate_gluing(self):
        for pair in self.gluing.pairs:
            for edge in (pair.first, pair.second):
                polygon = self.polygons.get(edge.polygon_id)
                if polygon is None or not 0 <= edge.edge_index < polygon.size:
                    raise InvalidGluing(f"edge {edge} does not exist")
            if pair.flip and not self.allows_flips:
                raise FlipNotAllowed(f"flip gluing {pair.first} ~ {pair.second} in a translation surface")
            u = self.edge_vector(pair.first)
            v = self.edge_vector(pair.second)
            expected = u if pair.flip else -u
            if v != expected:
                raise EdgeVectorMismatch(
                    f"edges {pair.first} {u} and {pair.second} {v} cannot be glued by a "
                    f"{'point reflection' if pair.flip else 'translation'}")

    def _check_connected(self):
        seen = {self.polygon_ids[0]}
        stack = [self.polygon_ids[0]]
        while stack:
            pid = stack.pop()
            for i in range(self.polygons[pid].size):
                glued = self.gluing.partner(EdgeRef(pid, i))
                if glued and glued[0].polygon_id not in seen:
                    seen.add(glued[0].polygon_id)
                    stack.append(glued[0].polygon_id)
        if len(seen) != len(self.polygons):
            missing = sorted(set(self.polygons) - seen)
            raise DisconnectedSurface(f"polygons {missing} are not reachable from polygon {self.polygon_ids[0]}")

    def _next_corner(self, pid: int, i: int) -> Optional[Tuple[int, int, int]]:
        """Counterclockwise neighbour of a corner: (polygon, vertex, sign change)."""
        glued = self.gluing.partner(EdgeRef(pid, (i - 1) % self.polygons[pid].size))
        if glued is None:
            return None
        other, flip = glued
        return other.polygon_id, other.edge_index, -1 if flip else 1

    def _previous_corner(self, pid: int, i: int) -> Optional[Tuple[int, int, int]]:
        glued = self.gluing.partner(EdgeRef(pid, i))
        if glued is None:
            return None
        other, flip = glued
        size = self.polygons[other.polygon_id].size
        return other.polygon_id, (other.edge_index + 1) % size, -1 if flip else 1

    def _build_vertex_classes(self):
        for pid in self.polygon_ids:
            for i in range(self.polygons[pid].size):
                if (pid, i) in self.corner_class:
                    continue
                # walk clockwise to a boundary edge, if any
                start, on_boundary = (pid, i), False
                current = (pid, i)
                while True:
                    prev = self._previous_corner(*current)
                    if prev is None:
                        start, on_boundary = current, True
                        break
                    current = (prev[0], prev[1])
                    if current == (pid, i):
                        break
                corners, signs = [start], [1]
                while True:
                    nxt = self._next_corner(*corners[-1])
                    if nxt is None or (nxt[0], nxt[1]) == start:
                        break
                    corners.append((nxt[0], nxt[1]))
                    signs.append(signs[-1] * nxt[2])
                half_turns = None if on_boundary else self._count_half_turns(corners)
                vc = VertexClass(len(self.vertex_classes), tuple(corners), tuple(signs), half_turns, on_boundary)
                for corner, sign in zip(corners, signs):
                    self.corner_class[corner] = vc.id
                    self.corner_sign[corner] = sign
                self.vertex_classes.append(vc)

    def _count_half_turns(self, corners: List[Tuple[int, int]]) -> int:
        first = self.polygons[corners[0][0]]
        d0 = first.edge_vector(corners[0][1])
        count = 0
        for pid, i in corners:
            u, w = self.polygons[pid].corner_sector(i)
            # the line through d0 is frame independent, so flips do not matter
            for d in (d0, -d0):
                if strictly_between(u, w, d) or same_direction(w, d):
                    count += 1
        return count

    def _check_cone_angles(self):
        for vc in self.vertex_classes:
            if vc.on_boundary:
                continue
            if not self.allows_flips and vc.half_turns % 2 != 0:
                raise ConeAngleNotMultipleOf2Pi(
                    f"vertex class {vc.id} has cone angle {vc.half_turns}*pi")
            if vc.half_turns < 1:
                raise InvalidHalfTranslation(f"vertex class {vc.id} has non-positive cone angle")

    # -- point identification ----------------------------------------------

    def edge_vector(self, edge: EdgeRef) -> Vec2:
        return self.polygons[edge.polygon_id].edge_vector(edge.edge_index)

    def edge_map(self, edge: EdgeRef) -> Optional[Tuple[EdgeRef, int, Vec2]]:
        """Map across a glued edge as q = sign * p + offset in the partner's coordinates."""
        glued = self.gluing.partner(edge)
        if glued is None:
            return None
        other, flip = glued
        p_poly = self.polygons[edge.polygon_id]
        q_poly = self.polygons[other.polygon_id]
        a = p_poly.vertex(edge.edge_index)
        d = q_poly.vertex(other.edge_index + 1)
        if flip:
            return other, -1, a + d
        return other, 1, d - a

    def map_point(self, edge: EdgeRef, p: Vec2) -> Tuple[EdgeRef, int, Vec2]:
        other, sign, offset = self.edge_map(edge)
        return other, sign, p.scale(sign) + offset

    def representatives(self, point: SurfacePoint) -> List[Tuple[str, int, Vec2, int]]:
        """Every (kind, polygon, position, index) naming the same surface point."""
        polygon = self.polygons[point.polygon_id]
        where = polygon.locate(point.position)
        if where is None:
            raise SurfaceValidationError(f"point {point} lies outside polygon {point.polygon_id}")
        kind, index = where
        if kind == 'vertex':
            vc = self.vertex_classes[self.corner_class[(point.polygon_id, index)]]
            return [('vertex', pid, self.polygons[pid].vertex(i), i) for pid, i in vc.corners]
        reps = [(kind, point.polygon_id, point.position, index)]
        if kind == 'edge':
            mapped = self.edge_map(EdgeRef(point.polygon_id, index))
            if mapped is not None:
                other, _, q = self.map_point(EdgeRef(point.polygon_id, index), point.position)
                reps.append(('edge', other.polygon_id, q, other.edge_index))
        return reps

    def canonical_key(self, point: SurfacePoint) -> tuple:
        polygon = self.polygons[point.polygon_id]
        where = polygon.locate(point.position)
        if where is None:
            raise SurfaceValidationError(f"point {point} lies outside polygon {point.polygon_id}")
        if where[0] == 'vertex':
            return ('v', self.corner_class[(point.polygon_id, where[1])])
        reps = self.representatives(point)
        best = min(reps, key=lambda r: (r[1], r[2].x, r[2].y))
        return ('e' if where[0] == 'edge' else 'f', best[1], best[2].x, best[2].y)

    # -- slits --------------------------------------------------------------

    def _start_sector(self, point: SurfacePoint, direction: Vec2) -> Tuple[int, Vec2, Vec2]:
        """Polygon, position and local direction for leaving ``point`` along ``direction``."""
        polygon = self.polygons[point.polygon_id]
        kind, index = polygon.locate(point.position)
        if kind == 'vertex':
            corner = (point.polygon_id, index)
            u, w = polygon.corner_sector(index)
            if in_sector(u, w, direction):
                return point.polygon_id, point.position, direction
            vc = self.vertex_classes[self.corner_class[corner]]
            if not vc.is_regular:
                raise SlitLeavesSurface(
                    f"direction {direction} does not enter polygon {point.polygon_id} at cone point {point}")
            found = self.continue_through_vertex(point.polygon_id, index, direction)
            if found is None:
                raise SlitLeavesSurface(f"no sector at {point} contains direction {direction}")
            pid, j, local, _ = found
            return pid, self.polygons[pid].vertex(j), local
        if kind == 'edge':
            e = polygon.edge_vector(index)
            if e.cross(direction) < 0:
                mapped = self.edge_map(EdgeRef(point.polygon_id, index))
                if mapped is None:
                    raise SlitLeavesSurface(f"direction {direction} leaves the surface at boundary point {point}")
                other, sign, q = self.map_point(EdgeRef(point.polygon_id, index), point.position)
                return other.polygon_id, q, direction.scale(sign)
        return point.polygon_id, point.position, direction

    def continue_through_vertex(self, pid: int, index: int, direction: Vec2
                                ) -> Optional[Tuple[int, int, Vec2, Tuple[EdgeRef, ...]]]:
        """Corner of the same vertex class whose sector holds ``direction``.

        Returns (polygon, vertex index, local direction, edges crossed walking
        counterclockwise from the given corner), or None if no sector matches.
        """
        corner = (pid, index)
        vc = self.vertex_classes[self.corner_class[corner]]
        base_sign = self.corner_sign[corner]
        start = vc.corners.index(corner)
        crossed: List[EdgeRef] = []
        count = len(vc.corners)
        steps = count - start if vc.on_boundary else count
        for step in range(steps):
            qid, j = vc.corners[(start + step) % count]
            if step > 0:
                prev_pid, prev_i = vc.corners[(start + step - 1) % count]
                crossed.append(EdgeRef(prev_pid, (prev_i - 1) % self.polygons[prev_pid].size))
            local = direction.scale(base_sign * self.corner_sign[(qid, j)])
            u, w = self.polygons[qid].corner_sector(j)
            if in_sector(u, w, local):
                return qid, j, local, tuple(crossed)
        return None

    def outgoing_germ(self, point: SurfacePoint, direction: Vec2) -> tuple:
        """Hashable name for the ray leaving ``point`` along ``direction``.

        ``direction`` is local to ``point.polygon_id`` and must point into the
        polygon or along one of its edges. A ray along an edge belongs to the
        corner (or edge side) it leaves from counterclockwise, so every
        representative of the same ray gets the same name.
        """
        pid, pos, d = point.polygon_id, point.position, direction
        polygon = self.polygons[pid]
        kind, index = polygon.locate(pos)
        if kind == 'vertex':
            u, w = polygon.corner_sector(index)
            if not in_sector(u, w, d) and same_direction(w, d):
                nxt = self._next_corner(pid, index)
                if nxt is not None:
                    qid, j, sign = nxt
                    pid, pos, d = qid, self.polygons[qid].vertex(j), d.scale(sign)
        elif kind == 'edge' and same_direction(-polygon.edge_vector(index), d):
            edge = EdgeRef(pid, index)
            if self.edge_map(edge) is not None:
                other, sign, pos = self.map_point(edge, pos)
                pid, d = other.polygon_id, d.scale(sign)
        dx, dy = primitive_direction(d)
        return (pid, pos.x, pos.y, dx, dy)

    def _trace_slits(self):
        for slit in self.slits:
            if slit.kind is SlitKind.BOUNDARY:
                self._add_boundary_slit(slit)
            else:
                self._add_interior_slit(slit)

    def _add_boundary_slit(self, slit: SlitSpec):
        edge = slit.edge
        polygon = self.polygons.get(edge.polygon_id)
        if polygon is None or not 0 <= edge.edge_index < polygon.size:
            raise InvalidGluing(f"boundary slit {slit.id} references missing edge {edge}")
        if not self.gluing.is_boundary(edge):
            raise SlitLeavesSurface(f"boundary slit {slit.id} references glued edge {edge}")
        a, b = polygon.vertex(edge.edge_index), polygon.vertex(edge.edge_index + 1)
        self.slit_pieces[edge.polygon_id].append(SlitPiece(slit.id, edge.polygon_id, a, b, True, True))
        self.slit_endpoints[slit.id] = (SurfacePoint(edge.polygon_id, a), SurfacePoint(edge.polygon_id, b))

    def _add_interior_slit(self, slit: SlitSpec):
        if slit.holonomy is None or slit.holonomy.is_zero():
            raise DegenerateSlit(f"slit {slit.id} has zero holonomy")
        if slit.start.polygon_id not in self.polygons:
            raise SlitLeavesSurface(f"slit {slit.id} starts in missing polygon {slit.start.polygon_id}")
        if self.polygons[slit.start.polygon_id].locate(slit.start.position) is None:
            raise SlitLeavesSurface(f"slit {slit.id} starts outside polygon {slit.start.polygon_id}")
        pid, p, d = self._start_sector(slit.start, slit.holonomy)
        remaining = Fraction(1)
        pieces: List[Tuple[int, Vec2, Vec2]] = []
        while True:
            polygon = self.polygons[pid]
            s, edge_index = polygon.exit_parameter(p, d)
            if remaining <= s:
                pieces.append((pid, p, p + d.scale(remaining)))
                break
            q = p + d.scale(s)
            pieces.append((pid, p, q))
            remaining -= s
            kind, index = polygon.locate(q)
            if kind == 'vertex':
                vc = self.vertex_classes[self.corner_class[(pid, index)]]
                if not vc.is_regular:
                    raise SlitLeavesSurface(f"slit {slit.id} runs through singular vertex at {q} in polygon {pid}")
                found = self.continue_through_vertex(pid, index, d)
                if found is None:
                    raise SlitLeavesSurface(f"slit {slit.id} cannot continue through vertex {q}")
                pid, j, d, _ = found
                p = self.polygons[pid].vertex(j)
                continue
            mapped = self.edge_map(EdgeRef(pid, edge_index))
            if mapped is None:
                raise SlitLeavesSurface(f"slit {slit.id} exits through boundary edge {pid}.{edge_index}")
            other, sign, p = self.map_point(EdgeRef(pid, edge_index), q)
            pid, d = other.polygon_id, d.scale(sign)
        for n, (ppid, a, b) in enumerate(pieces):
            piece = SlitPiece(slit.id, ppid, a, b, n == 0, n == len(pieces) - 1)
            self.slit_pieces[ppid].append(piece)
            self._mirror_edge_piece(piece)
        last_pid, _, last_b = pieces[-1]
        self.slit_endpoints[slit.id] = (slit.start, SurfacePoint(last_pid, last_b))

    def _mirror_edge_piece(self, piece: SlitPiece):
        polygon = self.polygons[piece.polygon_id]
        for i in range(polygon.size):
            v, e = polygon.vertex(i), polygon.edge_vector(i)
            if e.cross(piece.a - v) == 0 and e.cross(piece.b - v) == 0:
                mapped = self.edge_map(EdgeRef(piece.polygon_id, i))
                if mapped is None:
                    return
                other, _, a2 = self.map_point(EdgeRef(piece.polygon_id, i), piece.a)
                _, _, b2 = self.map_point(EdgeRef(piece.polygon_id, i), piece.b)
                self.slit_pieces[other.polygon_id].append(
                    SlitPiece(piece.slit_id, other.polygon_id, a2, b2, piece.a_is_end, piece.b_is_end))
                return

    # -- marked set ---------------------------------------------------------

    def order_of_half_turns(self, half_turns: int) -> int:
        return half_turns // 2 - 1

    def _add_marked(self, key: tuple, kind: MarkKind, order: Optional[int], location: SurfacePoint):
        if key in self._marked_by_key:
            return
        mp = MarkedPoint(len(self.marked_points), key, kind, order, location)
        self.marked_points.append(mp)
        self._marked_by_key[key] = mp.id

    def _order_at(self, point: SurfacePoint) -> Optional[int]:
        key = self.canonical_key(point)
        if key[0] == 'v':
            vc = self.vertex_classes[key[1]]
            return None if vc.on_boundary else self.order_of_half_turns(vc.half_turns)
        return 0

    def _assemble_marked_set(self):
        for vc in self.vertex_classes:
            if not vc.on_boundary and vc.half_turns != 2:
                pid, i = vc.corners[0]
                self._add_marked(('v', vc.id), MarkKind.CONE, self.order_of_half_turns(vc.half_turns),
                                 SurfacePoint(pid, self.polygons[pid].vertex(i)))
        for mark in self.user_marks:
            if mark.polygon_id not in self.polygons or self.polygons[mark.polygon_id].locate(mark.position) is None:
                raise SurfaceValidationError(f"mark {mark} lies outside its polygon")
            self._add_marked(self.canonical_key(mark), MarkKind.USER, self._order_at(mark), mark)
        if self.convention is Convention.MARKED:
            for slit in self.slits:
                for end in self.slit_endpoints[slit.id]:
                    self._add_marked(self.canonical_key(end), MarkKind.SLIT_END, self._order_at(end), end)
        for mp in self.marked_points:
            for kind, pid, pos, _ in self.representatives(mp.location):
                self.mark_locations[pid].append(MarkLocation(pid, pos, mp.id))

    def _in_open_slit(self, pid: int, pos: Vec2) -> Optional[int]:
        for piece in self.slit_pieces.get(pid, ()):
            if point_in_open_segment(pos, piece.a, piece.b):
                return piece.slit_id
            if (pos == piece.a and not piece.a_is_end) or (pos == piece.b and not piece.b_is_end):
                return piece.slit_id
        return None

    def _check_marks_off_slits(self):
        points = [(m, "mark") for m in self.user_marks]
        for slit_id, ends in self.slit_endpoints.items():
            points.extend((end, f"endpoint of slit {slit_id}") for end in ends)
        for point, label in points:
            for _, pid, pos, _ in self.representatives(point):
                hit = self._in_open_slit(pid, pos)
                if hit is not None:
                    raise SlitLeavesSurface(f"{label} {point} lies in the open interior of slit {hit}")

    # -- queries ------------------------------------------------------------

    def marked_id_at(self, point: SurfacePoint) -> Optional[int]:
        return self._marked_by_key.get(self.canonical_key(point))

    def area(self) -> Scalar:
        return sum((p.area() for p in self.polygons.values()), Fraction(0))

    def diameter_bound(self) -> int:
        """Integer upper bound on the surface diameter (sum of polygon diameters)."""
        return sum(ceil_sqrt(p.diameter_sq()) for p in self.polygons.values())

    @property
    def has_boundary(self) -> bool:
        return any(self.gluing.is_boundary(EdgeRef(pid, i))
                   for pid in self.polygon_ids for i in range(self.polygons[pid].size))

    def boundary_edges(self) -> List[EdgeRef]:
        return [EdgeRef(pid, i) for pid in self.polygon_ids
                for i in range(self.polygons[pid].size) if self.gluing.is_boundary(EdgeRef(pid, i))]

    def euler_characteristic(self) -> int:
        edges = len(self.gluing.pairs) + len(self.boundary_edges())
        return len(self.vertex_classes) - edges + len(self.polygons)

    def slit_holonomy(self, slit_id: int) -> Vec2:
        slit = next(s for s in self.slits if s.id == slit_id)
        if slit.kind is SlitKind.INTERIOR:
            return slit.holonomy
        return self.edge_vector(slit.edge)

    def structure_key(self) -> tuple:
        """Hashable summary used to compare surfaces built from identical input."""
        return (
            tuple((pid, self.polygons[pid].vertices) for pid in self.polygon_ids),
            tuple(sorted((p.first, p.second, p.flip) for p in self.gluing.pairs)),
            self.slits, self.user_marks, self.convention,
            tuple(self.vertex_classes), tuple(self.marked_points),
        )


class SlitSurface(FlatSurface):
    """Translation surface with slits; cone angles are multiples of 2*pi."""


class HalfTranslationSurface(FlatSurface):
    """Polygons glued by translations and point reflections; cone angles are multiples of pi."""

    allows_flips = True

    def order_of_half_turns(self, half_turns: int) -> int:
        return half_turns - 2


def build_surface(polygons: Sequence[Polygon], gluing: Gluing, slits: Sequence[SlitSpec] = (),
                  user_marks: Sequence[SurfacePoint] = (),
                  convention: Convention = Convention.MARKED) -> SlitSurface:
    surface = SlitSurface(polygons, gluing, slits, user_marks, convention)
    if not surface.has_boundary:
        genus = _genus(surface)
        total = sum(mp.order for mp in surface.marked_points)
        if total != 2 * genus - 2:
            raise SurfaceValidationError(f"orders sum to {total} but genus {genus} requires {2 * genus - 2}")
    logger.debug(f"Built surface: {len(surface.polygons)} polygons, {len(surface.slits)} slits, "
                 f"{len(surface.marked_points)} marked points")
    return surface


def build_half_translation(polygons: Sequence[Polygon], gluing: Gluing, slits: Sequence[SlitSpec] = (),
                           user_marks: Sequence[SurfacePoint] = (),
                           convention: Convention = Convention.MARKED) -> HalfTranslationSurface:
    try:
        surface = HalfTranslationSurface(polygons, gluing, slits, user_marks, convention)
    except (EdgeVectorMismatch, InvalidGluing) as e:
        raise InvalidHalfTranslation(str(e)) from e
    if surface.has_boundary:
        raise InvalidHalfTranslation("half-translation surfaces with boundary are not supported")
    return surface


def _genus(surface: FlatSurface) -> int:
    chi = surface.euler_characteristic()
    if chi % 2 != 0:
        raise SurfaceValidationError(f"odd Euler characteristic {chi}")
    return (2 - chi) // 2


def singularity_orders(surface: FlatSurface) -> List[int]:
    """One order per marked point, in marked-point id order."""
    if surface.has_boundary:
        raise SurfaceValidationError("orders are defined for closed surfaces; double the surface first")
    return [mp.order for mp in surface.marked_points]


def stratum(surface: SlitSurface) -> StratumSignature:
    orders = tuple(sorted(singularity_orders(surface), reverse=True))
    genus = _genus(surface)
    return StratumSignature(orders, genus, len(orders), 2 * genus + len(orders) - 1)


def cb_rank_bounds(surface: SlitSurface) -> Tuple[int, int]:
    return 1, stratum(surface).dimension


def apply_linear(surface: FlatSurface, m: Matrix2) -> FlatSurface:
    """Image of the surface under a nonsingular linear map."""
    det = determinant(m)
    if det == 0:
        raise SingularMatrix("matrix is singular")
    reverse = det < 0
    polygons, edge_map = [], {}
    for pid in surface.polygon_ids:
        polygon = surface.polygons[pid]
        n = polygon.size
        image = [v.transform(m) for v in polygon.vertices]
        if reverse:
            # vertex j of the image is old vertex -j, so edge j is old edge n-1-j reversed
            image = [image[(-j) % n] for j in range(n)]
            for i in range(n):
                edge_map[EdgeRef(pid, i)] = EdgeRef(pid, (n - 1 - i) % n)
        else:
            for i in range(n):
                edge_map[EdgeRef(pid, i)] = EdgeRef(pid, i)
        polygons.append(Polygon(pid, tuple(image)))
    slits = []
    for slit in surface.slits:
        if slit.kind is SlitKind.BOUNDARY:
            slits.append(SlitSpec.boundary(slit.id, edge_map[slit.edge]))
        else:
            start = SurfacePoint(slit.start.polygon_id, slit.start.position.transform(m))
            slits.append(SlitSpec.interior(slit.id, start, slit.holonomy.transform(m)))
    marks = [SurfacePoint(p.polygon_id, p.position.transform(m)) for p in surface.user_marks]
    gluing = surface.gluing.relabeled(edge_map)
    if isinstance(surface, HalfTranslationSurface):
        return build_half_translation(polygons, gluing, slits, marks, surface.convention)
    return build_surface(polygons, gluing, slits, marks, surface.convention)
