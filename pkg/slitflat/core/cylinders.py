"""Cylinder decompositions in a fixed rational direction.

The surface is sheared so the direction becomes horizontal. Separatrices
from every marked point are traced in both senses; when they all end at
marked points, the horizontal saddle connections together with the
horizontal levels through vertices cut the polygons into trapezoidal bands.
Bands glued across edges, or across level chords not covered by a saddle
connection, belong to the same cylinder. Slits are ignored while
decomposing and only checked against the finished cylinders.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union
import csv
import logging

from .geometry import Matrix2, Scalar, Vec2, in_sector, inverse, matrix, same_direction, upper_half
from .kernel import EdgeRef, FlatSurface, SurfacePoint, apply_linear
from .saddle_connections import DirectionKey, SaddleConnection, connection_germs, enumerate_saddle_connections
from .tracer import TerminalKind, trace

logger = logging.getLogger(__name__)

DEFAULT_BUDGET_FACTOR = 64
DEFAULT_CAP_FACTOR = 1024
# fractions of a band's height where a core leaf is started
CORE_LEAF_HEIGHTS = (Fraction(1, 2), Fraction(1, 3), Fraction(2, 3))
CSV_FIELDS = ['dx', 'dy', 'circ_dx_num', 'circ_dx_den', 'circ_dy_num', 'circ_dy_den',
              'area_num', 'area_den', 'disjoint_from_slits', 'slit_ids']


class DecompositionStatus(Enum):
    COMPLETE = "Complete"
    UNDETERMINED = "Undetermined"


@dataclass
class CylinderRecord:
    """One cylinder. The height is area / |circumference| and is not stored."""
    direction: DirectionKey
    circumference_holonomy: Vec2
    area: Scalar
    boundary_top: List[SaddleConnection] = field(default_factory=list)
    boundary_bottom: List[SaddleConnection] = field(default_factory=list)
    contains_slit_ids: FrozenSet[int] = frozenset()

    @property
    def interior_disjoint_from_slits(self) -> bool:
        return not self.contains_slit_ids

    @property
    def circumference_sq(self) -> Scalar:
        return self.circumference_holonomy.norm_sq()

    @property
    def circumference(self) -> float:
        return float(self.circumference_sq) ** 0.5

    @property
    def modulus_sq(self) -> Scalar:
        """Squared height over circumference; rational even when the height is not."""
        c2 = self.circumference_sq
        return self.area * self.area / (c2 * c2)


@dataclass
class DecompositionReport:
    direction: DirectionKey
    status: DecompositionStatus
    budget: Scalar
    cylinders: List[CylinderRecord] = field(default_factory=list)
    saddle_connections: List[SaddleConnection] = field(default_factory=list)
    reason: str = ""

    @property
    def is_complete(self) -> bool:
        return self.status is DecompositionStatus.COMPLETE

    @property
    def unfinished_budget(self) -> Optional[Scalar]:
        return None if self.is_complete else self.budget

    def total_area(self) -> Scalar:
        return sum((c.area for c in self.cylinders), Fraction(0))


@dataclass
class FilteredCylinders:
    """Cylinders disjoint from every slit; ``undetermined`` when the decomposition was not finished."""
    cylinders: List[CylinderRecord]
    undetermined: bool = False


@dataclass
class _Band:
    index: int
    polygon_id: int
    y0: Scalar
    y1: Scalar
    left_edge: int
    right_edge: int
    area: Scalar


@dataclass(frozen=True)
class _Piece:
    polygon_id: int
    y: Scalar
    x0: Scalar
    x1: Scalar
    connection: int


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def horizontal_shear(direction: Vec2) -> Matrix2:
    """Determinant-one matrix taking ``direction`` to the x-axis."""
    if direction.is_zero():
        raise ValueError("direction must be nonzero")
    if direction.x == 0:
        return matrix(0, 1, -1, 0)
    return matrix(1, 0, -direction.y / direction.x, 1)


def default_budget(surface: FlatSurface, factor: int = DEFAULT_BUDGET_FACTOR) -> Scalar:
    return Fraction(factor * max(1, surface.diameter_bound()))


def _chord(polygon, y: Scalar) -> Tuple[Scalar, Scalar]:
    xs = []
    for i in range(polygon.size):
        a, b = polygon.vertex(i), polygon.vertex(i + 1)
        if min(a.y, b.y) <= y <= max(a.y, b.y):
            if a.y == b.y:
                xs.extend((a.x, b.x))
            else:
                xs.append(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y))
    return min(xs), max(xs)


def _side_edges(polygon, y: Scalar) -> Tuple[int, int]:
    """Edges forming the left and right sides of the polygon at a non-vertex height."""
    left = right = -1
    left_x = right_x = None
    for i in range(polygon.size):
        a, b = polygon.vertex(i), polygon.vertex(i + 1)
        if a.y == b.y or not min(a.y, b.y) < y < max(a.y, b.y):
            continue
        x = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y)
        if left_x is None or x < left_x:
            left, left_x = i, x
        if right_x is None or x > right_x:
            right, right_x = i, x
    return left, right


def _covered(pieces: Sequence[_Piece], lo: Scalar, hi: Scalar) -> bool:
    reach = lo
    for piece in sorted(pieces, key=lambda p: p.x0):
        if piece.x0 > reach:
            return False
        reach = max(reach, piece.x1)
        if reach >= hi:
            return True
    return reach >= hi


def _germ_directions(surface: FlatSurface, kind: str, pid: int, index: int, v: Vec2) -> List[Vec2]:
    polygon = surface.polygons[pid]
    result = []
    for d in (v, -v):
        if kind == 'vertex':
            u, w = polygon.corner_sector(index)
            if in_sector(u, w, d):
                result.append(d)
        elif kind == 'edge':
            e = polygon.edge_vector(index)
            if same_direction(e, d) or e.cross(d) > 0:
                result.append(d)
        else:
            result.append(d)
    return result


class _Decomposer:
    def __init__(self, surface: FlatSurface, direction: Vec2, budget: Scalar):
        self.surface = surface
        self.v = direction
        self.key = DirectionKey.of(direction)
        self.budget = Fraction(budget)
        self.shear = horizontal_shear(direction)
        self.sheared = apply_linear(surface, self.shear)
        self.connections: List[SaddleConnection] = []
        self.pieces: Dict[int, List[_Piece]] = {}

    def undetermined(self, reason: str) -> DecompositionReport:
        logger.debug(f"Direction {self.key}: undetermined ({reason})")
        return DecompositionReport(self.key, DecompositionStatus.UNDETERMINED, self.budget,
                                   saddle_connections=self.connections, reason=reason)

    # -- separatrices ---------------------------------------------------------

    def trace_separatrices(self) -> Optional[str]:
        seen = {}
        for mp in self.surface.marked_points:
            for kind, pid, pos, index in self.surface.representatives(mp.location):
                for d in _germ_directions(self.surface, kind, pid, index, self.v):
                    result = trace(self.surface, SurfacePoint(pid, pos), d, self.budget, ignore_slits=True)
                    terminal = result.terminal.kind
                    if terminal is TerminalKind.BUDGET_EXCEEDED:
                        return f"separatrix from marked point {mp.id} exceeded budget {self.budget}"
                    if terminal is TerminalKind.HIT_BOUNDARY:
                        return f"separatrix from marked point {mp.id} reaches the boundary"
                    if terminal is not TerminalKind.HIT_MARKED:
                        continue
                    sc = SaddleConnection(mp.id, result.terminal.marked_id, result.holonomy,
                                          tuple(result.crossing_sequence()),
                                          connection_germs(self.surface, result))
                    # each connection is traced once from either end
                    key = tuple(sorted(sc.germs))
                    if key in seen:
                        continue
                    seen[key] = len(self.connections)
                    self._add_pieces(result.steps, len(self.connections))
                    self.connections.append(self._canonical(sc))
        return None

    def _canonical(self, sc: SaddleConnection) -> SaddleConnection:
        if upper_half(sc.holonomy):
            return sc
        return sc.reversed(tuple(self.surface.gluing.partner(e)[0] for e in reversed(sc.crossings)))

    def _add_pieces(self, steps, connection: int):
        for step in steps:
            if step.entry == step.exit:
                continue
            a = step.entry.transform(self.shear)
            b = step.exit.transform(self.shear)
            self._store_piece(step.polygon_id, a, b, connection)
            self._mirror(step.polygon_id, a, b, connection)

    def _store_piece(self, pid: int, a: Vec2, b: Vec2, connection: int):
        self.pieces.setdefault(pid, []).append(_Piece(pid, a.y, min(a.x, b.x), max(a.x, b.x), connection))

    def _mirror(self, pid: int, a: Vec2, b: Vec2, connection: int):
        polygon = self.sheared.polygons[pid]
        for i in range(polygon.size):
            v, e = polygon.vertex(i), polygon.edge_vector(i)
            if e.cross(a - v) == 0 and e.cross(b - v) == 0:
                edge = EdgeRef(pid, i)
                if self.sheared.edge_map(edge) is None:
                    return
                other, _, a2 = self.sheared.map_point(edge, a)
                _, _, b2 = self.sheared.map_point(edge, b)
                self._store_piece(other.polygon_id, a2, b2, connection)
                return

    # -- bands ----------------------------------------------------------------

    def build_bands(self) -> List[_Band]:
        bands: List[_Band] = []
        for pid in self.sheared.polygon_ids:
            polygon = self.sheared.polygons[pid]
            levels = {v.y for v in polygon.vertices}
            levels.update(loc.position.y for loc in self.sheared.mark_locations.get(pid, ()))
            levels.update(p.y for p in self.pieces.get(pid, ()))
            levels = sorted(levels)
            for y0, y1 in zip(levels, levels[1:]):
                w0 = _chord(polygon, y0)
                w1 = _chord(polygon, y1)
                area = ((w0[1] - w0[0]) + (w1[1] - w1[0])) * (y1 - y0) / 2
                left, right = _side_edges(polygon, (y0 + y1) / 2)
                bands.append(_Band(len(bands), pid, y0, y1, left, right, area))
        return bands

    def _level_pieces(self, pid: int, y: Scalar) -> List[_Piece]:
        return [p for p in self.pieces.get(pid, ()) if p.y == y]

    def join_bands(self, bands: List[_Band]) -> Tuple[_UnionFind, Optional[str]]:
        uf = _UnionFind(len(bands))
        by_side: Dict[EdgeRef, List[_Band]] = {}
        by_polygon: Dict[int, List[_Band]] = {}
        for band in bands:
            by_side.setdefault(EdgeRef(band.polygon_id, band.left_edge), []).append(band)
            by_side.setdefault(EdgeRef(band.polygon_id, band.right_edge), []).append(band)
            by_polygon.setdefault(band.polygon_id, []).append(band)

        for edge, side_bands in by_side.items():
            mapped = self.sheared.edge_map(edge)
            if mapped is None:
                return uf, f"leaves in polygon {edge.polygon_id} reach boundary edge {edge}"
            other, sign, offset = mapped
            for band in side_bands:
                if sign == 1:
                    lo, hi = band.y0 + offset.y, band.y1 + offset.y
                else:
                    lo, hi = offset.y - band.y1, offset.y - band.y0
                for candidate in by_side.get(other, ()):
                    if max(lo, candidate.y0) < min(hi, candidate.y1):
                        uf.union(band.index, candidate.index)

        for pid, poly_bands in by_polygon.items():
            polygon = self.sheared.polygons[pid]
            for lower, upper in zip(poly_bands, poly_bands[1:]):
                xl, xr = _chord(polygon, lower.y1)
                if xl < xr and not _covered(self._level_pieces(pid, lower.y1), xl, xr):
                    uf.union(lower.index, upper.index)
            for i in range(polygon.size):
                a, b = polygon.vertex(i), polygon.vertex(i + 1)
                if a.y != b.y:
                    continue
                edge = EdgeRef(pid, i)
                mapped = self.sheared.edge_map(edge)
                if mapped is None:
                    continue
                xl, xr = min(a.x, b.x), max(a.x, b.x)
                if _covered(self._level_pieces(pid, a.y), xl, xr):
                    continue
                other, _, _ = mapped
                here = poly_bands[0] if a.y == poly_bands[0].y0 else poly_bands[-1]
                q = self.sheared.polygons[other.polygon_id]
                qy = q.vertex(other.edge_index).y
                there_bands = by_polygon[other.polygon_id]
                there = there_bands[0] if qy == there_bands[0].y0 else there_bands[-1]
                uf.union(here.index, there.index)
        return uf, None

    # -- cylinders ------------------------------------------------------------

    def cylinder(self, members: List[_Band]) -> Tuple[Optional[CylinderRecord], Optional[str]]:
        result, reason = self._core_leaf(members)
        if result is None:
            return None, reason
        circumference = result.holonomy if upper_half(result.holonomy) else -result.holonomy

        top, bottom = set(), set()
        for band in members:
            poly = self.sheared.polygons[band.polygon_id]
            for y, bucket in ((band.y1, top), (band.y0, bottom)):
                lo, hi = _chord(poly, y)
                for piece in self._level_pieces(band.polygon_id, y):
                    if piece.x0 < hi and piece.x1 > lo:
                        bucket.add(piece.connection)
        record = CylinderRecord(
            self.key, circumference, sum((b.area for b in members), Fraction(0)),
            [self.connections[i] for i in sorted(top)],
            [self.connections[i] for i in sorted(bottom)],
            frozenset(self._slits_inside(members)))
        return record, None

    def _core_leaf(self, members: List[_Band]):
        """Closed leaf through the interior of the first band, tried at a few heights."""
        first = members[0]
        polygon = self.sheared.polygons[first.polygon_id]
        inv = inverse(self.shear)
        reason = ""
        for t in CORE_LEAF_HEIGHTS:
            y = first.y0 + (first.y1 - first.y0) * t
            xl, xr = _chord(polygon, y)
            start = SurfacePoint(first.polygon_id, Vec2((xl + xr) / 2, y).transform(inv))
            result = trace(self.surface, start, self.v, self.budget, ignore_slits=True)
            if result.terminal.kind is TerminalKind.CLOSED:
                return result, None
            reason = f"core leaf from {start} ended with {result.terminal.kind.value}"
            logger.debug(f"Direction {self.key}: {reason}")
        return None, reason

    def _slits_inside(self, members: List[_Band]) -> List[int]:
        inside = set()
        for band in members:
            for piece in self.surface.slit_pieces.get(band.polygon_id, ()):
                a, b = piece.a.transform(self.shear), piece.b.transform(self.shear)
                lo, hi = min(a.y, b.y), max(a.y, b.y)
                if lo == hi:
                    if band.y0 < lo < band.y1:
                        inside.add(piece.slit_id)
                elif max(lo, band.y0) < min(hi, band.y1):
                    inside.add(piece.slit_id)
        return sorted(inside)

    def run(self) -> DecompositionReport:
        reason = self.trace_separatrices()
        if reason:
            return self.undetermined(reason)
        bands = self.build_bands()
        uf, reason = self.join_bands(bands)
        if reason:
            return self.undetermined(reason)
        components: Dict[int, List[_Band]] = {}
        for band in bands:
            components.setdefault(uf.find(band.index), []).append(band)
        cylinders = []
        for root in sorted(components):
            record, reason = self.cylinder(components[root])
            if reason:
                return self.undetermined(reason)
            cylinders.append(record)
        cylinders.sort(key=lambda c: (c.circumference_sq, c.area, sorted(c.contains_slit_ids)))
        report = DecompositionReport(self.key, DecompositionStatus.COMPLETE, self.budget, cylinders,
                                     sorted(self.connections, key=SaddleConnection.sort_key))
        total = report.total_area()
        if total != self.surface.area():
            logger.warning(f"Direction {self.key}: cylinder areas sum to {total}, surface area is {self.surface.area()}")
        logger.debug(f"Direction {self.key}: {len(cylinders)} cylinders")
        return report


def _as_vector(direction: Union[Vec2, DirectionKey]) -> Vec2:
    return direction.vector() if isinstance(direction, DirectionKey) else direction


def decompose(surface: FlatSurface, direction: Union[Vec2, DirectionKey],
              budget: Optional[Scalar] = None) -> DecompositionReport:
    """Cylinder decomposition of ``surface`` in ``direction``.

    Returns Complete with the full cylinder list when every separatrix ends
    at a marked point within ``budget``, otherwise Undetermined.
    """
    if budget is None:
        budget = default_budget(surface)
    if budget <= 0:
        raise ValueError(f"budget must be positive, got {budget}")
    return _Decomposer(surface, _as_vector(direction), budget).run()


def decompose_with_escalation(surface: FlatSurface, direction: Union[Vec2, DirectionKey],
                              budget: Optional[Scalar] = None, cap: Optional[Scalar] = None) -> DecompositionReport:
    """Retry an undetermined decomposition with doubled budgets up to ``cap``."""
    if budget is None:
        budget = default_budget(surface)
    if cap is None:
        cap = default_budget(surface, DEFAULT_CAP_FACTOR)
    report = decompose(surface, direction, budget)
    while not report.is_complete and budget * 2 <= cap:
        budget = budget * 2
        logger.info(f"Direction {report.direction} undetermined, retrying with budget {budget}")
        report = decompose(surface, direction, budget)
    return report


def cylinders_disjoint_from_slits(surface: FlatSurface, direction: Union[Vec2, DirectionKey],
                                  budget: Optional[Scalar] = None) -> FilteredCylinders:
    report = decompose(surface, direction, budget)
    if not report.is_complete:
        return FilteredCylinders([], undetermined=True)
    return FilteredCylinders([c for c in report.cylinders if c.interior_disjoint_from_slits])


def cylinder_direction_scan(surface: FlatSurface, max_circumference: Scalar, budget: Optional[Scalar] = None,
                            threads: int = 1, disjoint_only: bool = True) -> List[CylinderRecord]:
    """Cylinders of circumference at most ``max_circumference`` over all short saddle connection and slit directions."""
    if max_circumference <= 0:
        raise ValueError(f"max_circumference must be positive, got {max_circumference}")
    max_circumference = Fraction(max_circumference)
    directions = {sc.direction for sc in enumerate_saddle_connections(surface, max_circumference, threads)}
    for slit in surface.slits:
        h = surface.slit_holonomy(slit.id)
        if h.norm_sq() <= max_circumference * max_circumference:
            directions.add(DirectionKey.of(h))
    directions = sorted(directions)
    logger.info(f"Scanning {len(directions)} directions for cylinders up to circumference {max_circumference}")

    def scan(key: DirectionKey) -> List[CylinderRecord]:
        report = decompose_with_escalation(surface, key, budget)
        if not report.is_complete:
            logger.warning(f"Direction {key} stayed undetermined at budget {report.budget}")
            return []
        bound = max_circumference * max_circumference
        return [c for c in report.cylinders
                if c.circumference_sq <= bound and (c.interior_disjoint_from_slits or not disjoint_only)]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            found = list(executor.map(scan, directions))
    else:
        found = [scan(k) for k in directions]
    return [c for group in found for c in group]


def write_cylinders_csv(cylinders: Sequence[CylinderRecord], path: Union[str, Path]):
    with open(path, 'w', newline='') as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for c in cylinders:
            h = c.circumference_holonomy
            writer.writerow({
                'dx': c.direction.dx,
                'dy': c.direction.dy,
                'circ_dx_num': h.x.numerator,
                'circ_dx_den': h.x.denominator,
                'circ_dy_num': h.y.numerator,
                'circ_dy_den': h.y.denominator,
                'area_num': c.area.numerator,
                'area_den': c.area.denominator,
                'disjoint_from_slits': c.interior_disjoint_from_slits,
                'slit_ids': ' '.join(str(i) for i in sorted(c.contains_slit_ids)),
            })
    logger.info(f"Wrote {len(cylinders)} cylinders to {path}")
