"""Enumeration of saddle connections up to a length bound.

The search starts at every marked point and splits the star of directions
around it into cones narrower than a half-turn. Each cone is unfolded polygon
by polygon: inside a polygon the vertices, marks and slit-piece endpoints cut
the cone into open intervals in which every ray crosses the same edge, and
those intervals are followed into the neighbouring polygon. The rays that
pass exactly through one of those points are handed to the tracer. Windows
farther than the bound are pruned, so the search is finite and exact.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cmp_to_key, total_ordering
from math import atan2
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union
import csv
import logging

from .geometry import (
    ZERO, Scalar, Vec2, primitive_direction, ray_segment_hit, same_direction,
    squared_distance_to_segment, strictly_between, upper_half,
)
from .kernel import EdgeRef, FlatSurface, HalfTranslationSurface, SurfacePoint
from .tracer import Placement, TerminalKind, TraceResult, trace, trace_onward

logger = logging.getLogger(__name__)

DEFAULT_MAX_DEPTH = 10000
CSV_FIELDS = ['start_id', 'end_id', 'dx_num', 'dx_den', 'dy_num', 'dy_den', 'length_sq_num', 'length_sq_den']


@total_ordering
@dataclass(frozen=True)
class DirectionKey:
    """Primitive integer direction modulo pi, ordered by angle in [0, pi)."""
    dx: int
    dy: int

    @classmethod
    def of(cls, v: Vec2) -> 'DirectionKey':
        dx, dy = primitive_direction(v)
        if not upper_half(Vec2(dx, dy)):
            dx, dy = -dx, -dy
        return cls(dx, dy)

    def vector(self) -> Vec2:
        return Vec2(self.dx, self.dy)

    def __lt__(self, other: 'DirectionKey') -> bool:
        return self.vector().cross(other.vector()) > 0

    def angle(self) -> float:
        return atan2(self.dy, self.dx)

    def __str__(self) -> str:
        return f"({self.dx},{self.dy})"


@dataclass(frozen=True)
class SaddleConnection:
    """A straight segment between marked points with no marked point inside.

    ``holonomy`` is in the frame of the start polygon and always points into
    the canonical half-plane; ``crossings`` lists the edges crossed, so that
    developing them from the start places the end at start + holonomy.
    ``germs`` names the rays the segment leaves along at its start and at its
    end; parallel connections between the same points differ there.
    """
    start_id: int
    end_id: int
    holonomy: Vec2
    crossings: Tuple[EdgeRef, ...] = ()
    germs: Tuple[tuple, ...] = ()

    @property
    def length_sq(self) -> Scalar:
        return self.holonomy.norm_sq()

    @property
    def length(self) -> float:
        return float(self.length_sq) ** 0.5

    @property
    def direction(self) -> DirectionKey:
        return DirectionKey.of(self.holonomy)

    def sort_key(self) -> tuple:
        return (self.length_sq, self.direction, self.start_id, self.end_id, self.crossings, self.germs)

    def reversed(self, crossings: Tuple[EdgeRef, ...]) -> 'SaddleConnection':
        """The same segment run backwards; ``crossings`` is the reversed crossing sequence."""
        return SaddleConnection(self.end_id, self.start_id, -self.holonomy, crossings, tuple(reversed(self.germs)))


def connection_germs(surface: FlatSurface, result: TraceResult) -> Tuple[tuple, tuple]:
    """Start and end rays of a trace that ended at a marked point."""
    first = surface.outgoing_germ(result.start, result.direction)
    last = result.steps[-1]
    return first, surface.outgoing_germ(result.terminal.point, last.entry - last.exit)


@dataclass
class SearchCounters:
    initial_sectors: int = 0
    rays_traced: int = 0
    nodes_expanded: int = 0
    leaves_blocked: int = 0
    leaves_boundary: int = 0
    leaves_pruned: int = 0
    leaves_depth_capped: int = 0

    def merge(self, other: 'SearchCounters'):
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))


@dataclass
class SearchCertificate:
    """Bookkeeping showing that the search looked at every direction.

    ``coverage`` maps a marked point id to (half-turns covered by its initial
    cones and rays, half-turns expected); the expected value is None for
    points on the boundary, where the total angle is not a multiple of pi.
    """
    max_length: Scalar
    full_circle: bool
    counters: SearchCounters
    coverage: Dict[int, Tuple[int, Optional[int]]] = field(default_factory=dict)

    @property
    def covers_full_circle(self) -> bool:
        return all(expected is None or covered == expected for covered, expected in self.coverage.values())

    @property
    def complete(self) -> bool:
        return self.covers_full_circle and self.counters.leaves_depth_capped == 0

    def summary_lines(self) -> List[str]:
        c = self.counters
        return [
            f"Length bound: {self.max_length}",
            f"Directions searched: {'full circle' if self.full_circle else 'half circle (translation)'}",
            f"Base points: {len(self.coverage)}",
            f"Initial sectors: {c.initial_sectors}",
            f"Rays traced: {c.rays_traced}",
            f"Unfolding nodes: {c.nodes_expanded}",
            f"Leaves blocked by slits: {c.leaves_blocked}",
            f"Leaves at boundary: {c.leaves_boundary}",
            f"Leaves beyond bound: {c.leaves_pruned}",
            f"Leaves at depth cap: {c.leaves_depth_capped}",
            f"Complete: {self.complete}",
        ]


@dataclass
class EnumerationResult:
    connections: List[SaddleConnection]
    certificate: SearchCertificate


@dataclass(frozen=True)
class _Task:
    base: SurfacePoint
    base_id: int
    placement: Placement
    cone: Optional[Tuple[Vec2, Vec2]] = None
    ray: Optional[Vec2] = None


@dataclass(frozen=True)
class _Node:
    placement: Placement
    entry_edge: Optional[int]
    lo: Vec2
    hi: Vec2
    path: Tuple[EdgeRef, ...]
    depth: int


def _angle_order(a: Vec2, b: Vec2) -> int:
    c = a.cross(b)
    return -1 if c > 0 else (1 if c < 0 else 0)


def _star_sectors(surface: FlatSurface, kind: str, pid: int, index: int
                  ) -> Tuple[List[Tuple[Vec2, Vec2]], List[Vec2]]:
    """Open cones and their boundary rays covering a representative's directions."""
    polygon = surface.polygons[pid]
    if kind == 'vertex':
        u, w = polygon.corner_sector(index)
        return [(u, w)], [u]
    if kind == 'edge':
        e = polygon.edge_vector(index)
        n = Vec2(-e.y, e.x)
        return [(e, n), (n, -e)], [e, n]
    x, y = Vec2(1, 0), Vec2(0, 1)
    return [(x, y), (y, -x), (-x, -y), (-y, x)], [x, y, -x, -y]


def _restrict_to_upper_half(cones: List[Tuple[Vec2, Vec2]], rays: List[Vec2]
                            ) -> Tuple[List[Tuple[Vec2, Vec2]], List[Vec2]]:
    kept_cones, kept_rays = [], [r for r in rays if upper_half(r)]
    for lo, hi in cones:
        parts = [(lo, hi)]
        for cut in (Vec2(1, 0), Vec2(-1, 0)):
            if strictly_between(lo, hi, cut):
                parts = [(lo, cut), (cut, hi)]
                if upper_half(cut):
                    kept_rays.append(cut)
        kept_cones.extend(p for p in parts if (p[0] + p[1]).y > 0)
    return kept_cones, kept_rays


def _count_line_passes(cones: List[Tuple[Vec2, Vec2]], rays: List[Vec2]) -> int:
    probe = Vec2(1, 1)
    count = 0
    for d in (probe, -probe):
        count += sum(1 for lo, hi in cones if strictly_between(lo, hi, d))
        count += sum(1 for r in rays if same_direction(r, d))
    return count


class SaddleConnectionSearch:
    """One enumeration run over a fixed surface and length bound."""

    def __init__(self, surface: FlatSurface, max_length: Scalar, threads: int = 1,
                 full_circle: Optional[bool] = None, max_depth: int = DEFAULT_MAX_DEPTH):
        if max_length <= 0:
            raise ValueError("length bound must be positive")
        self.surface = surface
        self.max_length = Scalar(max_length)
        self.budget_sq = self.max_length * self.max_length
        self.threads = max(1, threads)
        self.full_circle = isinstance(surface, HalfTranslationSurface) if full_circle is None else full_circle
        self.max_depth = max_depth
        self._points: Dict[int, List[Vec2]] = {}
        for pid in surface.polygon_ids:
            points = set(surface.polygons[pid].vertices)
            points.update(loc.position for loc in surface.mark_locations.get(pid, ()))
            for piece in surface.slit_pieces.get(pid, ()):
                points.update((piece.a, piece.b))
            self._points[pid] = sorted(points)

    # -- setup ----------------------------------------------------------------

    def _tasks(self) -> Tuple[List[_Task], Dict[int, Tuple[int, Optional[int]]]]:
        tasks: List[_Task] = []
        coverage: Dict[int, Tuple[int, Optional[int]]] = {}
        for mp in self.surface.marked_points:
            reps = self.surface.representatives(mp.location)
            all_cones, all_rays = [], []
            for kind, pid, pos, index in reps:
                cones, rays = _star_sectors(self.surface, kind, pid, index)
                if not self.full_circle:
                    cones, rays = _restrict_to_upper_half(cones, rays)
                all_cones.extend(cones)
                all_rays.extend(rays)
                placement = Placement(pid, -pos, 1)
                base = SurfacePoint(pid, pos)
                tasks.extend(_Task(base, mp.id, placement, cone=c) for c in cones)
                tasks.extend(_Task(base, mp.id, placement, ray=r) for r in rays)
            coverage[mp.id] = (_count_line_passes(all_cones, all_rays), self._expected_passes(reps))
        return tasks, coverage

    def _expected_passes(self, reps) -> Optional[int]:
        kind, pid, _, index = reps[0]
        if kind == 'vertex':
            vc = self.surface.vertex_classes[self.surface.corner_class[(pid, index)]]
            if vc.on_boundary:
                return None
            full = vc.half_turns
        elif kind == 'edge' and len(reps) == 1:
            return None
        else:
            full = 2
        return full if self.full_circle else full // 2

    # -- per-task search ------------------------------------------------------

    def _run_task(self, task: _Task) -> Tuple[List[SaddleConnection], SearchCounters]:
        counters = SearchCounters()
        found: List[SaddleConnection] = []
        if task.ray is not None:
            result = trace(self.surface, task.base, task.ray, self.max_length)
            counters.rays_traced += 1
            self._record(task, result, (), found, counters)
            return found, counters
        counters.initial_sectors += 1
        stack = [_Node(task.placement, None, task.cone[0], task.cone[1], (), 0)]
        while stack:
            node = stack.pop()
            counters.nodes_expanded += 1
            stack.extend(reversed(self._expand(task, node, found, counters)))
        return found, counters

    def _record(self, task: _Task, result: TraceResult, prefix: Tuple[EdgeRef, ...],
                found: List[SaddleConnection], counters: SearchCounters):
        kind = result.terminal.kind
        if kind is TerminalKind.HIT_MARKED:
            crossings = prefix + tuple(result.crossing_sequence())
            found.append(SaddleConnection(task.base_id, result.terminal.marked_id, result.holonomy, crossings,
                                          connection_germs(self.surface, result)))
        elif kind is TerminalKind.HIT_SLIT_INTERIOR:
            counters.leaves_blocked += 1
        elif kind is TerminalKind.HIT_BOUNDARY:
            counters.leaves_boundary += 1
        else:
            counters.leaves_pruned += 1

    def _entry_parameter(self, node: _Node, origin: Vec2, d: Vec2) -> Scalar:
        if node.entry_edge is None:
            return Scalar(0)
        polygon = self.surface.polygons[node.placement.polygon_id]
        e = polygon.edge_vector(node.entry_edge)
        return e.cross(origin - polygon.vertex(node.entry_edge)) / (-e.cross(d))

    def _critical_directions(self, node: _Node) -> List[Vec2]:
        pl = node.placement
        inside = []
        for local in self._points[pl.polygon_id]:
            g = pl.place(local)
            if not g.is_zero() and strictly_between(node.lo, node.hi, g):
                inside.append(g)
        inside.sort(key=cmp_to_key(_angle_order))
        directions: List[Vec2] = []
        for g in inside:
            if directions and same_direction(directions[-1], g):
                if g.norm_sq() < directions[-1].norm_sq():
                    directions[-1] = g
                continue
            directions.append(g)
        return directions

    def _expand(self, task: _Task, node: _Node, found: List[SaddleConnection],
                counters: SearchCounters) -> List[_Node]:
        pl = node.placement
        polygon = self.surface.polygons[pl.polygon_id]
        origin = pl.unplace(ZERO)
        critical = self._critical_directions(node)

        for c in critical:
            d = c.scale(pl.sign)
            counters.rays_traced += 1
            if node.entry_edge is None:
                result = trace(self.surface, task.base, c, self.max_length)
            else:
                s_entry = self._entry_parameter(node, origin, d)
                entry_point = SurfacePoint(pl.polygon_id, origin + d.scale(s_entry))
                result = trace_onward(self.surface, entry_point, d, task.base, c, s_entry, self.max_length)
            self._record(task, result, node.path, found, counters)

        children: List[_Node] = []
        bounds = [node.lo] + critical + [node.hi]
        for lo, hi in zip(bounds, bounds[1:]):
            d = (lo + hi).scale(pl.sign)
            s_entry = self._entry_parameter(node, origin, d)
            s_exit, exit_edge = polygon.exit_parameter(origin, d)
            if self._blocked(pl.polygon_id, origin, d, s_entry, s_exit):
                counters.leaves_blocked += 1
                continue
            edge = EdgeRef(pl.polygon_id, exit_edge)
            mapped = self.surface.edge_map(edge)
            if mapped is None:
                counters.leaves_boundary += 1
                continue
            a = pl.place(polygon.vertex(exit_edge))
            b = pl.place(polygon.vertex(exit_edge + 1))
            if squared_distance_to_segment(ZERO, a, b) > self.budget_sq:
                counters.leaves_pruned += 1
                continue
            if node.depth + 1 > self.max_depth:
                counters.leaves_depth_capped += 1
                continue
            other, eps, offset = mapped
            sign = pl.sign * eps
            child = Placement(other.polygon_id, pl.offset - offset.scale(sign), sign)
            children.append(_Node(child, other.edge_index, lo, hi, node.path + (edge,), node.depth + 1))
        return children

    def _blocked(self, pid: int, origin: Vec2, d: Vec2, s_entry: Scalar, s_exit: Scalar) -> bool:
        for piece in self.surface.slit_pieces.get(pid, ()):
            hit = ray_segment_hit(origin, d, piece.a, piece.b)
            if hit is None:
                continue
            s, u = hit
            if s <= s_entry or s > s_exit:
                continue
            if 0 < u < 1 or (u == 0 and not piece.a_is_end) or (u == 1 and not piece.b_is_end):
                return True
        return False

    # -- driver ---------------------------------------------------------------

    def run(self) -> EnumerationResult:
        tasks, coverage = self._tasks()
        logger.info(f"Searching saddle connections up to length {self.max_length}: "
                    f"{len(tasks)} tasks from {len(coverage)} marked points, {self.threads} threads")
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as executor:
                outcomes = list(executor.map(self._run_task, tasks))
        else:
            outcomes = [self._run_task(t) for t in tasks]

        counters = SearchCounters()
        seen = set()
        connections: List[SaddleConnection] = []
        for found, task_counters in outcomes:
            counters.merge(task_counters)
            for sc in found:
                sc = self._canonical(sc)
                key = self._dedupe_key(sc)
                if key in seen:
                    continue
                seen.add(key)
                connections.append(sc)
        connections.sort(key=SaddleConnection.sort_key)
        certificate = SearchCertificate(self.max_length, self.full_circle, counters, coverage)
        if not certificate.covers_full_circle:
            logger.warning("Initial sectors do not cover the full angle at every marked point")
        logger.info(f"Found {len(connections)} saddle connections "
                    f"({counters.nodes_expanded} nodes, {counters.rays_traced} rays)")
        return EnumerationResult(connections, certificate)

    def _reverse_crossings(self, crossings: Sequence[EdgeRef]) -> Tuple[EdgeRef, ...]:
        return tuple(self.surface.gluing.partner(e)[0] for e in reversed(crossings))

    def _canonical(self, sc: SaddleConnection) -> SaddleConnection:
        if upper_half(sc.holonomy):
            return sc
        return sc.reversed(self._reverse_crossings(sc.crossings))

    @staticmethod
    def _dedupe_key(sc: SaddleConnection) -> tuple:
        # a segment found from both ends carries the same two rays
        return tuple(sorted(sc.germs))


def enumerate_saddle_connections(surface: FlatSurface, max_length: Scalar, threads: int = 1,
                                 full_circle: Optional[bool] = None,
                                 max_depth: int = DEFAULT_MAX_DEPTH) -> List[SaddleConnection]:
    """All saddle connections of length at most ``max_length``, sorted.

    Translation surfaces report each connection once with its holonomy in the
    upper half-plane. Half-translation surfaces are searched over the full
    circle; a segment found from both of its ends is reported once.
    """
    return SaddleConnectionSearch(surface, max_length, threads, full_circle, max_depth).run().connections


def enumerate_with_certificate(surface: FlatSurface, max_length: Scalar, threads: int = 1,
                               full_circle: Optional[bool] = None,
                               max_depth: int = DEFAULT_MAX_DEPTH) -> EnumerationResult:
    return SaddleConnectionSearch(surface, max_length, threads, full_circle, max_depth).run()


def completeness_certificate(surface: FlatSurface, max_length: Scalar, threads: int = 1) -> SearchCertificate:
    return enumerate_with_certificate(surface, max_length, threads).certificate


def connection_directions(connections: Sequence[SaddleConnection]) -> Dict[DirectionKey, List[SaddleConnection]]:
    """Group connections by direction modulo pi, keeping length order inside each group."""
    groups: Dict[DirectionKey, List[SaddleConnection]] = {}
    for sc in connections:
        groups.setdefault(sc.direction, []).append(sc)
    return dict(sorted(groups.items()))


def write_connections_csv(connections: Sequence[SaddleConnection], path: Union[str, Path]):
    with open(path, 'w', newline='') as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for sc in connections:
            h, length_sq = sc.holonomy, sc.length_sq
            writer.writerow({
                'start_id': sc.start_id,
                'end_id': sc.end_id,
                'dx_num': h.x.numerator,
                'dx_den': h.x.denominator,
                'dy_num': h.y.numerator,
                'dy_den': h.y.denominator,
                'length_sq_num': length_sq.numerator,
                'length_sq_den': length_sq.denominator,
            })
    logger.info(f"Wrote {len(connections)} saddle connections to {path}")
