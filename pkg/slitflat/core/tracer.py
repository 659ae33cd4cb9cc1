"""Exact straight-line tracing across polygon gluings, and the developing map."""
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple
import logging

from .errors import AmbiguousStart, InconsistentSequence
from .geometry import Scalar, Vec2, collinear_overlap, in_sector, ray_segment_hit
from .kernel import EdgeRef, FlatSurface, SurfacePoint

logger = logging.getLogger(__name__)


class TerminalKind(Enum):
    HIT_MARKED = "HitMarked"
    HIT_SLIT_INTERIOR = "HitSlitInterior"
    HIT_BOUNDARY = "HitBoundary"
    CLOSED = "Closed"
    BUDGET_EXCEEDED = "BudgetExceeded"


# ties at the same parameter resolve in this order
_PRIORITY = {TerminalKind.HIT_MARKED: 0, TerminalKind.CLOSED: 1, TerminalKind.HIT_SLIT_INTERIOR: 2}


@dataclass(frozen=True)
class Terminal:
    kind: TerminalKind
    point: Optional[SurfacePoint] = None
    marked_id: Optional[int] = None
    slit_id: Optional[int] = None
    edge: Optional[EdgeRef] = None


@dataclass(frozen=True)
class TrajectoryStep:
    polygon_id: int
    entry: Vec2
    exit: Vec2
    crossed_edge: Optional[EdgeRef] = None
    # edges walked around a regular vertex when the trajectory passes through it
    vertex_chain: Tuple[EdgeRef, ...] = ()


@dataclass
class TraceResult:
    """Trajectory pieces and how the trajectory ended.

    Lengths are kept as the parameter ``t`` along ``direction`` so that the
    squared length ``t**2 * |direction|**2`` stays rational.
    """
    start: SurfacePoint
    direction: Vec2
    steps: List[TrajectoryStep]
    terminal: Terminal
    parameter: Scalar
    resume: Optional[Tuple[int, Vec2, Vec2]] = field(default=None, repr=False)
    closure_points: Optional[Dict[int, List[Tuple[Vec2, Vec2]]]] = field(default=None, repr=False)

    @property
    def length_sq(self) -> Scalar:
        return self.parameter * self.parameter * self.direction.norm_sq()

    @property
    def holonomy(self) -> Vec2:
        return self.direction.scale(self.parameter)

    @property
    def length(self) -> float:
        """Presentation only."""
        return float(self.length_sq) ** 0.5

    def crossing_sequence(self) -> List[EdgeRef]:
        sequence: List[EdgeRef] = []
        for step in self.steps:
            sequence.extend(step.vertex_chain)
            if step.crossed_edge is not None:
                sequence.append(step.crossed_edge)
        return sequence


@dataclass(frozen=True)
class Placement:
    """A polygon placed in the plane as ``sign * local + offset``."""
    polygon_id: int
    offset: Vec2
    sign: int = 1

    def place(self, local: Vec2) -> Vec2:
        return local.scale(self.sign) + self.offset

    def unplace(self, global_point: Vec2) -> Vec2:
        return (global_point - self.offset).scale(self.sign)

    def vertices(self, surface: FlatSurface) -> List[Vec2]:
        return [self.place(v) for v in surface.polygons[self.polygon_id].vertices]


def develop(surface: FlatSurface, crossing_sequence: Sequence[EdgeRef],
            base_placement: Placement) -> List[Placement]:
    placements = [base_placement]
    current = base_placement
    for n, edge in enumerate(crossing_sequence):
        if edge.polygon_id != current.polygon_id:
            raise InconsistentSequence(
                f"crossing {n} leaves polygon {edge.polygon_id} but the chain is in polygon {current.polygon_id}")
        mapped = surface.edge_map(edge)
        if mapped is None:
            raise InconsistentSequence(f"crossing {n} uses boundary edge {edge}")
        other, eps, c = mapped
        sign = current.sign * eps
        current = Placement(other.polygon_id, current.offset - c.scale(sign), sign)
        placements.append(current)
    return placements


@dataclass
class _StartState:
    polygon_id: int
    position: Vec2
    direction: Vec2
    chain: Tuple[EdgeRef, ...] = ()
    blocked: Optional[Terminal] = None


def _resolve_start(surface: FlatSurface, start: SurfacePoint, direction: Vec2,
                   sector: Optional[int]) -> _StartState:
    polygon = surface.polygons[start.polygon_id]
    where = polygon.locate(start.position)
    if where is None:
        raise ValueError(f"start {start} lies outside polygon {start.polygon_id}")
    kind, index = where
    if kind == 'vertex':
        corner = (start.polygon_id, index)
        vc = surface.vertex_classes[surface.corner_class[corner]]
        if sector is not None:
            qid, j = vc.corners[sector % len(vc.corners)]
            local = direction.scale(surface.corner_sign[corner] * surface.corner_sign[(qid, j)])
            found = surface.continue_through_vertex(qid, j, local)
            if found is None or vc.corners.index((found[0], found[1])) != sector % len(vc.corners):
                raise AmbiguousStart(f"direction {direction} is not in sector {sector} at {start}")
            return _StartState(qid, surface.polygons[qid].vertex(j), local)
        u, w = polygon.corner_sector(index)
        if in_sector(u, w, direction):
            return _StartState(start.polygon_id, start.position, direction)
        if not vc.on_boundary and vc.half_turns != 2:
            raise AmbiguousStart(
                f"direction {direction} does not enter polygon {start.polygon_id} at cone point {start}; "
                f"pass a sector index")
        found = surface.continue_through_vertex(start.polygon_id, index, direction)
        if found is None:
            return _StartState(start.polygon_id, start.position, direction,
                               blocked=Terminal(TerminalKind.HIT_BOUNDARY, point=start))
        qid, j, local, chain = found
        return _StartState(qid, surface.polygons[qid].vertex(j), local, chain)
    if kind == 'edge' and polygon.edge_vector(index).cross(direction) < 0:
        edge = EdgeRef(start.polygon_id, index)
        if surface.edge_map(edge) is None:
            return _StartState(start.polygon_id, start.position, direction,
                               blocked=Terminal(TerminalKind.HIT_BOUNDARY, point=start, edge=edge))
        other, sign, q = surface.map_point(edge, start.position)
        return _StartState(other.polygon_id, q, direction.scale(sign), (edge,))
    return _StartState(start.polygon_id, start.position, direction)


def _start_directions(surface: FlatSurface, state: _StartState) -> Dict[int, List[Tuple[Vec2, Vec2]]]:
    """Start point representatives with the local direction the trajectory had there."""
    result: Dict[int, List[Tuple[Vec2, Vec2]]] = {}
    point = SurfacePoint(state.polygon_id, state.position)
    base_sign = None
    for kind, pid, pos, index in surface.representatives(point):
        if kind == 'vertex':
            if base_sign is None:
                where = surface.polygons[state.polygon_id].locate(state.position)
                base_sign = surface.corner_sign[(state.polygon_id, where[1])]
            local = state.direction.scale(base_sign * surface.corner_sign[(pid, index)])
        elif pid == state.polygon_id:
            local = state.direction
        else:
            _, sign, _ = surface.edge_map(EdgeRef(state.polygon_id,
                                                  surface.polygons[state.polygon_id].locate(state.position)[1]))
            local = state.direction.scale(sign)
        result.setdefault(pid, []).append((pos, local))
    return result


def trace(surface: FlatSurface, start: SurfacePoint, direction: Vec2, max_length: Scalar,
          sector: Optional[int] = None, ignore_slits: bool = False) -> TraceResult:
    """Follow the straight trajectory from ``start`` until its first event.

    Events are: a marked point, the open interior of a slit (unless
    ``ignore_slits``), a boundary edge, a return to the start point with the
    same direction, or the length budget. The budget is checked on squared
    lengths; a trajectory that overruns it stops at the last polygon boundary
    it reached within budget.
    """
    if direction.is_zero():
        raise ValueError("direction must be nonzero")
    state = _resolve_start(surface, start, direction, sector)
    steps: List[TrajectoryStep] = []
    if state.blocked is not None:
        return TraceResult(start, direction, steps, state.blocked, Fraction(0))
    if state.chain:
        steps.append(TrajectoryStep(start.polygon_id, start.position, start.position, None, state.chain))
    start_marked = surface.marked_id_at(start) is not None
    closure_points = {} if start_marked else _start_directions(surface, state)
    return _follow(surface, start, direction, state.polygon_id, state.position, state.direction,
                   Fraction(0), steps, Fraction(max_length), closure_points, ignore_slits)


def continue_trace(surface: FlatSurface, previous: TraceResult, total_length: Scalar,
                   ignore_slits: bool = False) -> TraceResult:
    """Resume a budget-exceeded trace under the larger total budget ``total_length``."""
    if previous.terminal.kind is not TerminalKind.BUDGET_EXCEEDED or previous.resume is None:
        return previous
    pid, p, d = previous.resume
    closure_points = previous.closure_points or {}
    return _follow(surface, previous.start, previous.direction, pid, p, d, previous.parameter,
                   list(previous.steps), Fraction(total_length), closure_points, ignore_slits)


def _follow(surface: FlatSurface, start: SurfacePoint, direction: Vec2, pid: int, p: Vec2, d: Vec2,
            t: Scalar, steps: List[TrajectoryStep], max_length: Scalar,
            closure_points: Dict[int, List[Tuple[Vec2, Vec2]]], ignore_slits: bool) -> TraceResult:
    budget_sq = max_length * max_length
    norm_sq = direction.norm_sq()

    def within_budget(param: Scalar) -> bool:
        return param * param * norm_sq <= budget_sq

    def finish(terminal: Terminal, param: Scalar, resume=None) -> TraceResult:
        return TraceResult(start, direction, steps, terminal, param, resume, closure_points)

    while True:
        polygon = surface.polygons[pid]
        s_exit, exit_edge = polygon.exit_parameter(p, d)
        best: Optional[Tuple[Scalar, int, Terminal]] = None

        def offer(s: Scalar, terminal: Terminal):
            nonlocal best
            key = (s, _PRIORITY[terminal.kind])
            if best is None or key < (best[0], best[1]):
                best = (s, _PRIORITY[terminal.kind], terminal)

        d_sq = d.norm_sq()
        for loc in surface.mark_locations.get(pid, ()):
            v = loc.position - p
            if d.cross(v) == 0 and d.dot(v) > 0:
                s = d.dot(v) / d_sq
                if s <= s_exit:
                    offer(s, Terminal(TerminalKind.HIT_MARKED, SurfacePoint(pid, loc.position),
                                      marked_id=loc.marked_id))
        if not ignore_slits:
            for piece in surface.slit_pieces.get(pid, ()):
                overlap = collinear_overlap(p, d, piece.a, piece.b)
                if overlap is not None:
                    s0, s1 = overlap
                    first = max(s0, Fraction(0))
                    if first < s1 and first <= s_exit:
                        offer(first, Terminal(TerminalKind.HIT_SLIT_INTERIOR,
                                              SurfacePoint(pid, p + d.scale(first)), slit_id=piece.slit_id))
                    continue
                hit = ray_segment_hit(p, d, piece.a, piece.b)
                if hit is None:
                    continue
                s, u = hit
                if s <= 0 or s > s_exit:
                    continue
                if 0 < u < 1 or (u == 0 and not piece.a_is_end) or (u == 1 and not piece.b_is_end):
                    offer(s, Terminal(TerminalKind.HIT_SLIT_INTERIOR, SurfacePoint(pid, p + d.scale(s)),
                                      slit_id=piece.slit_id))
        for pos, local in closure_points.get(pid, ()):
            v = pos - p
            if local == d and d.cross(v) == 0 and d.dot(v) > 0:
                s = d.dot(v) / d_sq
                if s <= s_exit:
                    offer(s, Terminal(TerminalKind.CLOSED, SurfacePoint(pid, pos)))

        if best is not None:
            s, _, terminal = best
            if not within_budget(t + s):
                return finish(Terminal(TerminalKind.BUDGET_EXCEEDED), t, (pid, p, d))
            steps.append(TrajectoryStep(pid, p, p + d.scale(s)))
            return finish(terminal, t + s)

        if not within_budget(t + s_exit):
            return finish(Terminal(TerminalKind.BUDGET_EXCEEDED), t, (pid, p, d))
        q = p + d.scale(s_exit)
        t += s_exit
        kind, index = polygon.locate(q)
        if kind == 'vertex':
            found = surface.continue_through_vertex(pid, index, d)
            if found is None:
                steps.append(TrajectoryStep(pid, p, q))
                return finish(Terminal(TerminalKind.HIT_BOUNDARY, SurfacePoint(pid, q)), t)
            qid, j, d, chain = found
            steps.append(TrajectoryStep(pid, p, q, None, chain))
            pid, p = qid, surface.polygons[qid].vertex(j)
            continue
        edge = EdgeRef(pid, exit_edge)
        if surface.edge_map(edge) is None:
            steps.append(TrajectoryStep(pid, p, q))
            return finish(Terminal(TerminalKind.HIT_BOUNDARY, SurfacePoint(pid, q), edge=edge), t)
        steps.append(TrajectoryStep(pid, p, q, edge))
        other, sign, p = surface.map_point(edge, q)
        pid, d = other.polygon_id, d.scale(sign)


def trace_onward(surface: FlatSurface, point: SurfacePoint, local_direction: Vec2, origin: SurfacePoint,
                 global_direction: Vec2, parameter: Scalar, max_length: Scalar,
                 ignore_slits: bool = False) -> TraceResult:
    """Continue a ray already followed for ``parameter`` units of ``global_direction``.

    Used by the saddle connection search to hand a ray over to the tracer
    at a regular point it has to pass through.
    """
    state = _resolve_start(surface, point, local_direction, None)
    steps: List[TrajectoryStep] = []
    if state.blocked is not None:
        return TraceResult(origin, global_direction, steps, state.blocked, parameter)
    if state.chain:
        steps.append(TrajectoryStep(point.polygon_id, point.position, point.position, None, state.chain))
    return _follow(surface, origin, global_direction, state.polygon_id, state.position, state.direction,
                   Fraction(parameter), steps, Fraction(max_length), {}, ignore_slits)
