"""Surface builders: slit tori, staircases, pillowcases, covers and doubles.

Presets with several slits put their endpoints on the 1/9 grid of the unit
square. The coordinates are a fixed choice; nearby rational choices are
expected to behave the same.
"""
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union
import csv
import logging

from .errors import NoBoundary, RationalInput, SurfaceValidationError, UnknownPreset
from .geometry import Scalar, ScalarLike, Vec2, format_scalar, to_scalar
from .kernel import (
    Convention, EdgeRef, FlatSurface, GluedPair, Gluing, HalfTranslationSurface, Polygon,
    SlitKind, SlitSpec, SlitSurface, SurfacePoint, build_half_translation, build_surface,
)

logger = logging.getLogger(__name__)

SlitSegment = Tuple[Vec2, Vec2]


def unit_square(pid: int, x: ScalarLike = 0, y: ScalarLike = 0) -> Polygon:
    x, y = to_scalar(x), to_scalar(y)
    return Polygon(pid, (Vec2(x, y), Vec2(x + 1, y), Vec2(x + 1, y + 1), Vec2(x, y + 1)))


def torus_with_slits(slit_segments: Sequence[SlitSegment], marks: Sequence[Vec2] = (),
                     convention: Convention = Convention.MARKED) -> SlitSurface:
    """Unit-square torus with slits given as (start, holonomy) pairs in square coordinates."""
    gluing = Gluing([GluedPair(EdgeRef(0, 0), EdgeRef(0, 2)), GluedPair(EdgeRef(0, 1), EdgeRef(0, 3))])
    slits = [SlitSpec.interior(i, SurfacePoint(0, start), h) for i, (start, h) in enumerate(slit_segments)]
    return build_surface([unit_square(0)], gluing, slits, [SurfacePoint(0, m) for m in marks], convention)


def square_torus(convention: Convention = Convention.MARKED) -> SlitSurface:
    """Square torus with the corner marked and no slits."""
    return torus_with_slits([], [Vec2(0, 0)], convention)


def three_slit_torus(jitter: ScalarLike = 0, convention: Convention = Convention.MARKED) -> SlitSurface:
    """Three slits; ``jitter`` translates the horizontal slit diagonally."""
    j = to_scalar(jitter)
    return torus_with_slits([
        (Vec2.of(0, 0), Vec2(Fraction(4, 9), Fraction(4, 3))),
        (Vec2.of(1, 0), Vec2(Fraction(-4, 9), Fraction(4, 3))),
        (Vec2(Fraction(1, 3) + j, Fraction(4, 9) + j), Vec2(Fraction(1, 3), Fraction(0))),
    ], convention=convention)


def two_edge_slits_torus(convention: Convention = Convention.MARKED) -> SlitSurface:
    """Slits along both glued edge pairs; each slit's endpoints coincide at the corner."""
    return torus_with_slits([(Vec2.of(0, 0), Vec2.of(1, 0)), (Vec2.of(0, 0), Vec2.of(0, 1))],
                            convention=convention)


def diagonal_slits_torus(convention: Convention = Convention.MARKED) -> SlitSurface:
    return torus_with_slits([
        (Vec2.of(0, 0), Vec2(Fraction(1, 3), Fraction(1))),
        (Vec2.of(1, 0), Vec2(Fraction(-1, 3), Fraction(1))),
    ], convention=convention)


def full_edge_slit_torus(convention: Convention = Convention.MARKED) -> SlitSurface:
    return torus_with_slits([(Vec2.of(0, 0), Vec2.of(1, 0))], convention=convention)


def one_slit_torus(convention: Convention = Convention.MARKED) -> SlitSurface:
    return torus_with_slits([(Vec2.of(0, 0), Vec2(Fraction(1, 2), Fraction(0)))], convention=convention)


def boundary_square(convention: Convention = Convention.MARKED) -> SlitSurface:
    """Unit square with left and right glued; bottom and top edges are boundary slits."""
    gluing = Gluing([GluedPair(EdgeRef(0, 1), EdgeRef(0, 3))])
    slits = [SlitSpec.boundary(0, EdgeRef(0, 0)), SlitSpec.boundary(1, EdgeRef(0, 2))]
    return build_surface([unit_square(0)], gluing, slits, convention=convention)


def _staircase_position(k: int) -> Tuple[int, int]:
    if k == 0:
        return 0, 0
    if k % 2:
        return (k + 1) // 2, (k - 1) // 2
    return k // 2, k // 2


def staircase_sn(n: int, convention: Convention = Convention.MARKED) -> SlitSurface:
    """Staircase of n+1 unit squares with slit ``a`` along the bottom edge of the first square.

    Square k sits at (0, 0), ((k+1)/2, (k-1)/2) for odd k and (k/2, k/2) for
    even k. Each row and each column of squares closes up cyclically.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    squares = [unit_square(k, *_staircase_position(k)) for k in range(n + 1)]
    rows: Dict[int, List[int]] = {}
    columns: Dict[int, List[int]] = {}
    for k in range(n + 1):
        x, y = _staircase_position(k)
        rows.setdefault(y, []).append(k)
        columns.setdefault(x, []).append(k)
    pairs = []
    for members in rows.values():
        members.sort(key=lambda k: _staircase_position(k)[0])
        for i, k in enumerate(members):
            pairs.append(GluedPair(EdgeRef(k, 1), EdgeRef(members[(i + 1) % len(members)], 3)))
    for members in columns.values():
        members.sort(key=lambda k: _staircase_position(k)[1])
        for i, k in enumerate(members):
            pairs.append(GluedPair(EdgeRef(k, 2), EdgeRef(members[(i + 1) % len(members)], 0)))
    slit_a = SlitSpec.interior(0, SurfacePoint(0, Vec2.of(0, 0)), Vec2.of(1, 0))
    surface = build_surface(squares, Gluing(pairs), [slit_a], convention=convention)
    logger.debug(f"Built staircase S_{n} with {n + 1} squares")
    return surface


def pillowcase(slits: Sequence[SlitSegment] = (), convention: Convention = Convention.MARKED
               ) -> HalfTranslationSurface:
    """Two unit squares glued along top and bottom by translation and along the sides by flips."""
    gluing = Gluing([
        GluedPair(EdgeRef(0, 0), EdgeRef(1, 2)),
        GluedPair(EdgeRef(0, 2), EdgeRef(1, 0)),
        GluedPair(EdgeRef(0, 1), EdgeRef(1, 1), flip=True),
        GluedPair(EdgeRef(0, 3), EdgeRef(1, 3), flip=True),
    ])
    specs = [SlitSpec.interior(i, SurfacePoint(0, start), h) for i, (start, h) in enumerate(slits)]
    return build_half_translation([unit_square(0), unit_square(1)], gluing, specs, convention=convention)


def pillowcase_slit(convention: Convention = Convention.MARKED) -> HalfTranslationSurface:
    return pillowcase([(Vec2(Fraction(1, 4), Fraction(1, 2)), Vec2(Fraction(1, 2), Fraction(0)))], convention)


# -- covers and doubles -------------------------------------------------------

@dataclass
class DoubleCover:
    """Orientation double cover of a half-translation surface.

    ``surfaces`` holds one translation surface when the cover is connected and
    the two components otherwise.
    """
    surfaces: List[SlitSurface]
    connected: bool
    expected_orders: List[int] = field(default_factory=list)
    observed_orders: List[int] = field(default_factory=list)

    @property
    def surface(self) -> SlitSurface:
        return self.surfaces[0]


def _negated(polygon: Polygon, pid: int) -> Polygon:
    return Polygon(pid, tuple(-v for v in polygon.vertices))


def _id_offset(surface: FlatSurface) -> int:
    return max(surface.polygon_ids) + 1


def _components(polygon_ids: Sequence[int], pairs: Sequence[GluedPair]) -> List[List[int]]:
    neighbours: Dict[int, set] = {pid: set() for pid in polygon_ids}
    for pair in pairs:
        neighbours[pair.first.polygon_id].add(pair.second.polygon_id)
        neighbours[pair.second.polygon_id].add(pair.first.polygon_id)
    seen, components = set(), []
    for pid in polygon_ids:
        if pid in seen:
            continue
        stack, component = [pid], []
        seen.add(pid)
        while stack:
            current = stack.pop()
            component.append(current)
            for other in neighbours[current]:
                if other not in seen:
                    seen.add(other)
                    stack.append(other)
        components.append(sorted(component))
    return components


def double_cover(half: HalfTranslationSurface) -> DoubleCover:
    """Two copies of ``half``, the second rotated by pi; flip gluings cross between copies.

    Marks and slits lift to both copies. A base point of even order k lifts to
    two points of order k/2; a point of odd order k lifts to one branch point
    of order k+1. The computed orders are checked against that rule.
    """
    offset = _id_offset(half)
    polygons = [half.polygons[pid] for pid in half.polygon_ids]
    polygons += [_negated(half.polygons[pid], pid + offset) for pid in half.polygon_ids]

    def lift(edge: EdgeRef, copy: int) -> EdgeRef:
        return EdgeRef(edge.polygon_id + offset * copy, edge.edge_index)

    pairs = []
    for pair in half.gluing.pairs:
        if pair.flip:
            pairs.append(GluedPair(lift(pair.first, 0), lift(pair.second, 1)))
            pairs.append(GluedPair(lift(pair.first, 1), lift(pair.second, 0)))
        else:
            pairs.extend(GluedPair(lift(pair.first, c), lift(pair.second, c)) for c in (0, 1))

    marks: List[SurfacePoint] = []
    for mp in half.marked_points:
        p = mp.location
        marks.append(p)
        marks.append(SurfacePoint(p.polygon_id + offset, -p.position))

    slits: List[Tuple[SlitSpec, int]] = []
    for slit in half.slits:
        slits.append((slit, slit.start.polygon_id))
        lifted = SlitSpec.interior(len(half.slits) + slit.id, SurfacePoint(slit.start.polygon_id + offset,
                                                                          -slit.start.position), -slit.holonomy)
        slits.append((lifted, lifted.start.polygon_id))

    expected = []
    for mp in half.marked_points:
        if mp.order % 2:
            expected.append(mp.order + 1)
        else:
            expected.extend([mp.order // 2, mp.order // 2])

    components = _components([p.id for p in polygons], pairs)
    surfaces = []
    for component in components:
        members = set(component)
        surfaces.append(build_surface(
            [p for p in polygons if p.id in members],
            Gluing([p for p in pairs if p.first.polygon_id in members]),
            [s for s, pid in slits if pid in members],
            [m for m in marks if m.polygon_id in members],
            half.convention))
    observed = sorted(mp.order for s in surfaces for mp in s.marked_points)
    if sorted(expected) != observed:
        raise SurfaceValidationError(
            f"double cover orders {observed} do not match the lifting rule {sorted(expected)}")
    connected = len(surfaces) == 1
    logger.info(f"Double cover: {'connected' if connected else 'two components'}, orders {observed}")
    return DoubleCover(surfaces, connected, sorted(expected), observed)


def double(surface: SlitSurface) -> SlitSurface:
    """Glue ``surface`` to its copy rotated by pi along every boundary edge.

    Boundary slits become interior slits lying on the new glued edges; other
    slits and marks are copied to both halves.
    """
    boundary = surface.boundary_edges()
    if not boundary:
        raise NoBoundary("surface has no boundary slits to double along")
    offset = _id_offset(surface)
    polygons = [surface.polygons[pid] for pid in surface.polygon_ids]
    polygons += [_negated(surface.polygons[pid], pid + offset) for pid in surface.polygon_ids]

    def rotated(edge: EdgeRef) -> EdgeRef:
        return EdgeRef(edge.polygon_id + offset, edge.edge_index)

    pairs = list(surface.gluing.pairs)
    pairs += [GluedPair(rotated(p.first), rotated(p.second)) for p in surface.gluing.pairs]
    pairs += [GluedPair(edge, rotated(edge)) for edge in boundary]

    slits: List[SlitSpec] = []
    next_id = 0
    slit_edges = set()
    for slit in surface.slits:
        if slit.kind is SlitKind.BOUNDARY:
            slit_edges.add(slit.edge)
            start = surface.polygons[slit.edge.polygon_id].vertex(slit.edge.edge_index)
            slits.append(SlitSpec.interior(next_id, SurfacePoint(slit.edge.polygon_id, start),
                                           surface.edge_vector(slit.edge)))
            next_id += 1
        else:
            slits.append(SlitSpec.interior(next_id, slit.start, slit.holonomy))
            slits.append(SlitSpec.interior(next_id + 1, SurfacePoint(slit.start.polygon_id + offset,
                                                                     -slit.start.position), -slit.holonomy))
            next_id += 2
    for edge in boundary:
        if edge not in slit_edges:
            start = surface.polygons[edge.polygon_id].vertex(edge.edge_index)
            slits.append(SlitSpec.interior(next_id, SurfacePoint(edge.polygon_id, start), surface.edge_vector(edge)))
            next_id += 1

    marks = list(surface.user_marks)
    marks += [SurfacePoint(m.polygon_id + offset, -m.position) for m in surface.user_marks]
    doubled = build_surface(polygons, Gluing(pairs), slits, marks, surface.convention)
    logger.info(f"Doubled surface: {len(doubled.polygons)} polygons, {len(doubled.slits)} slits, "
                f"area {doubled.area()}")
    return doubled


# -- continued fractions ------------------------------------------------------

@dataclass(frozen=True)
class ContinuedFractionInput:
    """Prefix a0; a1, a2, ... of a continued fraction and the slit length used with it."""
    a0: int
    quotients: Tuple[int, ...]
    slit_length: Scalar = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, 'quotients', tuple(self.quotients))
        object.__setattr__(self, 'slit_length', to_scalar(self.slit_length))
        if any(a < 1 for a in self.quotients):
            raise ValueError(f"partial quotients after a0 must be at least 1, got {self.quotients}")
        if self.slit_length <= 0:
            raise ValueError(f"slit length must be positive, got {self.slit_length}")

    def convergents(self) -> List[Tuple[int, int]]:
        """(p_n, q_n) for n = 0..len(quotients)."""
        p_prev, q_prev = 1, 0
        p, q = self.a0, 1
        result = [(p, q)]
        for a in self.quotients:
            p, p_prev = a * p + p_prev, p
            q, q_prev = a * q + q_prev, q
            result.append((p, q))
        return result


def golden_tail(length: int, slit_length: ScalarLike = 1) -> ContinuedFractionInput:
    """[0; 1, 1, 1, ...] truncated to ``length`` quotients."""
    return ContinuedFractionInput(0, (1,) * length, to_scalar(slit_length))


def parse_continued_fraction(text: str, slit_length: ScalarLike = 1) -> ContinuedFractionInput:
    """Read ``a0;a1,a2,...`` notation."""
    head, _, tail = text.strip().strip('[]').partition(';')
    try:
        a0 = int(head)
        quotients = tuple(int(a) for a in tail.split(',') if a.strip())
    except ValueError:
        raise ValueError(f"expected a continued fraction like 0;1,1,1, got {text!r}")
    return ContinuedFractionInput(a0, quotients, to_scalar(slit_length))


@dataclass(frozen=True)
class DirichletRow:
    n: int
    p: int
    q: int
    alpha_low: Scalar
    alpha_high: Scalar
    value_low: Scalar
    value_high: Scalar
    quadratic_bound: Scalar
    satisfies_dirichlet: Optional[bool]
    satisfies_cylinder_criterion: Optional[bool]
    satisfies_quadratic_bound: Optional[bool]


def _square_interval(lo: Scalar, hi: Scalar) -> Tuple[Scalar, Scalar]:
    if lo <= 0 <= hi:
        return Fraction(0), max(lo * lo, hi * hi)
    return min(lo * lo, hi * hi), max(lo * lo, hi * hi)


def _less_than(lo: Scalar, hi: Scalar, threshold: Scalar) -> Optional[bool]:
    if hi < threshold:
        return True
    if lo >= threshold:
        return False
    return None


def dirichlet_cylinder_check(cf: ContinuedFractionInput, n_max: int) -> List[DirichletRow]:
    """Certified bounds on L^2 sin^2(theta_n)(p_n^2 + q_n^2) for the convergents n = 1..n_max.

    Any alpha with the given prefix lies between the last convergent p_N/q_N
    and the mediant (p_N + p_{N-1}) / (q_N + q_{N-1}), so the prefix must
    reach convergent ``n_max``.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be positive, got {n_max}")
    if len(cf.quotients) < n_max:
        raise RationalInput(f"continued fraction has {len(cf.quotients)} quotients after a0, "
                            f"need {n_max} to certify convergent {n_max}")
    convergents = cf.convergents()
    (pa, qa), (pb, qb) = convergents[-2], convergents[-1]
    alpha_low, alpha_high = sorted((Fraction(pb, qb), Fraction(pa + pb, qa + qb)))
    l2 = cf.slit_length * cf.slit_length
    rows = []
    for n in range(1, n_max + 1):
        p, q = convergents[n]
        r = Fraction(p, q)
        n_lo, n_hi = _square_interval(alpha_low - r, alpha_high - r)
        e_ends = sorted((1 + alpha_low * r, 1 + alpha_high * r))
        e_lo, e_hi = _square_interval(e_ends[0], e_ends[1])
        k = l2 * (p * p + q * q)
        value_high = k * n_hi / (n_hi + e_lo)
        value_low = k * n_lo / (n_lo + e_hi)
        bound = 2 * l2 / (q * q)
        gap_lo, gap_hi = sorted((abs(alpha_low - r), abs(alpha_high - r)))
        rows.append(DirichletRow(
            n, p, q, alpha_low, alpha_high, value_low, value_high, bound,
            _less_than(gap_lo, gap_hi, Fraction(1, q * q)),
            _less_than(value_low, value_high, Fraction(1)),
            _less_than(value_low, value_high, bound)))
    return rows


# -- presets ------------------------------------------------------------------

PRESETS: Dict[str, Callable[[Convention], FlatSurface]] = {
    'three-slits': lambda c: three_slit_torus(convention=c),
    'two-edge-slits': two_edge_slits_torus,
    'diagonal-slits': diagonal_slits_torus,
    'full-edge-slit': full_edge_slit_torus,
    'torus-slit': one_slit_torus,
    'square-torus': square_torus,
    'boundary-square': boundary_square,
    'pillowcase': lambda c: pillowcase(convention=c),
    'pillowcase-slit': pillowcase_slit,
}


def preset_names(max_staircase: int = 6) -> List[str]:
    return list(PRESETS) + [f"sn:{n}" for n in range(1, max_staircase + 1)]


def build_preset(name: str, convention: Optional[Convention] = None) -> FlatSurface:
    """Surface for a preset name; ``sn:<n>`` builds the staircase with n+1 squares."""
    convention = convention or Convention.MARKED
    if name.startswith('sn:'):
        try:
            n = int(name[3:])
        except ValueError:
            raise UnknownPreset(f"bad staircase preset {name!r}, expected sn:<n>")
        return staircase_sn(n, convention)
    builder = PRESETS.get(name)
    if builder is None:
        raise UnknownPreset(f"unknown preset {name!r}; known presets: {', '.join(preset_names())}")
    return builder(convention)


DIRICHLET_CSV_FIELDS = ['n', 'p', 'q', 'alpha_low', 'alpha_high', 'value_low', 'value_high', 'quadratic_bound',
                        'satisfies_dirichlet', 'satisfies_cylinder_criterion', 'satisfies_quadratic_bound']


def write_dirichlet_csv(rows: Sequence[DirichletRow], path: Union[str, Path]):
    with open(path, 'w', newline='') as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=DIRICHLET_CSV_FIELDS)
        writer.writeheader()
        for row in rows:
            record = asdict(row)
            writer.writerow({k: format_scalar(v) if isinstance(v, Fraction) else v for k, v in record.items()})
    logger.info(f"Wrote {len(rows)} Dirichlet rows to {path}")
