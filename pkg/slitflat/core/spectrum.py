"""Saddle connection direction sets and their finite-scale derived levels.

Angular closeness is always decided exactly: two directions a, b are within
epsilon when cross(a, b)**2 < epsilon**2 * |a|**2 * |b|**2, i.e. the sine of
the angle between the lines is below epsilon. Floats only narrow down the
candidates of the derivation and fill the CSV ``angle_float`` column.
"""
from bisect import bisect_left, bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from math import asin, pi
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union
import csv
import logging

from .cylinders import decompose_with_escalation
from .errors import NonMonotoneDepth
from .geometry import Scalar, format_scalar
from .kernel import FlatSurface
from .saddle_connections import DirectionKey, SaddleConnection, enumerate_saddle_connections

logger = logging.getLogger(__name__)

FALLBACK_EPSILON = Fraction(1, 2)
CALIBRATION_STEPS = 8
ANGLE_SLACK = 1e-9
WITNESS_NEIGHBOURS = 8
CSV_FIELDS = ['dx', 'dy', 'angle_float', 'min_length_sq', 'multiplicity', 'source', 'level_survived', 'witness']


class SpectrumSource(Enum):
    SADDLE_CONNECTION = "SaddleConnection"
    SLIT_CONVENTION = "SlitConvention"


class WitnessKind(Enum):
    CYLINDER = "Cylinder"
    SLIT_DIRECTION = "SlitDirection"
    UNEXPLAINED = "Unexplained"


@dataclass(frozen=True)
class SpectrumEntry:
    direction: DirectionKey
    min_length_sq: Scalar
    multiplicity: int
    source: SpectrumSource


@dataclass
class DirectionSpectrum:
    surface_id: str
    max_length: Scalar
    entries: List[SpectrumEntry]

    def directions(self) -> List[DirectionKey]:
        return [e.direction for e in self.entries]

    def entry(self, key: DirectionKey) -> Optional[SpectrumEntry]:
        for e in self.entries:
            if e.direction == key:
                return e
        return None

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class Witness:
    kind: WitnessKind
    direction: Optional[DirectionKey] = None
    detail: str = ""

    def label(self) -> str:
        if self.kind is WitnessKind.UNEXPLAINED:
            return self.kind.value
        return f"{self.kind.value}{self.direction}"


@dataclass
class DerivedDepthReport:
    """Levels of the finite-scale derivation; ``depth`` is a lower-bound estimate of the rank."""
    epsilon: Scalar
    levels: List[List[DirectionKey]]
    depth: int
    witnesses: Dict[DirectionKey, Witness] = field(default_factory=dict)

    def level_survived(self, key: DirectionKey) -> int:
        survived = -1
        for k, level in enumerate(self.levels):
            if key in level:
                survived = k
        return survived

    def unexplained(self) -> List[DirectionKey]:
        return [k for k, w in self.witnesses.items() if w.kind is WitnessKind.UNEXPLAINED]


@dataclass
class CalibrationReport:
    points: List[Tuple[Scalar, int]]
    plateau_depth: int
    plateau_low: Scalar
    plateau_high: Scalar

    @property
    def chosen_epsilon(self) -> Scalar:
        """Middle grid point of the plateau, counted from the small end."""
        epsilons = [e for e, _ in self.points if self.plateau_low <= e <= self.plateau_high]
        return epsilons[len(epsilons) // 2]


@dataclass
class ClosednessReport:
    max_length: Scalar
    epsilon: Scalar
    accumulation_directions: List[DirectionKey]
    escaping: List[DirectionKey]
    missing_from_larger: List[DirectionKey]

    @property
    def passed(self) -> bool:
        return not self.escaping and not self.missing_from_larger


def within(a: DirectionKey, b: DirectionKey, epsilon: Scalar) -> bool:
    """|sin(angle between a and b)| < epsilon, exactly."""
    va, vb = a.vector(), b.vector()
    c = va.cross(vb)
    return c * c < epsilon * epsilon * va.norm_sq() * vb.norm_sq()


def theta_set(surface: FlatSurface, max_length: Scalar, threads: int = 1, surface_id: str = "surface",
              connections: Optional[Sequence[SaddleConnection]] = None) -> DirectionSpectrum:
    """Directions of slit-avoiding saddle connections of length at most ``max_length``, plus slit directions."""
    if max_length <= 0:
        raise ValueError(f"max_length must be positive, got {max_length}")
    max_length = Fraction(max_length)
    if connections is None:
        connections = enumerate_saddle_connections(surface, max_length, threads)
    aggregated: Dict[DirectionKey, Tuple[Scalar, int]] = {}
    for sc in connections:
        key = sc.direction
        if key in aggregated:
            best, count = aggregated[key]
            aggregated[key] = (min(best, sc.length_sq), count + 1)
        else:
            aggregated[key] = (sc.length_sq, 1)
    entries = [SpectrumEntry(k, v[0], v[1], SpectrumSource.SADDLE_CONNECTION) for k, v in aggregated.items()]

    slit_directions: Dict[DirectionKey, Tuple[Scalar, int]] = {}
    for slit in surface.slits:
        h = surface.slit_holonomy(slit.id)
        key = DirectionKey.of(h)
        if key in aggregated:
            continue
        best, count = slit_directions.get(key, (h.norm_sq(), 0))
        slit_directions[key] = (min(best, h.norm_sq()), count + 1)
    entries.extend(SpectrumEntry(k, v[0], v[1], SpectrumSource.SLIT_CONVENTION) for k, v in slit_directions.items())
    entries.sort(key=lambda e: e.direction)
    logger.info(f"Spectrum of {surface_id} at L={max_length}: {len(entries)} directions "
                f"({len(slit_directions)} from slits only)")
    return DirectionSpectrum(surface_id, max_length, entries)


def _neighbour_window(angles: List[float], keys: List[DirectionKey], centre: float,
                      width: float) -> List[DirectionKey]:
    """Keys whose line lies within ``width`` radians of ``centre`` on the circle of lines."""
    if width >= pi / 2:
        return keys
    low, high = centre - width, centre + width
    found = keys[bisect_left(angles, max(low, 0.0)):bisect_right(angles, min(high, pi))]
    if low < 0:
        found = found + keys[bisect_left(angles, low + pi):]
    if high > pi:
        found = found + keys[:bisect_right(angles, high - pi)]
    return found


def derived_depth(spectrum: DirectionSpectrum, epsilon: Scalar) -> DerivedDepthReport:
    """Iterate the epsilon-derivation until a level is empty.

    Directions are ranked by (shortest realised length, angle). A direction x
    of level k survives to level k+1 when some later-ranked y of level k has
    sin(x, y) * |x|**2 / unit**2 < epsilon, with ``unit`` the shortest length
    in the spectrum. Levels at a smaller epsilon are contained in the levels
    at a larger one, so the depth never decreases as epsilon grows. The last
    ranked member of a level never survives, so the iteration terminates.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    epsilon = Fraction(epsilon)
    lengths = {e.direction: e.min_length_sq for e in spectrum.entries}
    level = sorted(lengths)
    levels = [level]
    if not lengths:
        return DerivedDepthReport(epsilon, levels, 0)
    unit_sq = min(lengths.values())
    rank = {k: i for i, k in enumerate(sorted(lengths, key=lambda k: (lengths[k], k)))}

    def accumulated(x: DirectionKey, angles: List[float], keys: List[DirectionKey]) -> bool:
        length_sq = lengths[x]
        ratio = float(epsilon * unit_sq / length_sq)
        width = asin(ratio) + ANGLE_SLACK if ratio < 1 else pi / 2
        p = x.vector()
        bound = epsilon * epsilon * p.norm_sq() * unit_sq * unit_sq
        for y in _neighbour_window(angles, keys, x.angle(), width):
            if rank[y] <= rank[x]:
                continue
            q = y.vector()
            c = p.cross(q)
            if c * c * length_sq * length_sq < bound * q.norm_sq():
                return True
        return False

    while level:
        by_angle = sorted(level, key=lambda k: k.angle())
        angles = [k.angle() for k in by_angle]
        level = [x for x in level if accumulated(x, angles, by_angle)]
        levels.append(level)
    depth = len(levels) - 1
    logger.debug(f"Derived depth {depth} at epsilon {epsilon}: level sizes {[len(l) for l in levels]}")
    return DerivedDepthReport(epsilon, levels, depth)


def default_epsilon(surface: FlatSurface) -> Scalar:
    """Largest 2**-j, j >= 1, strictly below the smallest sine gap between slit directions."""
    keys = sorted({DirectionKey.of(surface.slit_holonomy(s.id)) for s in surface.slits})
    if len(keys) < 2:
        return FALLBACK_EPSILON
    smallest = None
    for i, a in enumerate(keys):
        for b in keys[i + 1:]:
            va, vb = a.vector(), b.vector()
            c = va.cross(vb)
            s2 = Fraction(c * c) / (va.norm_sq() * vb.norm_sq())
            if smallest is None or s2 < smallest:
                smallest = s2
    epsilon = FALLBACK_EPSILON
    while epsilon * epsilon >= smallest:
        epsilon /= 2
    return epsilon


def calibration_sweep(spectrum: DirectionSpectrum, surface: Optional[FlatSurface] = None,
                      base_epsilon: Optional[Scalar] = None,
                      steps: int = CALIBRATION_STEPS) -> CalibrationReport:
    """Depth over the grid base_epsilon * 2**-j, j < steps, and its plateau.

    The plateau is the highest-depth run of at least two grid points, or the
    longest run when every depth occurs once.
    """
    if base_epsilon is None:
        base_epsilon = default_epsilon(surface) if surface is not None else FALLBACK_EPSILON
    if steps < 1:
        raise ValueError(f"steps must be positive, got {steps}")
    base_epsilon = Fraction(base_epsilon)
    grid = [base_epsilon / 2 ** j for j in reversed(range(steps))]
    points = [(eps, derived_depth(spectrum, eps).depth) for eps in grid]
    for (low, low_depth), (high, high_depth) in zip(points, points[1:]):
        if high_depth < low_depth:
            raise NonMonotoneDepth(f"depth {low_depth} at epsilon {low} but {high_depth} at {high} "
                                   f"for {spectrum.surface_id}")

    runs: List[Tuple[int, int]] = []
    for j, (_, depth) in enumerate(points):
        if runs and points[runs[-1][0]][1] == depth:
            runs[-1] = (runs[-1][0], j)
        else:
            runs.append((j, j))
    repeated = [r for r in runs if r[1] > r[0]]
    if repeated:
        start, end = max(repeated, key=lambda r: points[r[0]][1])
    else:
        start, end = max(runs, key=lambda r: r[1] - r[0])
    report = CalibrationReport(points, points[start][1], points[start][0], points[end][0])
    logger.info(f"Calibration plateau: depth {report.plateau_depth} for epsilon in "
                f"[{report.plateau_low}, {report.plateau_high}]")
    return report


def _witness_for(surface: FlatSurface, key: DirectionKey, neighbours: List[DirectionKey],
                 slit_keys: List[DirectionKey], epsilon: Scalar, budget: Optional[Scalar]) -> Witness:
    for slit_key in slit_keys:
        if slit_key == key or within(slit_key, key, epsilon):
            return Witness(WitnessKind.SLIT_DIRECTION, slit_key, "slit direction")
    for candidate in [key] + neighbours:
        report = decompose_with_escalation(surface, candidate, budget)
        if not report.is_complete:
            continue
        for cylinder in report.cylinders:
            if cylinder.interior_disjoint_from_slits:
                return Witness(WitnessKind.CYLINDER, candidate,
                               f"cylinder of area {format_scalar(cylinder.area)} disjoint from slits")
    return Witness(WitnessKind.UNEXPLAINED)


def accumulation_witnesses(surface: FlatSurface, spectrum: DirectionSpectrum, report: DerivedDepthReport,
                           budget: Optional[Scalar] = None, threads: int = 1) -> DerivedDepthReport:
    """Explain every level-1 survivor by a slit direction or a slit-free cylinder at or near it."""
    survivors = report.levels[1] if len(report.levels) > 1 else []
    slit_keys = sorted({DirectionKey.of(surface.slit_holonomy(s.id)) for s in surface.slits})
    all_keys = spectrum.directions()

    def explain(key: DirectionKey) -> Witness:
        near = [k for k in all_keys if k != key and within(k, key, report.epsilon)]
        near.sort(key=lambda k: abs(key.vector().cross(k.vector())) / k.vector().norm_sq())
        return _witness_for(surface, key, near[:WITNESS_NEIGHBOURS], slit_keys, report.epsilon, budget)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            found = list(executor.map(explain, survivors))
    else:
        found = [explain(k) for k in survivors]
    witnesses = dict(zip(survivors, found))
    unexplained = sum(1 for w in found if w.kind is WitnessKind.UNEXPLAINED)
    logger.info(f"Witnesses for {len(survivors)} accumulation directions, {unexplained} unexplained")
    return replace(report, witnesses=witnesses)


def closedness_check(surface: FlatSurface, max_length: Scalar, epsilon: Optional[Scalar] = None,
                     threads: int = 1) -> ClosednessReport:
    """Every epsilon-accumulation direction at L must lie within epsilon of the spectrum at 2L."""
    max_length = Fraction(max_length)
    if epsilon is None:
        epsilon = default_epsilon(surface)
    small = theta_set(surface, max_length, threads)
    large = theta_set(surface, 2 * max_length, threads)
    report = derived_depth(small, epsilon)
    accumulating = report.levels[1] if len(report.levels) > 1 else []
    large_keys = large.directions()
    large_set = set(large_keys)
    escaping = [k for k in accumulating if not any(k == m or within(k, m, epsilon) for m in large_keys)]
    missing = [k for k in small.directions() if k not in large_set]
    return ClosednessReport(max_length, Fraction(epsilon), accumulating, escaping, missing)


def write_spectrum_csv(spectrum: DirectionSpectrum, report: Optional[DerivedDepthReport],
                       path: Union[str, Path]):
    with open(path, 'w', newline='') as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for entry in spectrum.entries:
            key = entry.direction
            witness = report.witnesses.get(key) if report is not None else None
            writer.writerow({
                'dx': key.dx,
                'dy': key.dy,
                'angle_float': f"{key.angle():.12f}",
                'min_length_sq': format_scalar(entry.min_length_sq),
                'multiplicity': entry.multiplicity,
                'source': entry.source.value,
                'level_survived': report.level_survived(key) if report is not None else '',
                'witness': witness.label() if witness is not None else '',
            })
    logger.info(f"Wrote {len(spectrum)} spectrum entries to {path}")
