"""Built-in acceptance suites.

Each suite returns CheckResult records; the CLI prints them as
``CHECK <name> PASS|FAIL <detail>`` lines and exits non-zero on any failure.
"""
from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from time import perf_counter
from typing import Callable, Dict, List, Sequence, Set
import logging

from .construct import (
    boundary_square, double, double_cover, dirichlet_cylinder_check, golden_tail, one_slit_torus,
    build_preset, pillowcase_slit, square_torus, staircase_sn,
)
from .cylinders import cylinder_direction_scan, cylinders_disjoint_from_slits
from .geometry import Vec2, sin_sq_between
from .kernel import Convention, FlatSurface, cb_rank_bounds, singularity_orders, stratum
from .saddle_connections import DirectionKey, enumerate_saddle_connections
from .spectrum import accumulation_witnesses, derived_depth, theta_set

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"CHECK {self.name} {'PASS' if self.passed else 'FAIL'} {self.detail}"


def _direction_set(surface: FlatSurface, max_length, threads: int) -> Set[DirectionKey]:
    return set(theta_set(surface, max_length, threads).directions())


def _set_difference_detail(a: Set[DirectionKey], b: Set[DirectionKey]) -> str:
    only_a = sorted(a - b)
    only_b = sorted(b - a)
    return (f"only-first={','.join(map(str, only_a[:5])) or '-'} "
            f"only-second={','.join(map(str, only_b[:5])) or '-'}")


def check_strata(quick: bool, threads: int) -> List[CheckResult]:
    results = []
    for n in range(1, 7):
        surface = staircase_sn(n)
        orders = sorted(singularity_orders(surface), reverse=True)
        expected = [n] if n % 2 == 0 else [(n - 1) // 2, (n - 1) // 2]
        signature = stratum(surface)
        passed = orders == expected and signature.dimension == n + 2 and surface.area() == n + 1
        results.append(CheckResult(f"strata.sn{n}", passed,
                                   f"orders={orders} expected={expected} dim={signature.dimension}"))
    return results


def primitive_vectors(max_length: int) -> Set[Vec2]:
    """Primitive integer vectors of norm at most ``max_length`` in the upper half-plane."""
    found = set()
    for a in range(-max_length, max_length + 1):
        for b in range(0, max_length + 1):
            if (b == 0 and a <= 0) or gcd(a, b) != 1 or a * a + b * b > max_length * max_length:
                continue
            found.add(Vec2.of(a, b))
    return found


def check_torus_oracle(quick: bool, threads: int) -> List[CheckResult]:
    surface = square_torus(Convention.UNMARKED)
    results = []
    for length in range(1, (6 if quick else 20) + 1):
        connections = enumerate_saddle_connections(surface, length, threads)
        found = [sc.holonomy for sc in connections]
        oracle = primitive_vectors(length)
        passed = len(found) == len(set(found)) and set(found) == oracle
        results.append(CheckResult(f"torus-oracle.L{length}", passed, f"found={len(found)} oracle={len(oracle)}"))
    return results


def check_cylinder_rational(quick: bool, threads: int) -> List[CheckResult]:
    surface = one_slit_torus()
    slit = surface.slit_holonomy(0)
    results = []
    for n in range(1, (5 if quick else 20) + 1):
        direction = Vec2.of(n, 1)
        filtered = cylinders_disjoint_from_slits(surface, direction)
        # the slit spans |cross(slit, v)| of the unit area transversally
        oracle_area = 1 - abs(slit.cross(direction))
        areas = [c.area for c in filtered.cylinders]
        passed = not filtered.undetermined and areas == [oracle_area]
        results.append(CheckResult(f"cylinder-rational.n{n}", passed,
                                   f"areas={[str(a) for a in areas]} oracle={oracle_area}"))
    return results


def check_three_slits_finite(quick: bool, threads: int) -> List[CheckResult]:
    length = 25 if quick else 50
    surface = build_preset('three-slits')
    small = _direction_set(surface, length, threads)
    large = _direction_set(surface, 2 * length, threads)
    return [CheckResult("three-slits-finite", small == large,
                        f"L={length} |theta(L)|={len(small)} |theta(2L)|={len(large)} "
                        + _set_difference_detail(small, large))]


def check_accumulation(quick: bool, threads: int) -> List[CheckResult]:
    """Slit-free cylinders on the one-slit torus approach the slit direction as they get longer."""
    surface = one_slit_torus()
    slit = surface.slit_holonomy(0)
    max_circumference = 12 if quick else 30
    cylinders = [c for c in cylinder_direction_scan(surface, max_circumference, threads=threads)
                 if c.direction != DirectionKey.of(slit)]
    cylinders.sort(key=lambda c: (c.circumference_sq, c.direction))
    records = []
    for c in cylinders:
        gap = sin_sq_between(c.direction.vector(), slit)
        if not records or gap < records[-1]:
            records.append(gap)
    if len(records) < 2:
        return [CheckResult("accumulation", False, f"only {len(records)} record cylinders found")]
    # a factor 4 in sine is a factor 16 in squared sine
    passed = records[-1] * 16 <= records[0]
    return [CheckResult("accumulation", passed,
                        f"cylinders={len(cylinders)} records={len(records)} "
                        f"first_sin_sq={records[0]} last_sin_sq={records[-1]}")]


def check_doubling(quick: bool, threads: int) -> List[CheckResult]:
    length = 5 if quick else 10
    surface = boundary_square()
    doubled = double(surface)
    original = _direction_set(surface, length, threads)
    image = _direction_set(doubled, length, threads)
    area_ok = doubled.area() == 2 * surface.area() and len(doubled.polygons) == 2 * len(surface.polygons)
    return [
        CheckResult("doubling.area", area_ok, f"area={doubled.area()} polygons={len(doubled.polygons)}"),
        CheckResult("doubling.theta", original == image,
                    f"L={length} |theta|={len(original)} " + _set_difference_detail(original, image)),
    ]


def check_double_cover(quick: bool, threads: int) -> List[CheckResult]:
    length = 5 if quick else 10
    base = pillowcase_slit()
    cover = double_cover(base)
    base_directions = _direction_set(base, length, threads)
    cover_directions: Set[DirectionKey] = set()
    for component in cover.surfaces:
        cover_directions |= _direction_set(component, length, threads)
    return [
        CheckResult("double-cover.orders", cover.expected_orders == cover.observed_orders,
                    f"orders={cover.observed_orders} connected={cover.connected}"),
        CheckResult("double-cover.theta", base_directions == cover_directions,
                    f"L={length} |theta|={len(base_directions)} "
                    + _set_difference_detail(base_directions, cover_directions)),
    ]


def check_dirichlet(quick: bool, threads: int) -> List[CheckResult]:
    n_max = 10
    rows = dirichlet_cylinder_check(golden_tail(n_max + 6), n_max)
    results = []
    for row in rows:
        passed = row.satisfies_dirichlet is True and row.satisfies_quadratic_bound is True
        results.append(CheckResult(f"dirichlet.n{row.n}", passed,
                                   f"p/q={row.p}/{row.q} value<={float(row.value_high):.3e} "
                                   f"bound={float(row.quadratic_bound):.3e}"))
    decreasing = all(b.value_high < a.value_high and b.quadratic_bound < a.quadratic_bound
                     for a, b in zip(rows, rows[1:]))
    results.append(CheckResult("dirichlet.monotone", decreasing, f"rows={len(rows)}"))
    return results


@dataclass(frozen=True)
class DepthCase:
    """Committed (L, epsilon) golden for one preset."""
    preset: str
    epsilon: Fraction
    quick_length: int
    length: int
    relation: str
    expected: int
    explain: bool = False

    def holds(self, depth: int) -> bool:
        return depth == self.expected if self.relation == '==' else depth >= self.expected


DEPTH_CASES = [
    DepthCase('three-slits', Fraction(1, 1024), 20, 40, '==', 1),
    DepthCase('diagonal-slits', Fraction(1, 2), 12, 40, '==', 2),
    DepthCase('torus-slit', Fraction(1, 2), 12, 40, '>=', 3),
    DepthCase('sn:2', Fraction(1, 2), 14, 20, '>=', 4, explain=True),
]


def depth_report(case: DepthCase, length: int, threads: int = 1):
    surface = build_preset(case.preset)
    spectrum = theta_set(surface, length, threads, surface_id=case.preset)
    return surface, spectrum, derived_depth(spectrum, case.epsilon)


def check_depth(quick: bool, threads: int) -> List[CheckResult]:
    results = []
    for case in DEPTH_CASES:
        length = case.quick_length if quick else case.length
        surface, spectrum, report = depth_report(case, length, threads)
        upper = cb_rank_bounds(surface)[1]
        detail = f"L={length} eps={case.epsilon} depth={report.depth} expected{case.relation}{case.expected}"
        passed = case.holds(report.depth)
        if case.explain:
            report = accumulation_witnesses(surface, spectrum, report, threads=threads)
            unexplained = report.unexplained()
            passed = passed and not unexplained
            detail += f" unexplained={len(unexplained)}"
        results.append(CheckResult(f"depth.{case.preset}", passed, detail))
        results.append(CheckResult(f"depth-bound.{case.preset}", report.depth <= upper,
                                   f"depth={report.depth} dimension={upper}"))
    return results


SUITES: Dict[str, Callable[[bool, int], List[CheckResult]]] = {
    'strata': check_strata,
    'torus-oracle': check_torus_oracle,
    'cylinder-rational': check_cylinder_rational,
    'three-slits-finite': check_three_slits_finite,
    'accumulation': check_accumulation,
    'doubling': check_doubling,
    'double-cover': check_double_cover,
    'dirichlet': check_dirichlet,
    'depth': check_depth,
}


def run_suites(names: Sequence[str], quick: bool = False, threads: int = 1) -> List[CheckResult]:
    if 'all' in names:
        names = list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s) {', '.join(unknown)}; choose from all, {', '.join(SUITES)}")
    results = []
    for name in names:
        started = perf_counter()
        suite_results = SUITES[name](quick, threads)
        logger.info(f"Suite {name}: {sum(r.passed for r in suite_results)}/{len(suite_results)} passed "
                    f"in {perf_counter() - started:.1f}s")
        results.extend(suite_results)
    return results
