import csv
from fractions import Fraction

import pytest

from core.cylinders import (
    CSV_FIELDS, DecompositionStatus, cylinder_direction_scan, cylinders_disjoint_from_slits, decompose,
    decompose_with_escalation, default_budget, horizontal_shear, write_cylinders_csv,
)
from core.geometry import Vec2
from core.saddle_connections import DirectionKey

HALF = Fraction(1, 2)


def test_square_torus_is_one_horizontal_cylinder(torus):
    report = decompose(torus, Vec2.of(1, 0))
    assert report.status is DecompositionStatus.COMPLETE
    assert len(report.cylinders) == 1
    cylinder = report.cylinders[0]
    assert cylinder.area == 1
    assert cylinder.circumference_holonomy == Vec2.of(1, 0)
    assert cylinder.modulus_sq == 1
    assert cylinder.interior_disjoint_from_slits


@pytest.mark.parametrize("n", [0, 1, 2, 3, -2])
def test_slit_splits_rational_direction_into_two_halves(slit_torus, n):
    direction = Vec2.of(n, 1)
    report = decompose(slit_torus, direction)
    assert report.is_complete
    assert report.total_area() == 1
    assert sorted(c.area for c in report.cylinders) == [HALF, HALF]
    assert all(c.circumference_holonomy == direction for c in report.cylinders)
    assert sorted(len(c.contains_slit_ids) for c in report.cylinders) == [0, 1]


@pytest.mark.parametrize("n", [1, 4, 7])
def test_disjoint_area_is_one_minus_the_slit_cross_product(slit_torus, n):
    direction = Vec2.of(n, 1)
    filtered = cylinders_disjoint_from_slits(slit_torus, direction)
    assert not filtered.undetermined
    assert [c.area for c in filtered.cylinders] == [1 - abs(slit_torus.slit_holonomy(0).cross(direction))]


def test_slit_on_the_boundary_does_not_disqualify(slit_torus, edge_slit_torus):
    for surface in (slit_torus, edge_slit_torus):
        report = decompose(surface, Vec2.of(1, 0))
        assert report.is_complete
        assert [c.area for c in report.cylinders] == [1]
        assert report.cylinders[0].interior_disjoint_from_slits


def test_staircase_rows(s2):
    report = decompose(s2, DirectionKey(1, 0))
    assert report.is_complete
    assert [(c.circumference_sq, c.area) for c in report.cylinders] == [(1, 1), (4, 2)]
    assert all(c.interior_disjoint_from_slits for c in report.cylinders)


def test_cylinder_boundaries_are_parallel_saddle_connections(s2):
    report = decompose(s2, Vec2.of(1, 0))
    for cylinder in report.cylinders:
        for sc in cylinder.boundary_top + cylinder.boundary_bottom:
            assert sc.direction == DirectionKey(1, 0)
        assert sum(sc.holonomy.x for sc in cylinder.boundary_top) == cylinder.circumference_holonomy.x


def test_small_budget_is_undetermined_until_escalated(slit_torus):
    small = Fraction(1, 10)
    report = decompose(slit_torus, Vec2.of(1, 1), small)
    assert report.status is DecompositionStatus.UNDETERMINED
    assert report.unfinished_budget == small
    assert report.reason
    assert cylinders_disjoint_from_slits(slit_torus, Vec2.of(1, 1), small).undetermined
    escalated = decompose_with_escalation(slit_torus, Vec2.of(1, 1), small)
    assert escalated.is_complete
    assert escalated.budget > small
    capped = decompose_with_escalation(slit_torus, Vec2.of(1, 1), small, cap=small)
    assert not capped.is_complete


def test_budget_must_be_positive(torus):
    with pytest.raises(ValueError):
        decompose(torus, Vec2.of(1, 0), 0)


def test_default_budget_scales_with_diameter(torus):
    assert default_budget(torus) == 64 * torus.diameter_bound()
    assert default_budget(torus, 1024) == 2048


def test_horizontal_shear_flattens_the_direction():
    for direction in (Vec2.of(2, 1), Vec2.of(0, 3), Vec2.of(-1, 5)):
        image = direction.transform(horizontal_shear(direction))
        assert image.y == 0
        assert image.x != 0


def test_scan_finds_only_slit_free_cylinders(slit_torus):
    cylinders = cylinder_direction_scan(slit_torus, 3)
    directions = {c.direction for c in cylinders}
    assert {DirectionKey(1, 0), DirectionKey(0, 1), DirectionKey(1, 1), DirectionKey(-1, 1)} <= directions
    assert all(c.interior_disjoint_from_slits for c in cylinders)
    assert all(c.circumference_sq <= 9 for c in cylinders)
    assert all(c.area == HALF for c in cylinders if c.direction.dy == 1)


def test_cylinders_csv(tmp_path, slit_torus):
    path = tmp_path / "cylinders.csv"
    write_cylinders_csv(decompose(slit_torus, Vec2.of(1, 1)).cylinders, path)
    with open(path, newline='') as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == CSV_FIELDS
    assert sorted(row['disjoint_from_slits'] for row in rows) == ['False', 'True']
    assert {row['area_den'] for row in rows} == {'2'}


def test_staircase_rows_have_distinct_areas(s2):
    report = decompose(s2, Vec2.of(1, 0))
    assert sorted(c.area for c in report.cylinders) == [1, 2]
    assert report.total_area() == s2.area()


@pytest.mark.parametrize("surface_name,direction", [
    ('slit_torus', (-17, 4)), ('slit_torus', (17, 4)), ('slit_torus', (-5, 4)), ('slit_torus', (-9, 4)),
    ('slit_torus', (3, 4)), ('s2', (1, 1)), ('s2', (2, 1)), ('s2', (1, 2)), ('s2', (-1, 1)), ('s2', (3, 2)),
])
def test_rational_directions_decompose_completely(request, surface_name, direction):
    surface = request.getfixturevalue(surface_name)
    report = decompose(surface, Vec2.of(*direction))
    assert report.status is DecompositionStatus.COMPLETE
    assert report.total_area() == surface.area()
