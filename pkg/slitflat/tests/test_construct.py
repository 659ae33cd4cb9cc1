import csv
from fractions import Fraction

import pytest

from core.construct import (
    DIRICHLET_CSV_FIELDS, ContinuedFractionInput, boundary_square, build_preset, dirichlet_cylinder_check, double,
    double_cover, three_slit_torus, golden_tail, parse_continued_fraction, preset_names, staircase_sn, write_dirichlet_csv,
)
from core.errors import NoBoundary, RationalInput, UnknownPreset
from core.geometry import Vec2
from core.kernel import Convention, HalfTranslationSurface, SlitSurface, stratum


@pytest.mark.parametrize("name", preset_names(3))
def test_every_preset_builds(name):
    surface = build_preset(name)
    assert surface.area() > 0
    assert surface.convention is Convention.MARKED


def test_preset_convention_is_passed_through():
    assert build_preset('torus-slit', Convention.UNMARKED).marked_points == []
    assert isinstance(build_preset('pillowcase'), HalfTranslationSurface)
    assert build_preset('sn:3').area() == 4


@pytest.mark.parametrize("name", ["hexagon", "sn:", "sn:two", ""])
def test_unknown_presets(name):
    with pytest.raises(UnknownPreset):
        build_preset(name)


def test_staircase_needs_a_square_past_the_first():
    with pytest.raises(ValueError):
        staircase_sn(0)


def test_jitter_moves_only_the_horizontal_slit():
    plain, moved = three_slit_torus(), three_slit_torus(Fraction(1, 100))
    assert plain.slits[0] == moved.slits[0]
    assert moved.slits[2].start.position == plain.slits[2].start.position + Vec2(Fraction(1, 100), Fraction(1, 100))


def test_double_glues_along_the_boundary():
    doubled = double(boundary_square())
    assert isinstance(doubled, SlitSurface)
    assert doubled.area() == 2
    assert len(doubled.polygons) == 2
    assert not doubled.has_boundary
    assert len(doubled.slits) == 2
    assert stratum(doubled).genus == 1


def test_double_needs_a_boundary(slit_torus):
    with pytest.raises(NoBoundary):
        double(slit_torus)


def test_pillowcase_cover_is_a_torus(pillow):
    cover = double_cover(pillow)
    assert cover.connected
    assert len(cover.surfaces) == 1
    assert cover.surface.area() == 4
    assert cover.observed_orders == cover.expected_orders == [0, 0, 0, 0]
    assert stratum(cover.surface).genus == 1


def test_golden_convergents():
    assert golden_tail(5).convergents() == [(0, 1), (1, 1), (1, 2), (2, 3), (3, 5), (5, 8)]


def test_parse_continued_fraction():
    cf = parse_continued_fraction("[2; 1, 3, 5]", "1/2")
    assert (cf.a0, cf.quotients, cf.slit_length) == (2, (1, 3, 5), Fraction(1, 2))
    assert parse_continued_fraction("0;").quotients == ()
    with pytest.raises(ValueError):
        parse_continued_fraction("x;1,1")


@pytest.mark.parametrize("quotients,slit_length", [((1, 0, 2), 1), ((1, 1), 0), ((1, 1), Fraction(-1, 2))])
def test_continued_fraction_input_is_validated(quotients, slit_length):
    with pytest.raises(ValueError):
        ContinuedFractionInput(0, quotients, slit_length)


def test_golden_ratio_rows():
    rows = dirichlet_cylinder_check(golden_tail(16), 10)
    assert [row.n for row in rows] == list(range(1, 11))
    assert all(row.satisfies_dirichlet for row in rows)
    assert all(row.satisfies_cylinder_criterion for row in rows)
    assert all(row.value_low <= row.value_high for row in rows)
    highs = [row.value_high for row in rows]
    assert highs == sorted(highs, reverse=True)
    assert abs(float(rows[0].value_high) - 0.1056) < 1e-3
    assert abs(float(rows[1].value_high) - 0.0403) < 1e-3
    assert rows[1].quadratic_bound == Fraction(1, 2)


def test_short_slit_scales_the_values():
    full = dirichlet_cylinder_check(golden_tail(8), 5)
    short = dirichlet_cylinder_check(golden_tail(8, Fraction(1, 2)), 5)
    assert [s.value_high * 4 for s in short] == [f.value_high for f in full]


def test_dirichlet_certifies_up_to_the_last_given_convergent():
    rows = dirichlet_cylinder_check(golden_tail(10), 10)
    assert [row.n for row in rows] == list(range(1, 11))
    assert all(row.satisfies_dirichlet and row.satisfies_cylinder_criterion and row.satisfies_quadratic_bound
               for row in rows)
    golden = (5 ** 0.5 - 1) / 2
    assert float(rows[-1].alpha_low) < golden < float(rows[-1].alpha_high)
    with pytest.raises(RationalInput, match="need 10"):
        dirichlet_cylinder_check(golden_tail(9), 10)
    with pytest.raises(ValueError):
        dirichlet_cylinder_check(golden_tail(5), 0)


def test_dirichlet_csv(tmp_path):
    path = tmp_path / "dirichlet.csv"
    write_dirichlet_csv(dirichlet_cylinder_check(golden_tail(8), 3), path)
    with open(path, newline='') as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == DIRICHLET_CSV_FIELDS
    assert [row['p'] + '/' + row['q'] for row in rows] == ['1/1', '1/2', '2/3']
    assert rows[0]['quadratic_bound'] == '2'
    assert {row['satisfies_dirichlet'] for row in rows} == {'True'}
