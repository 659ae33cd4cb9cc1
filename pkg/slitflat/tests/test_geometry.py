from fractions import Fraction

import pytest

from core.geometry import (
    Vec2, angle_less, ceil_sqrt, determinant, format_scalar, in_sector, inverse, matrix, parse_scalar,
    point_in_open_segment, primitive_direction, ray_segment_hit, sin_sq_between, squared_distance_to_segment,
    upper_half,
)


def test_parse_scalar_reduces_fractions():
    assert parse_scalar("3/6") == Fraction(1, 2)
    assert parse_scalar(" -4 ") == -4


@pytest.mark.parametrize("text", ["", "1/0", "1.5", "a/b"])
def test_parse_scalar_rejects_bad_input(text):
    with pytest.raises(ValueError):
        parse_scalar(text)


def test_format_scalar():
    assert format_scalar(Fraction(3)) == "3"
    assert format_scalar(Fraction(-1, 2)) == "-1/2"


def test_ceil_sqrt():
    assert ceil_sqrt(Fraction(0)) == 0
    assert ceil_sqrt(Fraction(1, 4)) == 1
    assert ceil_sqrt(Fraction(4)) == 2
    assert ceil_sqrt(Fraction(5)) == 3


def test_vec2_refuses_floats():
    with pytest.raises(TypeError):
        Vec2(0.5, 1)


def test_vec2_arithmetic_is_exact():
    u = Vec2(Fraction(1, 3), Fraction(2))
    v = Vec2.of(1, "1/3")
    assert u + v == Vec2(Fraction(4, 3), Fraction(7, 3))
    assert u.cross(v) == Fraction(1, 9) - 2
    assert u.dot(v) == Fraction(1, 3) + Fraction(2, 3)
    assert (-u).scale(3) == Vec2.of(-1, -6)


def test_primitive_direction():
    assert primitive_direction(Vec2(Fraction(2, 3), Fraction(4, 3))) == (1, 2)
    assert primitive_direction(Vec2.of(-2, 0)) == (-1, 0)
    with pytest.raises(ValueError):
        primitive_direction(Vec2.of(0, 0))


def test_sector_is_half_open():
    u, w = Vec2.of(1, 0), Vec2.of(0, 1)
    assert in_sector(u, w, Vec2.of(2, 0))
    assert in_sector(u, w, Vec2.of(1, 1))
    assert not in_sector(u, w, Vec2.of(0, 1))
    assert not in_sector(u, w, Vec2.of(-1, 1))


def test_angle_order_starts_on_positive_x_axis():
    assert upper_half(Vec2.of(1, 0))
    assert not upper_half(Vec2.of(-1, 0))
    assert angle_less(Vec2.of(1, 0), Vec2.of(0, 1))
    assert angle_less(Vec2.of(1, 1), Vec2.of(0, -1))
    assert not angle_less(Vec2.of(0, -1), Vec2.of(-1, 1))


def test_ray_segment_hit():
    hit = ray_segment_hit(Vec2.of(0, 0), Vec2.of(1, 1), Vec2.of(1, 0), Vec2.of(1, 2))
    assert hit == (1, Fraction(1, 2))
    assert ray_segment_hit(Vec2.of(0, 0), Vec2.of(0, 1), Vec2.of(1, 0), Vec2.of(1, 2)) is None


def test_segment_helpers():
    a, b = Vec2.of(-1, 0), Vec2.of(1, 0)
    assert squared_distance_to_segment(Vec2.of(0, 1), a, b) == 1
    assert squared_distance_to_segment(Vec2.of(3, 0), a, b) == 4
    assert point_in_open_segment(Vec2.of(0, 0), a, b)
    assert not point_in_open_segment(a, a, b)


def test_sin_sq_between_lines():
    assert sin_sq_between(Vec2.of(1, 0), Vec2.of(1, 1)) == Fraction(1, 2)
    assert sin_sq_between(Vec2.of(1, 2), Vec2.of(-2, -4)) == 0


def test_inverse_matrix():
    m = matrix(2, 1, 1, 1)
    assert determinant(m) == 1
    assert Vec2.of(3, 5).transform(m).transform(inverse(m)) == Vec2.of(3, 5)
