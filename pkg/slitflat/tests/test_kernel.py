from fractions import Fraction

import pytest

from core.construct import boundary_square, full_edge_slit_torus, one_slit_torus, staircase_sn, torus_with_slits, unit_square
from core.errors import (
    DegenerateSlit, DisconnectedSurface, EdgeVectorMismatch, FlipNotAllowed, InvalidGluing,
    InvalidHalfTranslation, NonConvexPolygon, SingularMatrix, SlitLeavesSurface, SurfaceValidationError,
)
from core.geometry import Vec2, matrix
from core.kernel import (
    Convention, EdgeRef, GluedPair, Gluing, MarkKind, Polygon, SlitSpec, SurfacePoint, apply_linear,
    build_half_translation, build_surface, cb_rank_bounds, singularity_orders, stratum,
)

TORUS_GLUING = [GluedPair(EdgeRef(0, 0), EdgeRef(0, 2)), GluedPair(EdgeRef(0, 1), EdgeRef(0, 3))]


def test_square_torus_has_one_regular_vertex(torus):
    assert len(torus.vertex_classes) == 1
    assert torus.vertex_classes[0].is_regular
    assert torus.euler_characteristic() == 0
    assert torus.area() == 1
    assert torus.diameter_bound() == 2


def test_square_torus_stratum(torus):
    signature = stratum(torus)
    assert signature.orders == (0,)
    assert signature.genus == 1
    assert signature.dimension == 2
    assert signature.label() == "H(0)"


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_staircase_strata(n):
    surface = staircase_sn(n)
    expected = [n] if n % 2 == 0 else [(n - 1) // 2, (n - 1) // 2]
    assert sorted(singularity_orders(surface), reverse=True) == expected
    assert stratum(surface).dimension == n + 2
    assert surface.area() == n + 1


def test_cb_rank_bounds_use_stratum_dimension(s2):
    assert cb_rank_bounds(s2) == (1, 4)


def test_slit_endpoints_are_marked_only_under_marked_convention():
    marked = one_slit_torus(Convention.MARKED)
    unmarked = one_slit_torus(Convention.UNMARKED)
    assert [mp.kind for mp in marked.marked_points] == [MarkKind.SLIT_END, MarkKind.SLIT_END]
    assert [mp.order for mp in marked.marked_points] == [0, 0]
    assert unmarked.marked_points == []


def test_marked_set_order_is_cones_then_marks_then_slit_ends():
    surface = torus_with_slits([(Vec2.of(0, 0), Vec2(Fraction(1, 4), Fraction(0)))],
                               marks=[Vec2(Fraction(1, 2), Fraction(1, 2))])
    assert [mp.kind for mp in surface.marked_points] == [MarkKind.USER, MarkKind.SLIT_END, MarkKind.SLIT_END]


def test_coinciding_slit_endpoints_give_one_marked_point():
    assert len(full_edge_slit_torus().marked_points) == 1


def test_glued_points_share_a_canonical_key(torus, slit_torus):
    assert torus.canonical_key(SurfacePoint(0, Vec2.of(0, 0))) == torus.canonical_key(SurfacePoint(0, Vec2.of(1, 1)))
    bottom = SurfacePoint(0, Vec2(Fraction(1, 2), Fraction(0)))
    top = SurfacePoint(0, Vec2(Fraction(1, 2), Fraction(1)))
    assert torus.canonical_key(bottom) == torus.canonical_key(top)
    assert slit_torus.marked_id_at(bottom) is not None
    assert slit_torus.marked_id_at(bottom) == slit_torus.marked_id_at(top)


def test_slit_on_an_edge_is_recorded_on_both_sides(slit_torus):
    pieces = slit_torus.slit_pieces[0]
    assert {(p.a, p.b) for p in pieces} == {
        (Vec2.of(0, 0), Vec2(Fraction(1, 2), Fraction(0))),
        (Vec2.of(0, 1), Vec2(Fraction(1, 2), Fraction(1))),
    }


def test_clockwise_polygon_is_rejected():
    clockwise = Polygon(0, (Vec2.of(0, 0), Vec2.of(0, 1), Vec2.of(1, 1), Vec2.of(1, 0)))
    with pytest.raises(NonConvexPolygon):
        build_surface([clockwise], Gluing([]))


def test_edges_with_wrong_vectors_cannot_be_glued():
    with pytest.raises(EdgeVectorMismatch):
        build_surface([unit_square(0)], Gluing([GluedPair(EdgeRef(0, 0), EdgeRef(0, 1))]))


def test_translation_surface_rejects_flips():
    with pytest.raises(FlipNotAllowed):
        build_surface([unit_square(0)], Gluing([GluedPair(EdgeRef(0, 1), EdgeRef(0, 3), flip=True)]))


def test_edge_used_twice_is_rejected():
    with pytest.raises(InvalidGluing):
        Gluing([GluedPair(EdgeRef(0, 0), EdgeRef(0, 2)), GluedPair(EdgeRef(0, 0), EdgeRef(0, 2))])


def test_disconnected_polygons_are_rejected():
    pairs = TORUS_GLUING + [GluedPair(EdgeRef(1, 0), EdgeRef(1, 2)), GluedPair(EdgeRef(1, 1), EdgeRef(1, 3))]
    with pytest.raises(DisconnectedSurface):
        build_surface([unit_square(0), unit_square(1, 2, 0)], Gluing(pairs))


def test_zero_holonomy_slit_is_rejected():
    with pytest.raises(DegenerateSlit):
        torus_with_slits([(Vec2(Fraction(1, 2), Fraction(1, 2)), Vec2.of(0, 0))])


def test_slit_through_boundary_is_rejected():
    slit = SlitSpec.interior(0, SurfacePoint(0, Vec2(Fraction(1, 2), Fraction(1, 2))), Vec2.of(0, -1))
    with pytest.raises(SlitLeavesSurface):
        build_surface([unit_square(0)], Gluing([GluedPair(EdgeRef(0, 1), EdgeRef(0, 3))]), [slit])


def test_mark_inside_a_slit_is_rejected():
    with pytest.raises(SlitLeavesSurface):
        torus_with_slits([(Vec2.of(0, 0), Vec2(Fraction(1, 2), Fraction(0)))],
                         marks=[Vec2(Fraction(1, 4), Fraction(0))])


def test_boundary_surface_has_no_orders():
    surface = boundary_square()
    assert surface.has_boundary
    assert surface.boundary_edges() == [EdgeRef(0, 0), EdgeRef(0, 2)]
    with pytest.raises(SurfaceValidationError):
        singularity_orders(surface)


def test_pillowcase_has_four_simple_poles(pillow):
    assert [mp.kind for mp in pillow.marked_points] == [MarkKind.CONE] * 4
    assert [mp.order for mp in pillow.marked_points] == [-1, -1, -1, -1]
    assert pillow.area() == 2


def test_half_translation_surface_must_be_closed():
    with pytest.raises(InvalidHalfTranslation):
        build_half_translation([unit_square(0)], Gluing([GluedPair(EdgeRef(0, 1), EdgeRef(0, 3))]))


def test_half_translation_wraps_gluing_errors():
    with pytest.raises(InvalidHalfTranslation):
        build_half_translation([unit_square(0)], Gluing([GluedPair(EdgeRef(0, 0), EdgeRef(0, 1))]))


def test_shear_keeps_area_and_stratum(torus):
    sheared = apply_linear(torus, matrix(1, 1, 0, 1))
    assert sheared.area() == 1
    assert stratum(sheared) == stratum(torus)


def test_reflection_reverses_polygons_into_valid_surface(slit_torus):
    reflected = apply_linear(slit_torus, matrix(-1, 0, 0, 1))
    assert reflected.area() == 1
    assert reflected.slit_holonomy(0) == Vec2(Fraction(-1, 2), Fraction(0))
    assert len(reflected.marked_points) == 2


def test_stretch_scales_slits(slit_torus):
    stretched = apply_linear(slit_torus, matrix(2, 0, 0, 1))
    assert stretched.area() == 2
    assert stretched.slit_holonomy(0) == Vec2.of(1, 0)


def test_singular_matrix_is_rejected(torus):
    with pytest.raises(SingularMatrix):
        apply_linear(torus, matrix(1, 2, 2, 4))


def test_identical_input_builds_identical_surfaces():
    assert one_slit_torus().structure_key() == one_slit_torus().structure_key()
