from fractions import Fraction

import pytest

from core.construct import one_slit_torus, pillowcase_slit
from core.errors import SlitflatError, SurfaceFormatError
from core.geometry import Vec2
from core.kernel import Convention, HalfTranslationSurface, SlitSurface
from core.surface_format import load_surface, parse_surface_text, serialize_surface, write_surface

SLIT_TORUS_TEXT = """slitsurf 1
# unit square torus with a horizontal slit of length 1/2
convention unmarked
polygon 0
v 0 0
v 1 0
v 1 1
v 0 1
glue 0.0 0.2
glue 0.1 0.3
slit 0 0 0 1/2 0
"""


def test_parse_builds_the_described_surface():
    surface = parse_surface_text(SLIT_TORUS_TEXT).build()
    assert isinstance(surface, SlitSurface)
    assert surface.convention is Convention.UNMARKED
    assert surface.marked_points == []
    assert surface.slit_holonomy(0) == Vec2(Fraction(1, 2), Fraction(0))


def test_load_surface_convention_overrides_the_file(tmp_path):
    path = tmp_path / "slit_torus.slitsurf"
    path.write_text(SLIT_TORUS_TEXT)
    assert len(load_surface(path).marked_points) == 0
    assert len(load_surface(path, Convention.MARKED).marked_points) == 2


def test_flip_pairs_build_a_half_translation_surface(tmp_path):
    path = tmp_path / "pillow.slitsurf"
    write_surface(pillowcase_slit(), path)
    surface = load_surface(path)
    assert isinstance(surface, HalfTranslationSurface)
    assert surface.area() == 2


def test_written_surface_reads_back_unchanged():
    surface = one_slit_torus()
    again = parse_surface_text(serialize_surface(surface)).build()
    assert again.structure_key() == surface.structure_key()


@pytest.mark.parametrize("text,line", [
    ("polygon 0\n", 1),
    ("slitsurf 1\npolygon 0\nv 1/0 0\n", 3),
    ("slitsurf 1\nv 0 0\n", 2),
    ("slitsurf 1\npolygon 0\nv 0 0\nv 1 0\nglue 0.0 0.2\n", 5),
    ("slitsurf 1\nglue 0.0 zero\n", 2),
    ("slitsurf 1\nconvention sometimes\n", 2),
    ("slitsurf 1\n\n\nwobble 1 2\n", 4),
])
def test_parse_errors_report_line_numbers(text, line):
    with pytest.raises(SurfaceFormatError) as excinfo:
        parse_surface_text(text)
    assert excinfo.value.line_number == line


def test_missing_file_is_a_slitflat_error(tmp_path):
    with pytest.raises(SlitflatError):
        load_surface(tmp_path / "absent.slitsurf")
