import os
import sys

import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from core.construct import (  # noqa: E402
    full_edge_slit_torus, one_slit_torus, pillowcase, square_torus, staircase_sn,
)
from core.kernel import Convention  # noqa: E402


@pytest.fixture
def torus():
    """Unit square torus with its corner marked."""
    return square_torus(Convention.UNMARKED)


@pytest.fixture
def slit_torus():
    """Unit square torus with the slit from (0, 0) to (1/2, 0), endpoints marked."""
    return one_slit_torus()


@pytest.fixture
def slit_torus_unmarked():
    return one_slit_torus(Convention.UNMARKED)


@pytest.fixture
def edge_slit_torus():
    """Slit along the whole bottom edge; both endpoints are the corner."""
    return full_edge_slit_torus()


@pytest.fixture
def s2():
    return staircase_sn(2)


@pytest.fixture
def pillow():
    return pillowcase()
