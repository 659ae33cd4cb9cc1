import csv
from fractions import Fraction

import pytest

from core.geometry import Vec2
from core.saddle_connections import (
    CSV_FIELDS, DirectionKey, connection_directions, enumerate_saddle_connections, enumerate_with_certificate,
    write_connections_csv,
)
from core.verification import primitive_vectors


def test_unit_bound_on_square_torus(torus):
    connections = enumerate_saddle_connections(torus, 1)
    assert {sc.holonomy for sc in connections} == {Vec2.of(1, 0), Vec2.of(0, 1)}


@pytest.mark.parametrize("length", [2, 3, 5, 8])
def test_square_torus_matches_primitive_vectors(torus, length):
    connections = enumerate_saddle_connections(torus, length)
    holonomies = [sc.holonomy for sc in connections]
    assert len(holonomies) == len(set(holonomies))
    assert set(holonomies) == primitive_vectors(length)


def test_connections_are_sorted_by_length(torus):
    lengths = [sc.length_sq for sc in enumerate_saddle_connections(torus, 5)]
    assert lengths == sorted(lengths)
    assert lengths[0] == 1


def test_slit_blocks_and_endpoints_end_connections(slit_torus):
    found = {(sc.start_id, sc.end_id, sc.holonomy) for sc in enumerate_saddle_connections(slit_torus, 1)}
    assert found == {
        (1, 0, Vec2(Fraction(1, 2), Fraction(0))),
        (0, 0, Vec2.of(0, 1)),
        (1, 1, Vec2.of(0, 1)),
    }


def test_no_marked_points_means_no_connections(slit_torus_unmarked):
    assert enumerate_saddle_connections(slit_torus_unmarked, 5) == []


def test_thread_count_does_not_change_the_result(slit_torus):
    assert enumerate_saddle_connections(slit_torus, 4, threads=1) == \
        enumerate_saddle_connections(slit_torus, 4, threads=4)


def test_certificate_covers_every_direction(torus):
    result = enumerate_with_certificate(torus, 3)
    certificate = result.certificate
    assert not certificate.full_circle
    assert certificate.covers_full_circle
    assert certificate.complete
    assert certificate.coverage == {0: (1, 1)}
    assert any(line.startswith("Complete: True") for line in certificate.summary_lines())


def test_depth_cap_makes_the_certificate_incomplete(torus):
    certificate = enumerate_with_certificate(torus, 10, max_depth=1).certificate
    assert certificate.counters.leaves_depth_capped > 0
    assert not certificate.complete


def test_half_translation_search_uses_the_full_circle(pillow):
    result = enumerate_with_certificate(pillow, 1)
    assert result.certificate.full_circle
    assert result.certificate.covers_full_circle
    assert {sc.direction for sc in result.connections} == {DirectionKey(1, 0), DirectionKey(0, 1)}
    assert all(sc.length_sq == 1 for sc in result.connections)


def test_bound_must_be_positive(torus):
    with pytest.raises(ValueError):
        enumerate_saddle_connections(torus, 0)


def test_direction_groups_follow_angle_order(torus):
    groups = connection_directions(enumerate_saddle_connections(torus, 2))
    assert list(groups) == [DirectionKey(1, 0), DirectionKey(1, 1), DirectionKey(0, 1), DirectionKey(-1, 1)]


def test_direction_key_is_taken_modulo_pi():
    assert DirectionKey.of(Vec2.of(-2, -4)) == DirectionKey(1, 2)
    assert DirectionKey.of(Vec2.of(-3, 0)) == DirectionKey(1, 0)


def test_connections_csv(tmp_path, torus):
    path = tmp_path / "connections.csv"
    connections = enumerate_saddle_connections(torus, 2)
    write_connections_csv(connections, path)
    with open(path, newline='') as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == CSV_FIELDS
    assert len(rows) == len(connections)
    assert rows[0]['length_sq_num'] == '1'


def test_parallel_staircase_connections_are_kept_apart(s2):
    connections = enumerate_saddle_connections(s2, 1)
    by_direction = connection_directions(connections)
    # the third horizontal edge lies along the slit
    assert len(by_direction[DirectionKey(1, 0)]) == 2
    assert len(by_direction[DirectionKey(0, 1)]) == 3
    assert all(sc.length_sq == 1 for sc in connections)


def test_diagonal_multiplicity_on_the_staircase(s2):
    diagonals = [sc for sc in enumerate_saddle_connections(s2, 2) if sc.direction == DirectionKey(1, 1)]
    assert len(diagonals) == 3
    assert len({tuple(sorted(sc.germs)) for sc in diagonals}) == 3
