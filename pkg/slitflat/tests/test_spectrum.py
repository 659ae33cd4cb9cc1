import csv
from fractions import Fraction

import pytest

import core.spectrum as spectrum_module
from core.construct import build_preset, diagonal_slits_torus, torus_with_slits
from core.errors import NonMonotoneDepth
from core.geometry import Vec2
from core.saddle_connections import DirectionKey
from core.spectrum import (
    CSV_FIELDS, FALLBACK_EPSILON, DerivedDepthReport, DirectionSpectrum, SpectrumEntry, SpectrumSource,
    WitnessKind, accumulation_witnesses, calibration_sweep, closedness_check, default_epsilon, derived_depth,
    theta_set, within, write_spectrum_csv,
)


def synthetic_spectrum(keys):
    entries = [SpectrumEntry(k, k.vector().norm_sq(), 1, SpectrumSource.SADDLE_CONNECTION) for k in keys]
    return DirectionSpectrum("synthetic", Fraction(100), sorted(entries, key=lambda e: e.direction))


@pytest.fixture
def fan():
    """(k, 1) for k = 10..100 plus the horizontal direction."""
    return synthetic_spectrum([DirectionKey(k, 1) for k in range(10, 101)] + [DirectionKey(1, 0)])


def test_within_is_a_strict_sine_bound():
    assert within(DirectionKey(1, 0), DirectionKey(100, 1), Fraction(1, 10))
    assert not within(DirectionKey(1, 0), DirectionKey(1, 1), Fraction(1, 10))
    assert not within(DirectionKey(1, 0), DirectionKey(0, 1), Fraction(1))


def test_square_torus_spectrum(torus):
    spectrum = theta_set(torus, 2)
    assert spectrum.directions() == [DirectionKey(1, 0), DirectionKey(1, 1), DirectionKey(0, 1), DirectionKey(-1, 1)]
    assert spectrum.entry(DirectionKey(1, 1)).min_length_sq == 2
    assert all(e.source is SpectrumSource.SADDLE_CONNECTION for e in spectrum.entries)
    assert spectrum.entry(DirectionKey(2, 1)) is None


def test_slit_direction_is_added_once(slit_torus, slit_torus_unmarked):
    marked = theta_set(slit_torus, 1)
    assert marked.directions() == [DirectionKey(1, 0), DirectionKey(0, 1)]
    assert marked.entry(DirectionKey(1, 0)).source is SpectrumSource.SADDLE_CONNECTION
    assert marked.entry(DirectionKey(0, 1)).multiplicity == 2
    unmarked = theta_set(slit_torus_unmarked, 5)
    assert len(unmarked) == 1
    only = unmarked.entries[0]
    assert only.direction == DirectionKey(1, 0)
    assert only.source is SpectrumSource.SLIT_CONVENTION
    assert only.min_length_sq == Fraction(1, 4)


def test_theta_needs_positive_bound(torus):
    with pytest.raises(ValueError):
        theta_set(torus, 0)


def test_fan_accumulates_onto_the_horizontal(fan):
    report = derived_depth(fan, Fraction(1, 20))
    assert report.depth == 2
    assert report.levels[1] == [DirectionKey(1, 0)]
    assert report.level_survived(DirectionKey(1, 0)) == 1
    assert report.level_survived(DirectionKey(32, 1)) == 0
    assert report.level_survived(DirectionKey(5, 7)) == -1


def test_long_neighbours_do_not_accumulate_onto_each_other():
    # sine about 1/1000 between (30,1) and (31,1), weighted by |(30,1)|**2 = 901
    spectrum = synthetic_spectrum([DirectionKey(1, 0), DirectionKey(30, 1), DirectionKey(31, 1)])
    report = derived_depth(spectrum, Fraction(1, 20))
    assert report.levels[1] == [DirectionKey(1, 0)]
    assert derived_depth(spectrum, Fraction(1, 40)).depth == 1


def test_horizontal_needs_a_long_enough_fan(fan):
    # (1,0) survives iff some k <= 100 has k**2 + 1 > 1 / epsilon**2
    assert derived_depth(fan, Fraction(1, 100)).depth == 2
    assert derived_depth(fan, Fraction(1, 101)).depth == 1


def test_isolated_directions_have_depth_one(torus):
    report = derived_depth(theta_set(torus, 1), Fraction(1, 100))
    assert report.depth == 1
    assert report.levels[1] == []


def test_empty_spectrum_has_depth_zero():
    assert derived_depth(synthetic_spectrum([]), Fraction(1, 100)).depth == 0


@pytest.mark.parametrize("epsilon", [Fraction(0), Fraction(-1, 2)])
def test_derivation_parameters_are_checked(fan, epsilon):
    with pytest.raises(ValueError):
        derived_depth(fan, epsilon)


@pytest.mark.parametrize("preset,length", [('torus-slit', 6), ('diagonal-slits', 6), ('sn:2', 6)])
def test_levels_grow_with_epsilon(preset, length):
    spectrum = theta_set(build_preset(preset), length)
    grid = [Fraction(1, 2 ** j) for j in range(10, 0, -1)]
    reports = [derived_depth(spectrum, eps) for eps in grid]
    assert [r.depth for r in reports] == sorted(r.depth for r in reports)
    for smaller, larger in zip(reports, reports[1:]):
        for k, level in enumerate(smaller.levels):
            assert set(level) <= set(larger.levels[k])


def test_default_epsilon_from_slit_angles(slit_torus):
    assert default_epsilon(diagonal_slits_torus()) == Fraction(1, 2)
    assert default_epsilon(slit_torus) == FALLBACK_EPSILON
    # smallest sine between the slits is 1/sqrt(101)
    close = torus_with_slits([
        (Vec2(Fraction(1, 8), Fraction(1, 8)), Vec2(Fraction(1, 4), Fraction(0))),
        (Vec2(Fraction(1, 8), Fraction(1, 2)), Vec2(Fraction(1, 2), Fraction(1, 20))),
    ])
    assert default_epsilon(close) == Fraction(1, 16)


def test_calibration_finds_the_plateau(fan):
    report = calibration_sweep(fan, base_epsilon=Fraction(1, 20), steps=4)
    assert [e for e, _ in report.points] == [Fraction(1, 160), Fraction(1, 80), Fraction(1, 40), Fraction(1, 20)]
    assert [d for _, d in report.points] == [1, 2, 2, 2]
    assert report.plateau_depth == 2
    assert (report.plateau_low, report.plateau_high) == (Fraction(1, 80), Fraction(1, 20))
    assert report.chosen_epsilon == Fraction(1, 40)


def scripted_depths(monkeypatch, depths):
    remaining = list(depths)

    def fake(spectrum, epsilon):
        return DerivedDepthReport(epsilon, [], remaining.pop(0))

    monkeypatch.setattr(spectrum_module, 'derived_depth', fake)


def test_calibration_rejects_a_decreasing_sweep(monkeypatch, fan):
    scripted_depths(monkeypatch, [1, 3, 2, 3])
    with pytest.raises(NonMonotoneDepth):
        calibration_sweep(fan, base_epsilon=Fraction(1, 2), steps=4)


def test_calibration_prefers_the_deepest_repeated_run(monkeypatch, fan):
    scripted_depths(monkeypatch, [1, 1, 1, 2, 2, 3])
    report = calibration_sweep(fan, base_epsilon=Fraction(1, 2), steps=6)
    assert report.plateau_depth == 2
    assert (report.plateau_low, report.plateau_high) == (Fraction(1, 8), Fraction(1, 4))
    assert report.chosen_epsilon == Fraction(1, 4)

    scripted_depths(monkeypatch, [1, 2, 3])
    report = calibration_sweep(fan, base_epsilon=Fraction(1, 2), steps=3)
    assert report.plateau_depth == 1
    assert report.chosen_epsilon == Fraction(1, 8)


def test_witnesses_explain_by_slit_or_cylinder(slit_torus):
    keys = [DirectionKey(1, 0), DirectionKey(1, 1), DirectionKey(1, 2)]
    spectrum = synthetic_spectrum(keys)
    report = DerivedDepthReport(Fraction(1, 1000), [keys, keys, []], 2)
    explained = accumulation_witnesses(slit_torus, spectrum, report)
    witnesses = explained.witnesses
    assert witnesses[DirectionKey(1, 0)].kind is WitnessKind.SLIT_DIRECTION
    assert witnesses[DirectionKey(1, 1)].kind is WitnessKind.CYLINDER
    assert witnesses[DirectionKey(1, 1)].label() == "Cylinder(1,1)"
    assert explained.unexplained() == [DirectionKey(1, 2)]
    assert report.witnesses == {}


def test_square_torus_spectrum_is_closed(torus):
    closed = closedness_check(torus, 3, Fraction(1, 100))
    assert closed.passed
    assert closed.missing_from_larger == []


def test_spectrum_csv(tmp_path, fan):
    path = tmp_path / "spectrum.csv"
    report = derived_depth(fan, Fraction(1, 20))
    write_spectrum_csv(fan, report, path)
    with open(path, newline='') as f:
        rows = list(csv.DictReader(f))
    assert list(rows[0]) == CSV_FIELDS
    assert len(rows) == len(fan)
    survivors = [(row['dx'], row['dy']) for row in rows if row['level_survived'] == '1']
    assert survivors == [('1', '0')]
