import csv

import pytest

from comparison.spectrum_comparison import compare_spectra, load_spectrum_csv, main as compare_main
from core.construct import preset_names
from core.spectrum import theta_set, write_spectrum_csv
from core.surface_format import load_surface
from helper_scripts.calibration_runner import CalibrationRun, CalibrationRunner
from tools.generate_preset_files import generate_preset_files


def test_generate_preset_files(tmp_path):
    written = generate_preset_files(tmp_path / "presets", max_staircase=2)
    assert len(written) == len(preset_names(2))
    staircase = tmp_path / "presets" / "sn_2.slitsurf"
    assert staircase in written
    assert load_surface(staircase).area() == 3


def test_calibration_runner(tmp_path):
    config = tmp_path / "calibration.yaml"
    config.write_text("settings:\n  calibration_steps: 2\nruns:\n  - preset: square-torus\n    lmax: 2\n    eps: 1/100\n")
    output = tmp_path / "report.csv"
    rows = CalibrationRunner(str(config), threads=1).run(str(output))
    assert [row['label'] for row in rows] == ['square-torus']
    assert rows[0]['directions'] == 4
    assert rows[0]['depths'] == '1 1'
    with open(output, newline='') as f:
        assert [row['plateau_depth'] for row in csv.DictReader(f)] == ['1']


def test_calibration_run_needs_one_input():
    with pytest.raises(ValueError):
        CalibrationRun.from_dict({'label': 'nothing'})
    with pytest.raises(ValueError):
        CalibrationRun.from_dict({'preset': 'sn:2', 'lmax': 0})
    assert CalibrationRun.from_dict({'surface': 'shapes/fig.slitsurf'}).label == 'fig'


def test_comparison_reports_new_directions(tmp_path, torus):
    short, long = tmp_path / "short.csv", tmp_path / "long.csv"
    write_spectrum_csv(theta_set(torus, 2), None, short)
    write_spectrum_csv(theta_set(torus, 3), None, long)
    comparison = compare_spectra(load_spectrum_csv(str(short)), load_spectrum_csv(str(long)))
    assert not comparison.identical
    assert len(comparison.common) == 4
    assert comparison.only_first.empty
    assert sorted(zip(comparison.only_second['dx'], comparison.only_second['dy'])) == \
        [(-2, 1), (-1, 2), (1, 2), (2, 1)]
    assert (comparison.only_second['nearest_gap'] > 0).all()
    assert compare_main([str(short), str(long)]) == 1
    assert compare_main([str(short), str(short)]) == 0


def test_comparison_rejects_other_csv_files(tmp_path, capsys):
    other = tmp_path / "other.csv"
    other.write_text("a,b\n1,2\n")
    assert compare_main([str(other), str(other)]) == 1
    assert "not a spectrum CSV" in capsys.readouterr().err
