import csv
from pathlib import Path

import pytest

from core.config import RunConfig, SearchSettings, default_threads, parse_optional_scalar
from core.kernel import SlitSurface
from core.surface_format import load_surface
from run_slitflat import main


@pytest.fixture(autouse=True)
def no_thread_override(monkeypatch):
    monkeypatch.delenv("SLITFLAT_THREADS", raising=False)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_non_positive_length_bound_is_an_error(capsys):
    code, _, err = run(capsys, 'scan', '--preset', 'square-torus', '--lmax', '0')
    assert code == 1
    assert err.startswith("Error: lmax must be positive")


@pytest.mark.parametrize("argv", [
    ['scan'],
    ['scan', '--preset', 'no-such-surface'],
    ['scan', 'missing.slitsurf'],
    ['export-preset'],
    ['decompose', '--preset', 'sn:2'],
    ['double-cover', '--preset', 'square-torus'],
    ['double', '--preset', 'square-torus'],
])
def test_bad_input_prints_an_error(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert err.startswith("Error: ")


def test_scan_output_does_not_depend_on_threads(capsys):
    _, single, _ = run(capsys, 'scan', '--preset', 'torus-slit', '--lmax', '3', '--threads', '1')
    _, pooled, _ = run(capsys, 'scan', '--preset', 'torus-slit', '--lmax', '3', '--threads', '4')
    assert single == pooled
    assert "Saddle connections up to L = 3:" in single


def test_scan_certificate_and_csv(capsys, tmp_path):
    path = tmp_path / "connections.csv"
    code, out, _ = run(capsys, 'scan', '--preset', 'square-torus', '--lmax', '2', '--certificate', '--csv', str(path))
    assert code == 0
    assert "Complete: True" in out
    with open(path, newline='') as f:
        assert len(list(csv.DictReader(f))) == 4


def test_decompose_staircase(capsys):
    code, out, _ = run(capsys, 'decompose', '--preset', 'sn:2', '--direction', '1,0')
    assert code == 0
    assert "Cylinders: 2, total area 3" in out


def test_decompose_caps_the_circumference(capsys):
    code, out, _ = run(capsys, 'decompose', '--preset', 'sn:2', '--direction', '1,0', '--max-circumference', '3/2')
    assert code == 0
    assert "Cylinders up to circumference 3/2: 1 of 2, total area 1" in out
    code, out, _ = run(capsys, 'decompose', '--preset', 'torus-slit', '--max-circumference', '1')
    assert code == 0
    assert "Slit-free cylinders up to circumference 1: 2" in out
    code, out, _ = run(capsys, 'decompose', '--preset', 'torus-slit', '--max-circumference', '1/2')
    assert "Slit-free cylinders up to circumference 1/2: 0" in out


def test_decompose_reports_an_undetermined_budget(capsys):
    code, out, _ = run(capsys, 'decompose', '--preset', 'torus-slit', '--direction', '1,1', '--budget', '1/10')
    assert code == 1
    assert "Undetermined at budget 1/10" in out
    code, out, _ = run(capsys, 'decompose', '--preset', 'torus-slit', '--direction', '1,1', '--budget', '1/10',
                       '--escalate')
    assert code == 0


def test_spectrum_with_fixed_epsilon(capsys, tmp_path):
    csv_path, svg_path = tmp_path / "spectrum.csv", tmp_path / "rose.svg"
    code, out, _ = run(capsys, 'spectrum', '--preset', 'square-torus', '--lmax', '3', '--eps', '1/100',
                       '--no-witnesses', '--closedness', '--csv', str(csv_path), '--svg', str(svg_path))
    assert code == 0
    assert "Depth estimate (lower bound): 1 at eps = 1/100" in out
    assert "Stratum dimension (upper bound on the rank): 2" in out
    assert "Closedness at L = 3 vs 2L: PASS" in out
    assert svg_path.read_text().startswith("<svg")
    with open(csv_path, newline='') as f:
        assert len(list(csv.DictReader(f))) > 0


def test_trace(capsys):
    code, out, _ = run(capsys, 'trace', '--preset', 'square-torus', '--start', '1/2,1/2', '--direction', '1,0')
    assert code == 0
    assert "Terminal: Closed" in out
    assert "length^2 1" in out


def test_trace_rejects_a_malformed_vector(capsys):
    with pytest.raises(SystemExit):
        main(['trace', '--preset', 'square-torus', '--start', '1/2', '--direction', '1,0'])


def test_verify_prints_check_lines(capsys):
    code, out, _ = run(capsys, 'verify', '--suite', 'dirichlet', '--quick')
    assert code == 0
    assert "CHECK dirichlet.n1 PASS" in out
    assert "CHECK dirichlet.monotone PASS" in out


def test_dirichlet_table_and_csv(capsys, tmp_path):
    path = tmp_path / "dirichlet.csv"
    code, out, _ = run(capsys, 'dirichlet', '--quotients', '0;1,1,1,1,1,1', '--n-max', '3', '--csv', str(path))
    assert code == 0
    assert "2/3" in out
    with open(path, newline='') as f:
        assert [row['n'] for row in csv.DictReader(f)] == ['1', '2', '3']
    code, _, err = run(capsys, 'dirichlet', '--quotients', '0;1,1', '--n-max', '3')
    assert code == 1
    assert "need 3" in err


def test_export_preset_to_stdout_and_file(capsys, tmp_path):
    code, out, _ = run(capsys, 'export-preset', '--preset', 'torus-slit')
    assert code == 0
    assert out.startswith("slitsurf 1")
    path = tmp_path / "torus.slitsurf"
    code, _, _ = run(capsys, 'export-preset', '--preset', 'torus-slit', '--out', str(path))
    assert code == 0
    assert isinstance(load_surface(path), SlitSurface)
    code, out, _ = run(capsys, 'scan', str(path), '--lmax', '1')
    assert code == 0
    assert "Saddle connections up to L = 1: 3" in out


def test_double_and_cover_outputs(capsys, tmp_path):
    doubled = tmp_path / "doubled.slitsurf"
    code, out, _ = run(capsys, 'double', '--preset', 'boundary-square', '--out', str(doubled))
    assert code == 0
    assert "Doubled surface: 2 polygons, area 2" in out
    assert load_surface(doubled).area() == 2
    code, out, _ = run(capsys, 'double-cover', '--preset', 'pillowcase')
    assert code == 0
    assert "Cover: connected, orders [0, 0, 0, 0]" in out


def test_config_out_records_the_command_line(capsys, tmp_path):
    path = tmp_path / "run.txt"
    code, _, _ = run(capsys, 'scan', '--preset', 'square-torus', '--lmax', '2', '--threads', '2',
                     '--config-out', str(path))
    assert code == 0
    text = path.read_text()
    assert text.startswith("Slit Surface Run Configuration")
    assert "Input: square-torus" in text
    assert "python run_slitflat.py scan --preset square-torus --lmax 2 --threads 2" in text


def test_default_threads_reads_the_environment(monkeypatch):
    assert default_threads() == 1
    monkeypatch.setenv("SLITFLAT_THREADS", "3")
    assert default_threads() == 3
    for bad in ("0", "many"):
        monkeypatch.setenv("SLITFLAT_THREADS", bad)
        with pytest.raises(ValueError):
            default_threads()


def test_search_settings_validation():
    assert SearchSettings.from_dict({'calibration_steps': '2', 'colour': 'blue'}).calibration_steps == 2
    with pytest.raises(ValueError):
        SearchSettings(calibration_steps=0)
    with pytest.raises(ValueError):
        SearchSettings(budget_factor=64, cap_factor=8)


def test_run_config_needs_exactly_one_input():
    assert RunConfig('verify').preset is None
    assert RunConfig('scan', preset='sn:2').input_label == 'sn:2'
    with pytest.raises(ValueError):
        RunConfig('scan')
    with pytest.raises(ValueError):
        RunConfig('scan', preset='sn:2', surface_path=Path('a.slitsurf'))
    with pytest.raises(ValueError):
        RunConfig('scan', preset='sn:2', epsilon=parse_optional_scalar('-1/2'))
    assert parse_optional_scalar('auto') is None
