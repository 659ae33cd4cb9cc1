#!/usr/bin/env python3
"""
Calibration Runner Script

Runs a batch of epsilon calibration sweeps described in a YAML or JSON file:
1. Parses the configuration file (search settings plus a list of runs)
2. For each run builds the preset or loads the slitsurf file
3. Computes the direction spectrum and sweeps epsilon over the dyadic grid
4. Writes one CSV row per run and prints a summary

Run from the slitflat directory:
    python -m helper_scripts.calibration_runner --config-path calibration.yaml
"""

import os
import sys
import json
import yaml
import csv
import argparse
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from core.config import SearchSettings, default_threads, parse_optional_scalar
from core.construct import build_preset
from core.kernel import Convention
from core.spectrum import calibration_sweep, default_epsilon, theta_set
from core.surface_format import load_surface

logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

REPORT_FIELDS = ['label', 'lmax', 'directions', 'base_epsilon', 'plateau_depth', 'plateau_low', 'plateau_high',
                 'chosen_epsilon', 'depths']


@dataclass
class CalibrationRun:
    label: str
    preset: Optional[str]
    surface: Optional[str]
    lmax: Any
    base_epsilon: Any
    convention: Optional[Convention]

    def __post_init__(self):
        if (self.preset is None) == (self.surface is None):
            raise ValueError(f"run {self.label!r} needs exactly one of preset or surface")
        if self.lmax <= 0:
            raise ValueError(f"lmax must be positive, got {self.lmax}")

    @classmethod
    def from_dict(cls, entry: Dict[str, Any]) -> 'CalibrationRun':
        preset, surface = entry.get('preset'), entry.get('surface')
        convention = entry.get('convention')
        return cls(
            label=entry.get('label') or preset or Path(surface).stem,
            preset=preset,
            surface=surface,
            lmax=parse_optional_scalar(str(entry.get('lmax', 10))),
            base_epsilon=parse_optional_scalar(str(entry.get('eps', 'auto'))),
            convention=Convention(convention) if convention else None,
        )


class CalibrationRunner:
    def __init__(self, config_path: str, threads: Optional[int] = None):
        self.config_path = config_path
        self.config: Dict[str, Any] = {}
        self.threads = threads if threads is not None else default_threads()

    def parse_config_file(self):
        """Parse the configuration file and extract settings and runs."""
        logger.info(f"Parsing configuration file: {self.config_path}")

        if not os.path.exists(self.config_path):
            raise FileNotFoundError(f"Configuration file not found: {self.config_path}")

        with open(self.config_path, 'r') as f:
            if self.config_path.endswith('.yaml') or self.config_path.endswith('.yml'):
                self.config = yaml.safe_load(f) or {}
            else:
                self.config = json.load(f)

        logger.info("Configuration loaded successfully")
        return self.config

    @property
    def settings(self) -> SearchSettings:
        return SearchSettings.from_dict(self.config.get('settings', {}))

    @property
    def runs(self) -> List[CalibrationRun]:
        return [CalibrationRun.from_dict(entry) for entry in self.config.get('runs', [])]

    def run_one(self, run: CalibrationRun, settings: SearchSettings) -> Dict[str, Any]:
        logger.info(f"Calibrating {run.label} at L = {run.lmax}")
        if run.preset is not None:
            surface = build_preset(run.preset, run.convention)
        else:
            surface = load_surface(run.surface, run.convention)
        spectrum = theta_set(surface, run.lmax, self.threads, surface_id=run.label)
        base = run.base_epsilon if run.base_epsilon is not None else default_epsilon(surface)
        report = calibration_sweep(spectrum, surface, base, settings.calibration_steps)
        return {
            'label': run.label,
            'lmax': str(run.lmax),
            'directions': len(spectrum),
            'base_epsilon': str(base),
            'plateau_depth': report.plateau_depth,
            'plateau_low': str(report.plateau_low),
            'plateau_high': str(report.plateau_high),
            'chosen_epsilon': str(report.chosen_epsilon),
            'depths': ' '.join(str(depth) for _, depth in report.points),
        }

    def generate_report_csv(self, rows: List[Dict[str, Any]], output_path: str):
        with open(output_path, 'w', newline='') as csvfile:
            writer = csv.DictWriter(csvfile, fieldnames=REPORT_FIELDS)
            writer.writeheader()
            for row in rows:
                writer.writerow(row)
        logger.info(f"Calibration report saved to {output_path}")

    def print_results_summary(self, rows: List[Dict[str, Any]]):
        print("\n" + "=" * 80)
        print("CALIBRATION RUNNER - SUMMARY")
        print("=" * 80)
        for row in rows:
            print(f"{row['label']:<20} L={row['lmax']:<6} directions={row['directions']:<6} "
                  f"depth {row['plateau_depth']} on [{row['plateau_low']}, {row['plateau_high']}]")
        print("=" * 80)

    def run(self, output_path: str) -> List[Dict[str, Any]]:
        self.parse_config_file()
        settings = self.settings
        rows = [self.run_one(run, settings) for run in self.runs]
        if not rows:
            logger.warning("Configuration lists no runs")
        self.generate_report_csv(rows, output_path)
        self.print_results_summary(rows)
        return rows


def create_sample_config(path: str = "calibration_sample.yaml"):
    """Create a sample configuration file for reference."""
    config_content = """settings:
  calibration_steps: 8
runs:
  - preset: three-slits
    lmax: 20
  - preset: diagonal-slits
    lmax: 20
  - preset: torus-slit
    lmax: 12
    eps: 1/2
  - preset: sn:2
    lmax: 14
    convention: marked
"""
    with open(path, "w") as f:
        f.write(config_content)
    print(f"Sample configuration file created: {path}")


def main():
    parser = argparse.ArgumentParser(description='Run a batch of epsilon calibration sweeps')
    parser.add_argument('--config-path', type=str, help='YAML or JSON file listing the runs')
    parser.add_argument('--output', type=str, default='calibration_report.csv', help='CSV report path')
    parser.add_argument('--threads', type=int, default=None, help='Worker threads (default: SLITFLAT_THREADS or 1)')
    parser.add_argument('--create-sample-config', action='store_true', help='Create a sample configuration file')
    args = parser.parse_args()

    if args.create_sample_config:
        create_sample_config()
        return

    if not args.config_path:
        parser.error("--config-path is required unless --create-sample-config is given")

    try:
        CalibrationRunner(args.config_path, args.threads).run(args.output)
    except Exception as e:
        logger.error(f"Error: {e}")
        sys.exit(1)

if __name__ == '__main__':
    main()
