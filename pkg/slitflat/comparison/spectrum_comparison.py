#!/usr/bin/env python3
"""
Spectrum Comparison Tool

Compares the direction sets of two spectrum CSV files written by
``run_slitflat.py spectrum --csv``, for example the same surface at L and 2L,
or a surface and its double. Directions are matched exactly on (dx, dy);
directions present on one side only are reported with the angular gap to the
nearest direction on the other side (float, for reading only).
"""

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

KEY = ['dx', 'dy']


@dataclass
class SpectrumComparison:
    first_label: str
    second_label: str
    merged: pd.DataFrame

    @property
    def only_first(self) -> pd.DataFrame:
        return self.merged[self.merged['_merge'] == 'left_only']

    @property
    def only_second(self) -> pd.DataFrame:
        return self.merged[self.merged['_merge'] == 'right_only']

    @property
    def common(self) -> pd.DataFrame:
        return self.merged[self.merged['_merge'] == 'both']

    @property
    def identical(self) -> bool:
        return self.only_first.empty and self.only_second.empty

    def summary_lines(self) -> List[str]:
        lines = [
            f"{self.first_label}: {len(self.common) + len(self.only_first)} directions",
            f"{self.second_label}: {len(self.common) + len(self.only_second)} directions",
            f"Common: {len(self.common)}",
            f"Only in {self.first_label}: {len(self.only_first)}",
            f"Only in {self.second_label}: {len(self.only_second)}",
        ]
        if not self.common.empty and 'min_length_sq_first' in self.common:
            changed = self.common[self.common['min_length_sq_first'] != self.common['min_length_sq_second']]
            lines.append(f"Common directions with a different shortest length: {len(changed)}")
        return lines


def load_spectrum_csv(path: str) -> pd.DataFrame:
    frame = pd.read_csv(path, dtype={'min_length_sq': str, 'witness': str, 'source': str})
    missing = [c for c in KEY if c not in frame.columns]
    if missing:
        raise ValueError(f"{path} is not a spectrum CSV (missing {', '.join(missing)})")
    return frame


def nearest_gap(angles: np.ndarray, others: np.ndarray) -> np.ndarray:
    """|sin| of the angle to the nearest line among ``others``, per entry of ``angles``."""
    if len(others) == 0:
        return np.full(len(angles), np.nan)
    gaps = np.abs(np.sin(angles[:, None] - others[None, :]))
    return gaps.min(axis=1)


def compare_spectra(first: pd.DataFrame, second: pd.DataFrame, first_label: str = "first",
                    second_label: str = "second") -> SpectrumComparison:
    columns = KEY + [c for c in ('angle_float', 'min_length_sq', 'level_survived') if c in first.columns]
    merged = pd.merge(first[columns], second[[c for c in columns if c in second.columns]],
                      on=KEY, how='outer', suffixes=('_first', '_second'), indicator=True)
    angles = np.arctan2(merged['dy'].to_numpy(dtype=float), merged['dx'].to_numpy(dtype=float))
    first_angles = np.arctan2(first['dy'].to_numpy(dtype=float), first['dx'].to_numpy(dtype=float))
    second_angles = np.arctan2(second['dy'].to_numpy(dtype=float), second['dx'].to_numpy(dtype=float))
    merged['nearest_gap'] = np.nan
    left = (merged['_merge'] == 'left_only').to_numpy()
    right = (merged['_merge'] == 'right_only').to_numpy()
    merged.loc[left, 'nearest_gap'] = nearest_gap(angles[left], second_angles)
    merged.loc[right, 'nearest_gap'] = nearest_gap(angles[right], first_angles)
    merged = merged.sort_values(by=['_merge', 'dy', 'dx']).reset_index(drop=True)
    return SpectrumComparison(first_label, second_label, merged)


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        description="Compare the direction sets of two spectrum CSV files",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Compare a spectrum at L = 20 with the one at L = 40
  python comparison/spectrum_comparison.py three_slits_L20.csv three_slits_L40.csv

  # Save the merged table
  python comparison/spectrum_comparison.py square.csv doubled.csv --output merged.csv
        """
    )
    parser.add_argument('first', help='First spectrum CSV')
    parser.add_argument('second', help='Second spectrum CSV')
    parser.add_argument('--output', help='Write the merged comparison table to this CSV')
    args = parser.parse_args(argv)

    try:
        comparison = compare_spectra(load_spectrum_csv(args.first), load_spectrum_csv(args.second),
                                     Path(args.first).stem, Path(args.second).stem)
    except (OSError, ValueError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1

    print("\nSpectrum Comparison")
    print("=" * 50)
    for line in comparison.summary_lines():
        print(line)
    for label, frame in ((comparison.first_label, comparison.only_first),
                         (comparison.second_label, comparison.only_second)):
        if not frame.empty:
            print(f"\nOnly in {label}:")
            print(frame[KEY + ['nearest_gap']].to_string(index=False))

    if args.output:
        comparison.merged.drop(columns=['_merge']).assign(side=comparison.merged['_merge'].astype(str)) \
            .to_csv(args.output, index=False)
        print(f"\nComparison saved to {args.output}")
    return 0 if comparison.identical else 1


if __name__ == "__main__":
    sys.exit(main())
