from pathlib import Path
from typing import List
from core.construct import build_preset, preset_names
from core.kernel import Convention
from core.surface_format import write_surface


def generate_preset_files(base_dir: str, max_staircase: int = 6, convention: Convention = Convention.MARKED) -> List[Path]:
    """Write every built-in surface to ``base_dir`` as slitsurf v1 files.

    Staircase presets ``sn:<n>`` are written as ``sn_<n>.slitsurf``.
    """
    base_dir = Path(base_dir)
    base_dir.mkdir(parents=True, exist_ok=True)

    written = []
    names = preset_names(max_staircase)
    print(f"Generating {len(names)} preset files...")
    for name in names:
        surface = build_preset(name, convention)
        path = base_dir / f"{name.replace(':', '_')}.slitsurf"
        write_surface(surface, path)
        written.append(path)
        print(f"Created {path.name}: {len(surface.polygons)} polygons, {len(surface.slits)} slits, "
              f"{len(surface.marked_points)} marked points")
    return written


def main():
    import argparse
    parser = argparse.ArgumentParser(description='Export built-in surfaces as slitsurf v1 files')
    parser.add_argument('--output-dir', default='presets', help='Directory to create preset files in')
    parser.add_argument('--max-staircase', type=int, default=6, help='Largest n of the sn:<n> staircases')
    parser.add_argument('--convention', choices=[c.value for c in Convention], default='marked',
                        help='Convention written into every file')

    args = parser.parse_args()

    generate_preset_files(args.output_dir, args.max_staircase, Convention(args.convention))
    print("\nPreset file generation complete!")

if __name__ == "__main__":
    main()
