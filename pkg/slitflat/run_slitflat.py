from core.config import RunConfig, SearchSettings, default_threads, parse_optional_scalar
from core.construct import (
    build_preset, dirichlet_cylinder_check, double, double_cover, golden_tail, parse_continued_fraction,
    preset_names, write_dirichlet_csv,
)
from core.cylinders import (
    decompose, decompose_with_escalation, cylinder_direction_scan, default_budget, write_cylinders_csv,
)
from core.errors import SlitflatError
from core.geometry import Vec2, format_scalar, parse_scalar
from core.kernel import Convention, FlatSurface, HalfTranslationSurface, SurfacePoint, stratum
from core.saddle_connections import enumerate_with_certificate, write_connections_csv
from core.spectrum import (
    accumulation_witnesses, calibration_sweep, closedness_check, default_epsilon, derived_depth,
    theta_set, write_spectrum_csv,
)
from core.surface_format import load_surface, serialize_surface, write_surface
from core.tracer import trace
from core.verification import SUITES, run_suites
from visualization.rich_visualization import (
    print_check_summary, print_cylinder_summary, print_spectrum_summary,
)
from visualization.svg_rose import write_rose_svg
from rich.console import Console
from rich.table import Table
from rich import box
from dataclasses import replace
from datetime import datetime
from pathlib import Path
import argparse
import logging
import re
import sys

logger = logging.getLogger(__name__)


def save_configuration(args, config: RunConfig, config_file):
    """Save the run configuration to a file."""
    with open(config_file, 'w', encoding='utf-8') as f:
        f.write("Slit Surface Run Configuration\n")
        f.write("=" * 50 + "\n\n")
        f.write(f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}\n\n")

        f.write("Input Configuration:\n")
        f.write("-" * 20 + "\n")
        for label, value in config.summary_items():
            f.write(f"{label}: {value}\n")
        f.write("\n")

        f.write("Search Settings:\n")
        f.write("-" * 16 + "\n")
        for name in config.settings.__dataclass_fields__:
            f.write(f"{name.replace('_', ' ').capitalize()}: {getattr(config.settings, name)}\n")
        f.write("\n")

        outputs = [(label, path) for label, path in (("CSV", config.csv_path), ("SVG", config.svg_path),
                                                     ("HTML", config.html_path)) if path is not None]
        if outputs:
            f.write("Output Configuration:\n")
            f.write("-" * 21 + "\n")
            for label, path in outputs:
                f.write(f"{label}: {path}\n")
            f.write("\n")

        f.write("Equivalent Command Line:\n")
        f.write("-" * 25 + "\n")
        cmd_parts = [f"python run_slitflat.py {config.command}"]
        if config.surface_path is not None:
            cmd_parts[0] += f" {config.surface_path}"
        if config.preset is not None:
            cmd_parts.append(f"--preset {config.preset}")
        if config.convention is not None:
            cmd_parts.append(f"--convention {config.convention.value}")
        if 'lmax' in args and args.lmax is not None:
            cmd_parts.append(f"--lmax {config.max_length}")
        if config.epsilon is not None:
            cmd_parts.append(f"--eps {config.epsilon}")
        if config.budget is not None:
            cmd_parts.append(f"--budget {config.budget}")
        cmd_parts.append(f"--threads {config.threads}")
        for flag, path in (("--csv", config.csv_path), ("--svg", config.svg_path), ("--html", config.html_path)):
            if path is not None:
                cmd_parts.append(f"{flag} {path}")
        for key, value in sorted(config.extra.items()):
            if value is None or value is False:
                continue
            flag = "--" + key.replace('_', '-')
            if isinstance(value, Vec2):
                value = f"{format_scalar(value.x)},{format_scalar(value.y)}"
            if isinstance(value, list):
                cmd_parts.extend(f"{flag} {v}" for v in value)
            else:
                cmd_parts.append(flag if value is True else f"{flag} {value}")

        if len(" ".join(cmd_parts)) > 80:
            f.write(" \\\n    ".join(cmd_parts) + "\n")
        else:
            f.write(" ".join(cmd_parts) + "\n")

    print(f"Configuration saved to {config_file}")


def vector_arg(text: str) -> Vec2:
    parts = [p for p in re.split(r'[,\s]+', text.strip()) if p]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two rationals like 1,2 or 1/2,3, got {text!r}")
    try:
        return Vec2(parse_scalar(parts[0]), parse_scalar(parts[1]))
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(str(e))


def scalar_arg(text: str):
    try:
        return parse_scalar(text)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(str(e))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('surface', nargs='?', default=None, help='slitsurf v1 file to read')
    common.add_argument('--preset', type=str, default=None,
                        help=f"Built-in surface instead of a file ({', '.join(preset_names(2))}, ...)")
    common.add_argument('--convention', choices=[c.value for c in Convention], default=None,
                        help='Whether slit endpoints are marked points (default: as built or as in the file)')
    common.add_argument('--lmax', type=scalar_arg, default=None, help='Length bound (default: 10)')
    common.add_argument('--eps', type=str, default=None, help='Angular scale as a rational, or auto (default: auto)')
    common.add_argument('--budget', type=str, default=None,
                        help='Separatrix length budget for decompositions, or auto (default: auto)')
    common.add_argument('--threads', type=int, default=None,
                        help='Worker threads (default: SLITFLAT_THREADS or 1)')
    common.add_argument('--csv', type=str, default=None, help='Write results as CSV to this path')
    common.add_argument('--svg', type=str, default=None, help='Write the direction rose as SVG to this path')
    common.add_argument('--html', type=str, default=None, help='Write an interactive Plotly rose to this path')
    common.add_argument('--config-out', type=str, default=None, help='Save the run configuration to this path')
    common.add_argument('--verbose', action='store_true', help='Log debug detail')
    common.add_argument('--quiet', action='store_true', help='Log warnings only')

    parser = argparse.ArgumentParser(description='Saddle connections, cylinders and direction spectra of slit translation surfaces')
    sub = parser.add_subparsers(dest='command', required=True)

    scan = sub.add_parser('scan', parents=[common], help='Enumerate saddle connections up to --lmax')
    scan.add_argument('--certificate', action='store_true', help='Print the search completeness certificate')

    dec = sub.add_parser('decompose', parents=[common], help='Cylinder decomposition in one direction')
    dec.add_argument('--direction', type=vector_arg, default=None, help='Direction such as 1,2')
    dec.add_argument('--escalate', action='store_true', help='Double the budget while the result is undetermined')
    dec.add_argument('--max-circumference', type=scalar_arg, default=None,
                     help='Keep only cylinders up to this circumference; without --direction, '
                          'scan all short directions for slit-free cylinders')

    spec = sub.add_parser('spectrum', parents=[common], help='Direction spectrum and its derived depth')
    spec.add_argument('--calibration-steps', type=int, default=None,
                      help='Dyadic epsilon grid points below the default epsilon (default: 8)')
    spec.add_argument('--no-witnesses', action='store_true', help='Skip cylinder witnesses for accumulation points')
    spec.add_argument('--closedness', action='store_true', help='Also compare the spectrum at 2 * lmax')

    tr = sub.add_parser('trace', parents=[common], help='Trace one straight trajectory')
    tr.add_argument('--polygon', type=int, default=0, help='Polygon of the start point (default: 0)')
    tr.add_argument('--start', type=vector_arg, required=True, help='Start point in polygon coordinates')
    tr.add_argument('--direction', type=vector_arg, required=True, help='Direction such as 2,1')
    tr.add_argument('--sector', type=int, default=None, help='Corner index when starting at a cone point')

    dc = sub.add_parser('double-cover', parents=[common], help='Orientation double cover of a half-translation surface')
    dc.add_argument('--out', type=str, default=None, help='Write the cover as slitsurf v1')

    db = sub.add_parser('double', parents=[common], help='Double a surface along its boundary')
    db.add_argument('--out', type=str, default=None, help='Write the doubled surface as slitsurf v1')

    dr = sub.add_parser('dirichlet', parents=[common], help='Certified Dirichlet cylinder bounds')
    dr.add_argument('--quotients', type=str, default=None, help='Continued fraction a0;a1,a2,... (default: golden tail)')
    dr.add_argument('--n-max', type=int, default=10, help='Last convergent to check (default: 10)')
    dr.add_argument('--slit-length', type=scalar_arg, default=None, help='Slit length L (default: 1)')

    ver = sub.add_parser('verify', parents=[common], help='Run built-in acceptance checks')
    ver.add_argument('--suite', action='append', choices=['all'] + list(SUITES), default=None,
                     help='Suite to run, repeatable (default: all)')
    ver.add_argument('--quick', action='store_true', help='Smaller bounds for a fast run')

    ex = sub.add_parser('export-preset', parents=[common], help='Write a preset as slitsurf v1')
    ex.add_argument('--out', type=str, default=None, help='Output path (default: stdout)')
    return parser


def build_config(args) -> RunConfig:
    threads = args.threads if args.threads is not None else default_threads()
    extra = {k: v for k, v in vars(args).items()
             if k in ('certificate', 'escalate', 'max_circumference', 'no_witnesses', 'closedness',
                      'polygon', 'sector', 'out', 'quotients', 'n_max', 'slit_length', 'quick', 'suite')}
    if args.command == 'export-preset' and args.preset is None:
        raise ValueError("export-preset needs --preset <name>")
    return RunConfig(
        command=args.command,
        preset=args.preset,
        surface_path=Path(args.surface) if args.surface else None,
        convention=Convention(args.convention) if args.convention else None,
        max_length=args.lmax if args.lmax is not None else RunConfig.max_length,
        epsilon=parse_optional_scalar(args.eps),
        budget=parse_optional_scalar(args.budget),
        threads=threads,
        csv_path=Path(args.csv) if args.csv else None,
        svg_path=Path(args.svg) if args.svg else None,
        html_path=Path(args.html) if args.html else None,
        config_out=Path(args.config_out) if args.config_out else None,
        settings=(SearchSettings(calibration_steps=args.calibration_steps)
                  if getattr(args, 'calibration_steps', None) else SearchSettings()),
        extra=extra,
    )


def load_input(config: RunConfig) -> FlatSurface:
    if config.preset is not None:
        return build_preset(config.preset, config.convention)
    return load_surface(config.surface_path, config.convention)


def _budgets(config: RunConfig, surface: FlatSurface):
    budget = config.budget if config.budget is not None else default_budget(surface, config.settings.budget_factor)
    cap = max(budget, default_budget(surface, config.settings.cap_factor))
    return budget, cap


def cmd_scan(config: RunConfig, console: Console) -> int:
    surface = load_input(config)
    result = enumerate_with_certificate(surface, config.max_length, config.threads,
                                        max_depth=config.settings.max_unfolding_depth)
    connections = result.connections
    if config.csv_path is not None:
        write_connections_csv(connections, config.csv_path)
    table = Table(box=box.MINIMAL, show_header=True, header_style="bold", show_edge=False)
    for column in ("Start", "End", "Holonomy", "Length^2", "Crossings"):
        table.add_column(column)
    for sc in connections[:20]:
        table.add_row(str(sc.start_id), str(sc.end_id),
                      f"({format_scalar(sc.holonomy.x)}, {format_scalar(sc.holonomy.y)})",
                      format_scalar(sc.length_sq), str(len(sc.crossings)))
    console.print(table)
    if config.extra.get('certificate'):
        for line in result.certificate.summary_lines():
            console.print(line)
    print(f"Saddle connections up to L = {config.max_length}: {len(connections)}")
    return 0


def cmd_decompose(config: RunConfig, console: Console) -> int:
    surface = load_input(config)
    budget, cap = _budgets(config, surface)
    circumference = config.extra.get('max_circumference')
    direction = config.extra.get('direction')
    if direction is None:
        if circumference is None:
            raise ValueError("decompose needs --direction or --max-circumference")
        cylinders = cylinder_direction_scan(surface, circumference, budget, config.threads)
        if config.csv_path is not None:
            write_cylinders_csv(cylinders, config.csv_path)
        print(f"Slit-free cylinders up to circumference {circumference}: {len(cylinders)}")
        return 0
    if config.extra.get('escalate'):
        report = decompose_with_escalation(surface, direction, budget, cap)
    else:
        report = decompose(surface, direction, budget)
    found = len(report.cylinders)
    if circumference is not None:
        if circumference <= 0:
            raise ValueError(f"max_circumference must be positive, got {circumference}")
        bound = circumference * circumference
        report = replace(report, cylinders=[c for c in report.cylinders if c.circumference_sq <= bound])
    print_cylinder_summary(report, console)
    if config.csv_path is not None:
        write_cylinders_csv(report.cylinders, config.csv_path)
    if not report.is_complete:
        print(f"Undetermined at budget {report.budget}: {report.reason}")
        return 1
    if circumference is not None:
        print(f"Cylinders up to circumference {circumference}: {len(report.cylinders)} of {found}, "
              f"total area {report.total_area()}")
    else:
        print(f"Cylinders: {len(report.cylinders)}, total area {report.total_area()}")
    return 0


def cmd_spectrum(config: RunConfig, console: Console) -> int:
    surface = load_input(config)
    settings = config.settings
    label = config.input_label
    connections = enumerate_with_certificate(surface, config.max_length, config.threads,
                                             max_depth=settings.max_unfolding_depth).connections
    spectrum = theta_set(surface, config.max_length, config.threads, surface_id=label, connections=connections)
    calibration = None
    epsilon = config.epsilon
    if epsilon is None:
        calibration = calibration_sweep(spectrum, surface, default_epsilon(surface), settings.calibration_steps)
        epsilon = calibration.chosen_epsilon
    report = derived_depth(spectrum, epsilon)
    if not config.extra.get('no_witnesses'):
        budget, _ = _budgets(config, surface)
        report = accumulation_witnesses(surface, spectrum, report, budget, config.threads)
    print_spectrum_summary(spectrum, report, calibration, console)

    if config.csv_path is not None:
        write_spectrum_csv(spectrum, report, config.csv_path)
    if config.svg_path is not None:
        write_rose_svg(spectrum, report, config.svg_path)
    if config.html_path is not None:
        try:
            from visualization.plotly_visualization import save_rose_visualization
            save_rose_visualization(spectrum, report, str(config.html_path))
        except ImportError:
            print("Warning: Plotly not available. Install with: pip install plotly>=5.18.0")

    if not isinstance(surface, HalfTranslationSurface) and not surface.has_boundary:
        upper = stratum(surface).dimension
        print(f"Stratum dimension (upper bound on the rank): {upper}")
    print(f"Depth estimate (lower bound): {report.depth} at eps = {epsilon}")

    if config.extra.get('closedness'):
        closed = closedness_check(surface, config.max_length, epsilon, threads=config.threads)
        print(f"Closedness at L = {config.max_length} vs 2L: {'PASS' if closed.passed else 'FAIL'} "
              f"(escaping {len(closed.escaping)}, missing {len(closed.missing_from_larger)})")
        return 0 if closed.passed else 1
    return 0


def cmd_trace(config: RunConfig, console: Console) -> int:
    surface = load_input(config)
    start = SurfacePoint(config.extra['polygon'], config.extra['start'])
    result = trace(surface, start, config.extra['direction'], config.max_length, config.extra.get('sector'))
    table = Table(box=box.MINIMAL, show_header=True, header_style="bold", show_edge=False)
    for column in ("Polygon", "Entry", "Exit", "Crossed edge"):
        table.add_column(column)
    for step in result.steps:
        table.add_row(str(step.polygon_id),
                      f"({format_scalar(step.entry.x)}, {format_scalar(step.entry.y)})",
                      f"({format_scalar(step.exit.x)}, {format_scalar(step.exit.y)})",
                      str(step.crossed_edge) if step.crossed_edge is not None else "-")
    console.print(table)
    terminal = result.terminal
    where = ""
    if terminal.point is not None:
        where = (f" at polygon {terminal.point.polygon_id} "
                 f"({format_scalar(terminal.point.position.x)}, {format_scalar(terminal.point.position.y)})")
    print(f"Terminal: {terminal.kind.value}{where}, length^2 {format_scalar(result.length_sq)}")
    return 0


def cmd_double_cover(config: RunConfig, console: Console) -> int:
    surface = load_input(config)
    if not isinstance(surface, HalfTranslationSurface):
        raise ValueError("double-cover needs a half-translation surface (a gluing with flip pairs)")
    cover = double_cover(surface)
    print(f"Cover: {'connected' if cover.connected else 'two components'}, orders {cover.observed_orders}")
    out = config.extra.get('out')
    if out is not None:
        for k, component in enumerate(cover.surfaces):
            path = Path(out) if k == 0 else Path(out).with_name(f"{Path(out).stem}_{k}{Path(out).suffix}")
            write_surface(component, path)
            print(f"Cover written to {path}")
    return 0


def cmd_double(config: RunConfig, console: Console) -> int:
    surface = load_input(config)
    doubled = double(surface)
    print(f"Doubled surface: {len(doubled.polygons)} polygons, area {doubled.area()}, "
          f"stratum {stratum(doubled).label()}")
    out = config.extra.get('out')
    if out is not None:
        write_surface(doubled, out)
        print(f"Doubled surface written to {out}")
    return 0


def cmd_dirichlet(config: RunConfig, console: Console) -> int:
    n_max = config.extra.get('n_max') or 10
    if n_max <= 0:
        raise ValueError(f"n-max must be positive, got {n_max}")
    slit_length = config.extra.get('slit_length') or 1
    text = config.extra.get('quotients')
    cf = parse_continued_fraction(text, slit_length) if text else golden_tail(n_max + 6, slit_length)
    rows = dirichlet_cylinder_check(cf, n_max)
    table = Table(box=box.MINIMAL, show_header=True, header_style="bold", show_edge=False)
    for column in ("n", "p/q", "value <=", "2L^2/q^2", "Dirichlet", "Cylinder", "Bound"):
        table.add_column(column)
    for row in rows:
        table.add_row(str(row.n), f"{row.p}/{row.q}", f"{float(row.value_high):.6e}", f"{float(row.quadratic_bound):.6e}",
                      str(row.satisfies_dirichlet), str(row.satisfies_cylinder_criterion),
                      str(row.satisfies_quadratic_bound))
    console.print(table)
    if config.csv_path is not None:
        write_dirichlet_csv(rows, config.csv_path)
    return 0


def cmd_verify(config: RunConfig, console: Console) -> int:
    results = run_suites(config.extra.get('suite') or ['all'], bool(config.extra.get('quick')), config.threads)
    for r in results:
        print(r.line())
    print_check_summary(results, console)
    return 0 if all(r.passed for r in results) else 1


def cmd_export_preset(config: RunConfig, console: Console) -> int:
    surface = load_input(config)
    out = config.extra.get('out')
    if out is None:
        sys.stdout.write(serialize_surface(surface))
    else:
        write_surface(surface, out)
        print(f"Preset {config.preset} written to {out}")
    return 0


HANDLERS = {
    'scan': cmd_scan,
    'decompose': cmd_decompose,
    'spectrum': cmd_spectrum,
    'trace': cmd_trace,
    'double-cover': cmd_double_cover,
    'double': cmd_double,
    'dirichlet': cmd_dirichlet,
    'verify': cmd_verify,
    'export-preset': cmd_export_preset,
}


def main(argv=None) -> int:
    """Main entry point for the slit surface tools."""
    parser = build_parser()
    args = parser.parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s - %(levelname)s - %(message)s')

    try:
        config = build_config(args)
        if getattr(args, 'direction', None) is not None:
            config.extra['direction'] = args.direction
        if getattr(args, 'start', None) is not None:
            config.extra['start'] = args.start
        if config.config_out is not None:
            save_configuration(args, config, config.config_out)
        return HANDLERS[config.command](config, Console())
    except (SlitflatError, ValueError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
