from typing import List, Optional, Sequence

from rich.console import Console
from rich.table import Table
from rich.panel import Panel
from rich.text import Text
from rich import box

from .visualization_base import LevelStyle

# max rows shown per table before eliding
ROW_LIMIT = 40


def _table() -> Table:
    return Table(
        box=box.MINIMAL,
        show_header=True,
        header_style="bold",
        show_edge=False,
        expand=False,
    )


def create_level_table(report) -> Table:
    """Sizes of every derivation level and a few of its members."""
    table = _table()
    table.add_column("Level")
    table.add_column("Size", justify="right")
    table.add_column("Directions")
    for k, level in enumerate(report.levels):
        shown = ", ".join(str(d) for d in level[:8]) + (" ..." if len(level) > 8 else "")
        table.add_row(Text(str(k), style=LevelStyle.for_level(k).color), str(len(level)), shown)
    return table


def create_spectrum_table(spectrum, report=None) -> Table:
    table = _table()
    table.add_column("Direction")
    table.add_column("Angle", justify="right")
    table.add_column("Min length^2", justify="right")
    table.add_column("Count", justify="right")
    table.add_column("Source")
    table.add_column("Level", justify="right")
    table.add_column("Witness")
    entries = sorted(spectrum.entries, key=lambda e: (e.min_length_sq, e.direction))
    for e in entries[:ROW_LIMIT]:
        level = report.level_survived(e.direction) if report is not None else 0
        witness = report.witnesses.get(e.direction) if report is not None else None
        table.add_row(
            str(e.direction),
            f"{e.direction.angle():.6f}",
            str(e.min_length_sq),
            str(e.multiplicity),
            e.source.value,
            Text(str(level), style=LevelStyle.for_level(max(level, 0)).color),
            witness.label() if witness is not None else "",
        )
    if len(entries) > ROW_LIMIT:
        table.add_row(f"... {len(entries) - ROW_LIMIT} more", "", "", "", "", "", "")
    return table


def create_plateau_table(calibration) -> Table:
    """Depth at each epsilon of the calibration grid; the plateau rows are bold."""
    table = _table()
    table.add_column("Epsilon", justify="right")
    table.add_column("Depth", justify="right")
    table.add_column("")
    for eps, depth in calibration.points:
        on_plateau = calibration.plateau_low <= eps <= calibration.plateau_high
        marker = "chosen" if eps == calibration.chosen_epsilon else ("plateau" if on_plateau else "")
        style = "bold" if on_plateau else "dim"
        table.add_row(Text(str(eps), style=style), Text(str(depth), style=style), marker)
    return table


def create_cylinder_table(cylinders: Sequence) -> Table:
    table = _table()
    table.add_column("Direction")
    table.add_column("Circumference", justify="right")
    table.add_column("Area", justify="right")
    table.add_column("Modulus^2", justify="right")
    table.add_column("Slits inside")
    for c in cylinders[:ROW_LIMIT]:
        slits = ", ".join(str(i) for i in sorted(c.contains_slit_ids)) or "-"
        table.add_row(str(c.direction), f"{c.circumference:.6f}", str(c.area), str(c.modulus_sq),
                      Text(slits, style="red" if c.contains_slit_ids else "green"))
    if len(cylinders) > ROW_LIMIT:
        table.add_row(f"... {len(cylinders) - ROW_LIMIT} more", "", "", "", "")
    return table


def create_check_table(results: Sequence) -> Table:
    table = _table()
    table.add_column("Check")
    table.add_column("Result")
    table.add_column("Detail")
    for r in results:
        table.add_row(r.name, Text("PASS", style="bright_green bold") if r.passed else Text("FAIL", style="red bold"),
                      r.detail)
    return table


def print_spectrum_summary(spectrum, report=None, calibration=None, console: Optional[Console] = None):
    """Print the spectrum, its derivation levels and the calibration plateau."""
    console = console or Console()
    title = f"Direction spectrum of {spectrum.surface_id} (L = {spectrum.max_length})"
    console.print(Panel(create_spectrum_table(spectrum, report), title=title))
    if calibration is not None:
        console.print(Panel(create_plateau_table(calibration), title="Epsilon calibration",
                            subtitle=f"[dim]chosen eps = {calibration.chosen_epsilon}"))
    if report is not None:
        console.print(Panel(create_level_table(report), title=f"Derived levels at eps = {report.epsilon}",
                            subtitle=f"[dim]depth estimate {report.depth} (lower bound)"))


def print_cylinder_summary(report, console: Optional[Console] = None):
    console = console or Console()
    subtitle = f"[dim]status: {report.status.value}"
    if report.reason:
        subtitle += f" ({report.reason})"
    console.print(Panel(create_cylinder_table(report.cylinders),
                        title=f"Cylinders in direction {report.direction}", subtitle=subtitle))


def print_check_summary(results: List, console: Optional[Console] = None):
    console = console or Console()
    passed = sum(1 for r in results if r.passed)
    console.print(Panel(create_check_table(results), title="Verification",
                        subtitle=f"[dim]{passed}/{len(results)} passed"))
