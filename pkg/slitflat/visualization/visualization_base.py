"""Base types and utilities for visualization."""
from typing import Protocol, List, Optional
from dataclasses import dataclass
from enum import Enum
import math


class LevelStyle(Enum):
    ISOLATED = "#9AA5B1"
    LEVEL_1 = "#636EFA"
    LEVEL_2 = "#EF553B"
    LEVEL_3 = "#00CC96"
    DEEPER = "#AB63FA"

    @property
    def color(self) -> str:
        return self.value

    @classmethod
    def for_level(cls, level: int) -> 'LevelStyle':
        styles = [cls.ISOLATED, cls.LEVEL_1, cls.LEVEL_2, cls.LEVEL_3]
        return styles[level] if 0 <= level < len(styles) else cls.DEEPER

    @property
    def label(self) -> str:
        return {'ISOLATED': "level 0", 'DEEPER': "level 4+"}.get(self.name, self.name.lower().replace('_', ' '))


class Direction(Protocol):
    dx: int
    dy: int


class Entry(Protocol):
    direction: Direction
    min_length_sq: any  # Fraction
    multiplicity: int


class Spectrum(Protocol):
    surface_id: str
    max_length: any
    entries: List[Entry]


class DepthReport(Protocol):
    epsilon: any
    depth: int

    def level_survived(self, key: Direction) -> int: ...


@dataclass(frozen=True)
class RoseTick:
    """One direction drawn as a ray from the centre of the unit half-disc."""
    dx: int
    dy: int
    angle: float
    radius: float
    min_length: float
    level: int

    @property
    def style(self) -> LevelStyle:
        return LevelStyle.for_level(self.level)

    @property
    def tip(self):
        return self.radius * math.cos(self.angle), self.radius * math.sin(self.angle)


def rose_ticks(spectrum: Spectrum, report: Optional[DepthReport] = None) -> List[RoseTick]:
    """Ticks in angle order; the shortest direction reaches the unit circle."""
    if not spectrum.entries:
        return []
    shortest = min(float(e.min_length_sq) for e in spectrum.entries) ** 0.5
    ticks = []
    for e in spectrum.entries:
        length = float(e.min_length_sq) ** 0.5
        level = report.level_survived(e.direction) if report is not None else 0
        ticks.append(RoseTick(e.direction.dx, e.direction.dy, math.atan2(e.direction.dy, e.direction.dx),
                              shortest / length, length, max(level, 0)))
    ticks.sort(key=lambda t: t.angle)
    return ticks
