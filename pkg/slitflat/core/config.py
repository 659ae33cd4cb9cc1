from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional
import os

from dotenv import load_dotenv

from .geometry import Scalar, parse_scalar
from .kernel import Convention

THREADS_ENV = 'SLITFLAT_THREADS'
AUTO = 'auto'


def default_threads() -> int:
    """Thread count from SLITFLAT_THREADS (a .env file is honoured), else 1."""
    load_dotenv()
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        threads = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}")
    if threads <= 0:
        raise ValueError(f"{THREADS_ENV} must be positive, got {threads}")
    return threads


def parse_optional_scalar(text: Optional[str]) -> Optional[Scalar]:
    """``auto`` or nothing gives None, anything else must be a rational."""
    if text is None or text == AUTO:
        return None
    return parse_scalar(text)


@dataclass
class SearchSettings:
    budget_factor: int = 64
    cap_factor: int = 1024
    calibration_steps: int = 8
    max_unfolding_depth: int = 10000

    def __post_init__(self):
        for name in ('budget_factor', 'cap_factor', 'calibration_steps', 'max_unfolding_depth'):
            value = getattr(self, name)
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.cap_factor < self.budget_factor:
            raise ValueError(f"cap_factor must be at least budget_factor, got {self.cap_factor} < {self.budget_factor}")

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> 'SearchSettings':
        known = {k: int(v) for k, v in values.items() if k in cls.__dataclass_fields__}
        return cls(**known)


@dataclass
class RunConfig:
    command: str
    preset: Optional[str] = None
    surface_path: Optional[Path] = None
    convention: Optional[Convention] = None
    max_length: Scalar = Fraction(10)
    epsilon: Optional[Scalar] = None
    budget: Optional[Scalar] = None
    threads: int = 1
    csv_path: Optional[Path] = None
    svg_path: Optional[Path] = None
    html_path: Optional[Path] = None
    config_out: Optional[Path] = None
    settings: SearchSettings = field(default_factory=SearchSettings)
    extra: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in ('verify', 'dirichlet') and (self.preset is None) == (self.surface_path is None):
            raise ValueError("exactly one input is required: --preset <name> or a slitsurf file")
        if self.max_length <= 0:
            raise ValueError(f"lmax must be positive, got {self.max_length}")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError(f"eps must be positive, got {self.epsilon}")
        if self.budget is not None and self.budget <= 0:
            raise ValueError(f"budget must be positive, got {self.budget}")
        if self.threads <= 0:
            raise ValueError(f"threads must be positive, got {self.threads}")

    @property
    def input_label(self) -> str:
        return self.preset if self.preset is not None else str(self.surface_path)

    def summary_items(self) -> List[tuple]:
        return [
            ("Command", self.command),
            ("Input", self.input_label if (self.preset or self.surface_path) else "-"),
            ("Convention", self.convention.value if self.convention else "as built"),
            ("Length bound", str(self.max_length)),
            ("Epsilon", AUTO if self.epsilon is None else str(self.epsilon)),
            ("Budget", AUTO if self.budget is None else str(self.budget)),
            ("Threads", str(self.threads)),
        ]
