"""Run configuration shared by the command line and the experiment scripts."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from .exact import Dyadic, parse_rational

FORMATS = ("json", "csv", "text")


def parse_eps(s) -> Dyadic:
    q = parse_rational(s) if isinstance(s, str) else s
    try:
        d = Dyadic.coerce(q)
    except ValueError:
        raise ValueError(f"eps must be dyadic, got {s}") from None
    if not (0 < d.to_fraction() < parse_rational("1/5")):
        raise ValueError(f"eps must satisfy 0 < eps < 1/5, got {s}")
    return d


@dataclass
class RunConfig:
    eps: Dyadic = field(default_factory=lambda: Dyadic(1, -3))
    seed: int = 0
    precision: int = 20
    set_path: Path | None = None
    jet_path: Path | None = None
    fmt: str = "json"

    def __post_init__(self):
        self.eps = parse_eps(self.eps) if not isinstance(self.eps, Dyadic) else parse_eps(self.eps.to_fraction())
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.precision < 0:
            raise ValueError("precision must be nonnegative")
        if self.fmt not in FORMATS:
            raise ValueError(f"format must be one of {', '.join(FORMATS)}")

    def rng(self, stream: str = "") -> random.Random:
        """Independent deterministic generator per named stream."""
        return random.Random(f"{self.seed}:{stream}")
