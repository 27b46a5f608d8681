"""Hoeffding bound and its configuration."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class HoeffdingBoundParams:
    range: float = 1.0
    delta: float = 1e-7
    tie_threshold: float = 0.05
    grace_period: int = 200
    max_depth: int = 5

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError("range must be > 0")
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if self.tie_threshold < 0:
            raise ValueError("tie_threshold must be >= 0")
        if self.grace_period < 1:
            raise ValueError("grace_period must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


def hoeffding_epsilon(p: HoeffdingBoundParams, n: int, range_: float | None = None) -> float:
    """sqrt(R^2 ln(1/delta) / (2n)); ``range_`` overrides ``p.range``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    r = p.range if range_ is None else range_
    return math.sqrt(r * r * math.log(1.0 / p.delta) / (2.0 * n))
