"""Latency distributions shared by the vision stub and the simulator."""

from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass(frozen=True)
class TruncatedNormal:
    """Normal(mean, stddev) clamped at zero; seconds."""

    mean: float
    stddev: float

    def __post_init__(self):
        if self.mean < 0 or self.stddev < 0:
            raise ValueError("latency distribution needs non-negative mean and stddev")

    def sample(self, rng: random.Random) -> float:
        return max(0.0, rng.gauss(self.mean, self.stddev))
