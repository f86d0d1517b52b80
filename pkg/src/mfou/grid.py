"""Uniform time grids, the discretization backbone for paths and kernels."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition of [0, horizon] into n steps (n + 1 grid points)."""

    horizon: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"step count must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def dt(self) -> float:
        return self.horizon / self.n

    @cached_property
    def times(self) -> np.ndarray:
        t = np.linspace(0.0, self.horizon, self.n + 1)
        t.flags.writeable = False
        return t

    @classmethod
    def from_times(cls, t) -> "TimeGrid":
        """Build a grid from an explicit uniform time array (validated)."""
        from .validation import check_uniform_times

        t = check_uniform_times(t)
        return cls(horizon=float(t[-1]), n=t.size - 1)
