"""Input validation helpers used by the estimator API and the numerical core."""

from __future__ import annotations

import numpy as np


def check_hurst(h: float) -> float:
    """Validate a Hurst parameter, returning it as a float.

    Any value in the open interval (0, 1) is accepted; h = 1/2 selects the
    degenerate mode where both mixture components are standard Brownian.
    """
    h = float(h)
    if not 0.0 < h < 1.0:
        raise ValueError(f"Hurst parameter must lie in (0, 1), got {h}")
    return h


def check_1d_array(x, name: str = "x") -> np.ndarray:
    """Coerce to a finite 1-D float array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_uniform_times(t, rtol: float = 1e-8) -> np.ndarray:
    """Validate a strictly increasing uniform time grid starting at 0."""
    t = check_1d_array(t, "t")
    if t.size < 2:
        raise ValueError("time grid needs at least two points")
    if abs(t[0]) > rtol * t[-1]:
        raise ValueError("time grid must start at 0")
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise ValueError("time grid must be strictly increasing")
    dt = t[-1] / (t.size - 1)
    if np.abs(steps - dt).max() > rtol * dt + 1e-15:
        raise ValueError("time grid must be uniformly spaced")
    return t


def check_same_grid(n_points: int, x: np.ndarray, name: str = "path") -> None:
    if x.shape[0] != n_points:
        raise ValueError(
            f"{name} has {x.shape[0]} points but the kernel grid has {n_points}"
        )
