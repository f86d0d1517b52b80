"""Covariance structure and exact simulation of the mixed noise B + B^H.

The driving process is the sum of a standard Brownian motion and an
independent fractional Brownian motion with Hurst parameter h.  On a uniform
grid its increments form a stationary Gaussian vector whose covariance matrix
is Toeplitz: dt * I from the Brownian part plus the fractional Gaussian noise
autocovariance.  Paths are drawn exactly through the Cholesky factor.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cholesky, toeplitz
from scipy.signal import lfilter

from .exceptions import NumericalError
from .grid import TimeGrid
from .validation import check_1d_array, check_hurst


def fbm_covariance(s, t, h: float):
    """Covariance of fractional Brownian motion, (|t|^2H + |s|^2H - |t-s|^2H)/2.

    Accepts scalars or arrays; h = 1/2 reduces to min(s, t).  Negative time
    arguments are rejected.
    """
    h = check_hurst(h)
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise ValueError("time arguments must be nonnegative")
    out = 0.5 * (s ** (2 * h) + t ** (2 * h) - np.abs(t - s) ** (2 * h))
    return float(out) if out.ndim == 0 else out


def fgn_autocovariance(grid: TimeGrid, h: float) -> np.ndarray:
    """Autocovariance gamma(0..n-1) of fBm increments on a uniform grid.

    Uses integer lags, gamma(k) = dt^2H * ((k+1)^2H + |k-1|^2H - 2 k^2H) / 2,
    which is exact and free of the cancellation the pointwise covariance
    formula suffers at large t.
    """
    h = check_hurst(h)
    k = np.arange(grid.n, dtype=float)
    two_h = 2.0 * h
    return 0.5 * grid.dt ** two_h * (
        (k + 1.0) ** two_h + np.abs(k - 1.0) ** two_h - 2.0 * k ** two_h
    )


@dataclass(frozen=True)
class IncrementCovariance:
    """Covariance matrix of mixed-noise increments with its Cholesky factor."""

    grid: TimeGrid
    h: float
    matrix: np.ndarray          # C = dt*I + fGn covariance, n x n
    cholesky: np.ndarray        # lower triangular L with C = L L^T

    @property
    def fbm_part(self) -> np.ndarray:
        """Covariance of the fractional increments alone (C minus dt*I)."""
        k = self.matrix.copy()
        k[np.diag_indices(self.grid.n)] -= self.grid.dt
        return k


def increment_covariance(grid: TimeGrid, h: float) -> IncrementCovariance:
    """Build the increment covariance for (grid, h) and factor it.

    The Brownian component contributes dt*I, so the matrix is positive
    definite by construction; a Cholesky failure indicates a conditioning bug
    and aborts.
    """
    c = toeplitz(fgn_autocovariance(grid, h))
    c[np.diag_indices(grid.n)] += grid.dt
    try:
        lower = cholesky(c, lower=True)
    except LinAlgError as exc:  # pragma: no cover - impossible for valid input
        raise NumericalError(
            f"increment covariance failed to factor for h={h}, n={grid.n}"
        ) from exc
    return IncrementCovariance(grid=grid, h=h, matrix=c, cholesky=lower)


def path_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by (seed, replication index).

    Philox streams for distinct indices are independent and order-free, so
    replications can run in any order or in parallel and still reproduce.
    """
    return np.random.Generator(np.random.Philox(seed=[int(seed), int(index)]))


def simulate_noise(cov: IncrementCovariance, rng) -> np.ndarray:
    """Draw one mixed-noise path V on the grid points (V_0 = 0), exact in law.

    ``rng`` is a numpy Generator or an integer seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = path_rng(int(rng))
    dv = cov.cholesky @ rng.standard_normal(cov.grid.n)
    v = np.empty(cov.grid.n + 1)
    v[0] = 0.0
    np.cumsum(dv, out=v[1:])
    return v


def simulate_ou(v: np.ndarray, theta: float, grid: TimeGrid, x0: float = 0.0) -> np.ndarray:
    """Euler path of dX = theta * X dt + dV on the simulation grid.

    X_{k+1} = X_k + theta * X_k * dt + dV_{k+1}; theta = 0 returns x0 + V
    exactly.  A warning is emitted when |theta| * dt >= 0.1, where the Euler
    bias becomes material.
    """
    v = check_1d_array(v, "v")
    if v.size != grid.n + 1:
        raise ValueError(f"noise path has {v.size} points, grid expects {grid.n + 1}")
    dt = grid.dt
    if abs(theta) * dt >= 0.1:
        warnings.warn(
            f"|theta|*dt = {abs(theta) * dt:.3f} >= 0.1: Euler discretization bias "
            "is significant; increase n",
            stacklevel=2,
        )
    phi = 1.0 + theta * dt
    x = np.empty(grid.n + 1)
    x[0] = x0
    x[1:], _ = lfilter([1.0], [1.0, -phi], np.diff(v), zi=np.array([phi * x0]))
    return x


@dataclass(frozen=True)
class PathSample:
    """One seeded replication of the noise V and the observed path X."""

    grid: TimeGrid
    h: float
    theta: float
    x0: float
    seed: int
    v: np.ndarray
    x: np.ndarray


def simulate_path(
    cov: IncrementCovariance,
    theta: float,
    seed: int,
    index: int = 0,
    x0: float = 0.0,
    model: str = "ou",
) -> PathSample:
    """Simulate one replication; ``model`` is "ou" or "trend" (X = theta*t + V)."""
    v = simulate_noise(cov, path_rng(seed, index))
    if model == "ou":
        x = simulate_ou(v, theta, cov.grid, x0=x0)
    elif model == "trend":
        x = x0 + theta * cov.grid.times + v
    else:
        raise ValueError(f"unknown model {model!r}")
    return PathSample(grid=cov.grid, h=cov.h, theta=theta, x0=x0, seed=seed, v=v, x=x)
