"""Maximum-likelihood drift estimation from one observed path.

Pipeline for the canonical estimator: whiten the path increments with the
noise Cholesky factor, accumulate the martingale transform Z, form the drift
regressor Q from Z and the reciprocal bracket slope, then take the ratio of
the two likelihood integrals.  All stochastic integrals are left-point
Riemann-Stieltjes sums, which keeps the discrete approximation a martingale
transform.

An exact discrete-likelihood oracle (generalized least squares under the
Euler transition model) provides an independent estimate for cross-checks,
and the trend estimator handles the simpler regression model X = theta*t + V.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from sklearn.base import BaseEstimator

from .cov import IncrementCovariance, increment_covariance
from .exceptions import DegenerateSampleError
from .grid import TimeGrid
from .kernel import CanonicalKernel, projection_kernel
from .validation import check_1d_array, check_hurst, check_same_grid, check_uniform_times


@dataclass(frozen=True)
class EstimateRecord:
    """One drift estimate with the statistics used to produce it."""

    theta_hat: float
    q_energy: float | None      # (1/T) sum Q_{k-1}^2 d<M>_k, canonical route only
    method: str                 # "canonical" | "oracle" | "regression"
    h: float
    horizon: float
    n: int
    seed: int | None = None
    variance_theory: float | None = None  # 1/<M>_T for the regression estimator


def martingale_transform(ck: CanonicalKernel, x) -> np.ndarray:
    """Z_{t_k} = sum_{j<=k} g(s_j, t_k) dX_j, computed by whitening.

    With u = L^{-1} dX the nested triangular solves collapse to a running sum
    Z_k = sum_{j<=k} y_j u_j, identical to the double sum with the full
    weight array but O(n^2).
    """
    x = check_1d_array(x, "x")
    check_same_grid(ck.grid.n + 1, x)
    u = solve_triangular(ck.cov.cholesky, np.diff(x), lower=True, check_finite=False)
    z = np.empty(ck.grid.n + 1)
    z[0] = 0.0
    np.cumsum(ck.innovation_weights * u, out=z[1:])
    return z


def drift_regressor(ck: CanonicalKernel, z: np.ndarray) -> np.ndarray:
    """Q_{t_k} = (psi_k Z_k + sum_{j<=k} psi_{j-1} dZ_j) / 2 with psi = 1/slope."""
    psi = ck.inv_bracket_slope
    dz = np.diff(z)
    q = 0.5 * psi * z
    q[1:] += 0.5 * np.cumsum(psi[:-1] * dz)
    return q


def drift_mle(ck: CanonicalKernel, x, seed: int | None = None) -> EstimateRecord:
    """Canonical MLE: theta_hat = sum Q dZ / sum Q^2 d<M> (left-point sums).

    The denominator uses exact bracket increments.  A path with no variation
    makes the denominator vanish and raises DegenerateSampleError.
    """
    z = martingale_transform(ck, x)
    q = drift_regressor(ck, z)
    num = float(np.dot(q[:-1], np.diff(z)))
    den = float(np.dot(q[:-1] ** 2, np.diff(ck.bracket)))
    if den <= 0.0:
        raise DegenerateSampleError("degenerate sample: the drift regressor has zero energy")
    return EstimateRecord(
        theta_hat=num / den,
        q_energy=den / ck.grid.horizon,
        method="canonical",
        h=ck.h,
        horizon=ck.grid.horizon,
        n=ck.grid.n,
        seed=seed,
    )


def oracle_mle(cov: IncrementCovariance, x, seed: int | None = None) -> EstimateRecord:
    """Exact Gaussian MLE for the Euler transition model, via GLS whitening.

    Under dX_k = theta * X_{k-1} dt + dV_k with dV ~ N(0, C), the estimate is
    a^T C^{-1} dX / a^T C^{-1} a with a_k = X_{t_{k-1}} dt.  Independent of
    the canonical kernel machinery; their agreement is the central
    cross-method consistency check.
    """
    x = check_1d_array(x, "x")
    check_same_grid(cov.grid.n + 1, x)
    a = x[:-1] * cov.grid.dt
    za = solve_triangular(cov.cholesky, a, lower=True, check_finite=False)
    zx = solve_triangular(cov.cholesky, np.diff(x), lower=True, check_finite=False)
    den = float(np.dot(za, za))
    if den <= 0.0:
        raise DegenerateSampleError("degenerate sample: constant path")
    return EstimateRecord(
        theta_hat=float(np.dot(za, zx)) / den,
        q_energy=None,
        method="oracle",
        h=cov.h,
        horizon=cov.grid.horizon,
        n=cov.grid.n,
        seed=seed,
    )


def regression_mle(ck: CanonicalKernel, x, seed: int | None = None) -> EstimateRecord:
    """MLE of the trend slope in X = theta*t + V: theta_hat = Z_T / <M>_T.

    The estimation error is exactly Gaussian with variance 1/<M>_T, reported
    as ``variance_theory``.
    """
    z = martingale_transform(ck, x)
    m_total = ck.bracket[-1]
    if m_total <= 0.0:
        raise DegenerateSampleError("bracket vanishes at the horizon")
    return EstimateRecord(
        theta_hat=float(z[-1]) / m_total,
        q_energy=None,
        method="regression",
        h=ck.h,
        horizon=ck.grid.horizon,
        n=ck.grid.n,
        seed=seed,
        variance_theory=1.0 / m_total,
    )


def log_likelihood(ck: CanonicalKernel, x, theta: float) -> float:
    """Log of the Girsanov density at ``theta`` relative to the driftless law."""
    z = martingale_transform(ck, x)
    q = drift_regressor(ck, z)
    num = float(np.dot(q[:-1], np.diff(z)))
    den = float(np.dot(q[:-1] ** 2, np.diff(ck.bracket)))
    return theta * num - 0.5 * theta * theta * den


class _KernelCacheMixin:
    """Reuse the expensive kernel across fits on identical grids."""

    _cache_key: tuple | None = None
    _cached_kernel: CanonicalKernel | None = None

    def _kernel_for(self, grid: TimeGrid, h: float) -> CanonicalKernel:
        key = (grid.horizon, grid.n, h)
        if self._cache_key != key:
            self._cached_kernel = projection_kernel(increment_covariance(grid, h))
            self._cache_key = key
        return self._cached_kernel


class DriftMLE(BaseEstimator, _KernelCacheMixin):
    """Drift estimator for an OU path driven by mixed fractional noise.

    Parameters
    ----------
    h : Hurst parameter of the fractional component.
    method : "canonical" for the likelihood-ratio estimator, "oracle" for the
        exact discrete GLS estimate.

    After ``fit(t, x)`` the estimate is in ``theta_`` and the full record in
    ``record_``.
    """

    def __init__(self, h: float = 0.7, method: str = "canonical"):
        self.h = h
        self.method = method

    def fit(self, t, x):
        if self.method not in ("canonical", "oracle"):
            raise ValueError(f"unknown method {self.method!r}")
        h = check_hurst(self.h)
        grid = TimeGrid.from_times(check_uniform_times(t))
        if self.method == "canonical":
            ck = self._kernel_for(grid, h)
            record = drift_mle(ck, x)
        else:
            record = oracle_mle(increment_covariance(grid, h), x)
        self.record_ = record
        self.theta_ = record.theta_hat
        self.q_energy_ = record.q_energy
        return self

    def score(self, t, x) -> float:
        """Log-likelihood of (t, x) at the fitted drift."""
        h = check_hurst(self.h)
        grid = TimeGrid.from_times(check_uniform_times(t))
        return log_likelihood(self._kernel_for(grid, h), x, self.theta_)


class TrendMLE(BaseEstimator, _KernelCacheMixin):
    """Slope estimator for the regression model X = theta * t + V.

    After ``fit(t, x)``: ``theta_`` holds the estimate and ``variance_`` the
    theoretical error variance 1/<M>_T.
    """

    def __init__(self, h: float = 0.7):
        self.h = h

    def fit(self, t, x):
        h = check_hurst(self.h)
        grid = TimeGrid.from_times(check_uniform_times(t))
        record = regression_mle(self._kernel_for(grid, h), x)
        self.record_ = record
        self.theta_ = record.theta_hat
        self.variance_ = record.variance_theory
        return self
