"""Canonical innovation kernel of the mixed noise, its bracket and inverse.

Two independent routes to the kernel g(s, t) that maps the noise V to the
Gaussian martingale M:

* ``projection_kernel`` solves the exact finite-dimensional projection
  M_{t_k} = E(B_{t_k} | increments of V up to t_k).  Valid for every Hurst
  parameter in (0, 1), exact for the discrete Gaussian model.
* ``nystrom_kernel`` discretizes the second-kind integral equation satisfied
  by g(., t) for h > 1/2 with product-integration quadrature.

The bracket <M> (the martingale's quadratic variation), its time derivative
and the reciprocal of that derivative drive everything downstream: the
likelihood statistics, the Riccati coefficients and the asymptotics.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import LinAlgError, solve_triangular

from .cov import IncrementCovariance, increment_covariance
from .exceptions import NumericalError
from .grid import TimeGrid
from .quadrature import singular_cell_moments
from .validation import check_hurst

_MIN_STEPS = 4  # centered differences of the bracket need at least this


class CanonicalKernel:
    """Discrete canonical kernel for one (grid, h) pair.

    Attributes
    ----------
    grid, h, cov : the inputs; ``cov`` keeps the Cholesky factor used to
        whiten paths.
    innovation_weights : vector y = L^{-1} c with c_j = Cov(B_{t_k}, dV_j);
        the projection onto the j-th innovation.  The weight rows w^(k)
        solve C[:k,:k] w = c[:k] and the whole lower-triangular array is
        materialized lazily as ``weights``.
    bracket : <M> at the grid points, cumulative sum of y^2.
    bracket_slope : centered second-order differences of the bracket
        (one-sided at the endpoints).
    inv_bracket_slope : reciprocal slope, the diagonal weight psi(t, t)
        appearing in the likelihood statistics.
    """

    def __init__(self, cov: IncrementCovariance):
        grid = cov.grid
        if grid.n < _MIN_STEPS:
            raise ValueError(f"kernel needs at least {_MIN_STEPS} grid steps, got {grid.n}")
        self.grid = grid
        self.h = cov.h
        self.cov = cov
        c = np.full(grid.n, grid.dt)
        try:
            y = solve_triangular(cov.cholesky, c, lower=True, check_finite=False)
        except LinAlgError as exc:  # pragma: no cover - factor is validated upstream
            raise NumericalError("triangular solve failed; covariance factor is corrupt") from exc
        self.innovation_weights = y
        bracket = np.empty(grid.n + 1)
        bracket[0] = 0.0
        np.cumsum(y * y, out=bracket[1:])
        if np.any(np.diff(bracket) <= 0):
            raise NumericalError("bracket is not strictly increasing")
        self.bracket = bracket
        self.bracket_slope = _centered_slope(bracket, grid.dt)
        if np.any(self.bracket_slope <= 0):
            raise NumericalError("bracket slope is not positive; grid too coarse")
        self.inv_bracket_slope = 1.0 / self.bracket_slope

    @cached_property
    def weights(self) -> np.ndarray:
        """Lower-triangular array w[k-1, j-1] = g(s_j, t_k), j <= k.

        Row k solves C[:k,:k] w = c[:k]; all rows follow from one triangular
        inverse via w[k-1, j-1] = sum_{i<=k} (L^{-1})[i-1, j-1] y_i.
        O(n^3) once, cached.
        """
        n = self.grid.n
        s = solve_triangular(self.cov.cholesky, np.eye(n), lower=True, check_finite=False)
        return np.cumsum(s * self.innovation_weights[:, None], axis=0)

    @cached_property
    def n_bracket(self) -> np.ndarray:
        """Companion bracket <N>_t = int_0^t g(s, t) s^(2h-1) ds.

        The power factor is integrated exactly over each cell so the h < 1/2
        singularity at s = 0 costs no accuracy.
        """
        t = self.grid.times
        two_h = 2.0 * self.h
        moments = (t[1:] ** two_h - t[:-1] ** two_h) / two_h
        out = np.empty(self.grid.n + 1)
        out[0] = 0.0
        out[1:] = (self.weights * moments[None, :]).sum(axis=1)
        return out

    def diagonal(self) -> np.ndarray:
        """g(t_k, t_k) for k = 1..n, read off as the last weight of each row."""
        return np.diag(self.weights)

    def inv_slope_interpolant(self):
        """Piecewise-linear interpolant of the reciprocal bracket slope.

        The returned callable rejects arguments outside [0, horizon].
        """
        t = self.grid.times
        values = self.inv_bracket_slope

        def interp(s):
            s = np.asarray(s, dtype=float)
            if np.any(s < 0.0) or np.any(s > t[-1] * (1 + 1e-12)):
                raise ValueError("interpolation argument outside the kernel horizon")
            out = np.interp(s, t, values)
            return float(out) if out.ndim == 0 else out

        return interp


def _centered_slope(values: np.ndarray, dt: float) -> np.ndarray:
    """Second-order finite differences: centered inside, one-sided at the ends."""
    out = np.empty_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2.0 * dt)
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt)
    out[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dt)
    return out


def projection_kernel(cov: IncrementCovariance) -> CanonicalKernel:
    """Canonical kernel via exact Gaussian projection; valid for all h in (0, 1)."""
    return CanonicalKernel(cov)


def make_kernel(horizon: float, n: int, h: float) -> CanonicalKernel:
    """Convenience: grid + covariance + projection kernel in one call."""
    return projection_kernel(increment_covariance(TimeGrid(horizon, n), check_hurst(h)))


def bracket_identity_residual(ck: CanonicalKernel) -> np.ndarray:
    """Residual of <M>_t + 2h <N>_t - t at every grid point.

    Zero for the exact continuum kernel; the discrete projection satisfies it
    to roundoff because the weight rows are reversal-symmetric.
    """
    return ck.bracket + 2.0 * ck.h * ck.n_bracket - ck.grid.times


@dataclass(frozen=True)
class NystromKernel:
    """Solution of the second-kind equation for g(., t) at fixed horizon t."""

    horizon: float
    h: float
    nodes: np.ndarray      # cell midpoints in [0, horizon]
    values: np.ndarray     # g at the nodes
    edges: np.ndarray

    def interpolate(self, s) -> np.ndarray:
        """Nystrom-natural evaluation g(s) = 1 - c_h int |s-r|^(2h-2) g(r) dr."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s < 0) or np.any(s > self.horizon):
            raise ValueError("evaluation point outside [0, horizon]")
        beta = 2.0 * self.h - 1.0
        moments = singular_cell_moments(s, self.edges, beta)
        return 1.0 - self.h * beta * (moments @ self.values)


def nystrom_kernel(horizon: float, h: float, n: int) -> NystromKernel:
    """Solve g(s,t) + c_h int_0^t |s-r|^(2h-2) g(r,t) dr = 1 for h > 1/2.

    Midpoint collocation with exact cell moments of the weakly singular
    factor.  The equation takes this second-kind form only for h > 1/2;
    smaller h is rejected (use the projection kernel instead).
    """
    h = check_hurst(h)
    if h <= 0.5:
        raise ValueError("the second-kind integral form requires h > 1/2")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if n < 2:
        raise ValueError("need at least 2 collocation cells")
    beta = 2.0 * h - 1.0
    edges = np.linspace(0.0, horizon, n + 1)
    nodes = 0.5 * (edges[:-1] + edges[1:])
    a = h * beta * singular_cell_moments(nodes, edges, beta)
    a[np.diag_indices(n)] += 1.0
    values = np.linalg.solve(a, np.ones(n))
    return NystromKernel(horizon=float(horizon), h=h, nodes=nodes, values=values, edges=edges)


class InverseKernel:
    """Discrete inverse kernel mapping martingale increments back to the noise.

    Implements the reconstruction weights

        gtilde(s, t) = 1 - d/d<M>_s  int_0^t g(r, s) dr,

    where g(r, s) beyond the diagonal r > s is extended by evaluating the
    defining collocation equation at the extra rows (the zero-horizon kernel
    is identically 1).  In the discrete Gaussian model this reproduces the
    exact conditional-expectation inverse, so the round trip V -> M -> V is
    exact up to roundoff.
    """

    def __init__(self, ck: CanonicalKernel):
        n = ck.grid.n
        dt = ck.grid.dt
        w = ck.weights
        k_fbm = ck.cov.fbm_part
        # g_full[k-1, i-1] = 1 - (1/dt) sum_{j<=k} K[i,j] w_j^(k): equals the
        # projection weights for i <= k and the equation extension for i > k
        g_full = 1.0 - (w @ k_fbm) / dt
        primitive = dt * np.cumsum(g_full, axis=1).T  # [i-1, j-1] = int_0^{t_i} g(r, t_j) dr
        dprim = np.empty((n, n))
        dprim[:, 0] = primitive[:, 0] - ck.grid.times[1:]  # s = 0 column: g(., 0) == 1
        dprim[:, 1:] = np.diff(primitive, axis=1)
        dbracket = np.diff(ck.bracket)
        self.grid = ck.grid
        self.weights = np.tril(1.0 - dprim / dbracket[None, :])

    def reconstruct(self, dm: np.ndarray) -> np.ndarray:
        """Noise path V at the grid points from martingale increments dm."""
        n = self.grid.n
        if dm.shape[0] != n:
            raise ValueError(f"expected {n} martingale increments, got {dm.shape[0]}")
        v = np.empty(n + 1)
        v[0] = 0.0
        v[1:] = self.weights @ dm
        return v


def inverse_kernel(ck: CanonicalKernel) -> InverseKernel:
    """Inverse kernel columns for every horizon t_k on the grid."""
    return InverseKernel(ck)
