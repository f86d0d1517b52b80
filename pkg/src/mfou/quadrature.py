"""Product-integration quadrature for the weakly singular kernel |x - y|^(beta-1).

The cell moments int_a^b |x - y|^(beta-1) dy have closed-form antiderivatives
for beta in (0, 1); integrating the singular factor exactly against piecewise
interpolants avoids the blow-up a pointwise quadrature rule would suffer near
the diagonal.
"""

from __future__ import annotations

import numpy as np

from .exceptions import NumericalError


def singular_cell_moments(x: np.ndarray, edges: np.ndarray, beta: float) -> np.ndarray:
    """Exact moments m[i, j] = int_{edges[j]}^{edges[j+1]} |x[i] - y|^(beta-1) dy.

    Works on any partition, uniform or graded; beta must lie in (0, 1) so the
    singularity at y = x[i] is integrable.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    x = np.asarray(x, dtype=float)
    a = edges[:-1][None, :]
    b = edges[1:][None, :]
    X = x[:, None]
    # |.| guards the branches masked out by np.where from invalid powers
    da = np.abs(X - a) ** beta
    db = np.abs(X - b) ** beta
    below = np.where(b <= X, da - db, 0.0)
    above = np.where(a >= X, db - da, 0.0)
    straddle = np.where((a < X) & (X < b), da + db, 0.0)
    m = (below + above + straddle) / beta
    if not np.isfinite(m).all():
        raise NumericalError("singular kernel moments are not finite")
    return m


def geometric_graded_edges(cells_per_side: int, min_cell: float) -> np.ndarray:
    """Partition of [0, 1] refined geometrically toward both endpoints.

    The first cell at each endpoint has width min_cell and widths grow by a
    constant ratio toward the midpoint, so all length scales between min_cell
    and 1 are covered log-uniformly.
    """
    if cells_per_side < 2:
        raise ValueError("cells_per_side must be at least 2")
    if not 0.0 < min_cell < 0.5:
        raise ValueError("min_cell must lie in (0, 0.5)")
    ratio = (0.5 / min_cell) ** (1.0 / cells_per_side)
    left = min_cell * ratio ** np.arange(cells_per_side + 1)
    left[-1] = 0.5
    edges = np.concatenate([[0.0], left, 1.0 - left[:-1][::-1], [1.0]])
    return np.unique(edges)
