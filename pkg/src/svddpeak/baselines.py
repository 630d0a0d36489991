"""Unsupervised Gaussian bandwidth selectors used as comparison baselines.

Three published single-class heuristics:

* CV: maximize the coefficient of variation Var/(Mean + eps) of the
  off-diagonal kernel entries over a bandwidth grid.
* MD: closed form from the maximum pairwise distance,
  s = d_max / sqrt(-ln delta) with delta = 1 / (n (1 - f) + 1).
* DFN: maximize (2/n) sum_i max_{j != i} k(x_i, x_j)
  - (2/n) sum_i min_{j != i} k(x_i, x_j) over a grid.

Grid methods break ties toward the smallest bandwidth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import DegenerateInputError, InputError
from .kernel import as_data_matrix
from .tuning import BandwidthGrid

CV = "cv"
MD = "md"
DFN = "dfn"


@dataclass
class BaselineResult:
    method: str
    s: float
    curve: np.ndarray | None = None  # (k, 2) array of (s, criterion) rows


def _argmax_smallest(scores) -> int:
    # smallest s wins ties; scores within float noise of the maximum are
    # tied (a flat criterion is rarely exactly flat in floats)
    best = float(scores.max())
    tol = 1e-12 * max(1.0, abs(best))
    return int(np.argmax(scores >= best - tol))


def select_cv(X, grid: BandwidthGrid, epsilon: float = 1e-6) -> BaselineResult:
    """Bandwidth maximizing the kernel-matrix coefficient of variation.

    Statistics are taken over the n(n-1)/2 distinct off-diagonal entries
    with population variance.
    """
    X = as_data_matrix(X)
    if X.shape[0] < 3:
        raise InputError("CV selection needs at least 3 observations")
    sq = pdist(X, "sqeuclidean")
    s_values = grid.values()
    scores = np.empty(s_values.size)
    for i, s in enumerate(s_values):
        k = np.exp(sq / (-2.0 * s * s))
        scores[i] = np.var(k) / (np.mean(k) + epsilon)
    best = _argmax_smallest(scores)
    return BaselineResult(method=CV, s=float(s_values[best]), curve=np.column_stack([s_values, scores]))


def select_md(X, f: float = 0.001) -> BaselineResult:
    """Closed-form bandwidth from the maximum pairwise distance."""
    X = as_data_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise InputError("MD selection needs at least 2 observations")
    if not (0.0 < f < 1.0):
        raise InputError(f"outlier fraction f must lie in (0, 1), got {f!r}")
    d_max = float(np.sqrt(pdist(X, "sqeuclidean").max()))
    if d_max == 0.0:
        raise DegenerateInputError("all observations coincide; d_max = 0")
    delta = 1.0 / (n * (1.0 - f) + 1.0)
    return BaselineResult(method=MD, s=d_max / float(np.sqrt(-np.log(delta))))


def select_dfn(X, grid: BandwidthGrid) -> BaselineResult:
    """Bandwidth maximizing the farthest-minus-nearest neighbor criterion.

    The max and min over neighbors both exclude the point itself;
    including the diagonal would pin the min term at k(x, x) = 1.
    """
    X = as_data_matrix(X)
    n = X.shape[0]
    if n < 3:
        raise InputError("DFN selection needs at least 3 observations")
    sq = squareform(pdist(X, "sqeuclidean"))
    off_diag = ~np.eye(n, dtype=bool)
    s_values = grid.values()
    scores = np.empty(s_values.size)
    for i, s in enumerate(s_values):
        k = np.exp(sq / (-2.0 * s * s))
        row_max = np.max(np.where(off_diag, k, -np.inf), axis=1)
        row_min = np.min(np.where(off_diag, k, np.inf), axis=1)
        scores[i] = (2.0 / n) * float(row_max.sum() - row_min.sum())
    best = _argmax_smallest(scores)
    return BaselineResult(method=DFN, s=float(s_values[best]), curve=np.column_stack([s_values, scores]))
