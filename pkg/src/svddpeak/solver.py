"""SVDD dual solver: training, threshold, scoring, and duality positions.

The training problem is the data-description dual of Tax & Duin (2004):

    maximize    sum_i alpha_i K(x_i, x_i) - sum_ij alpha_i alpha_j K(x_i, x_j)
    subject to  sum_i alpha_i = 1,   0 <= alpha_i <= C,   C = 1 / (n f)

solved by sequential minimal optimization: repeatedly pick the pair of
coordinates with the largest KKT violation, solve the one-dimensional
subproblem along ``e_i - e_j`` in closed form, and clip to the box. The
equality constraint is preserved exactly by every pairwise step.

The threshold R^2 is the squared kernel distance from the center to any
support vector strictly inside the box; we average it over all of them,
which is a no-op at exact optimality and damps tie-breaking noise at
finite tolerance. A scoring point z is an outlier when dist^2(z) > R^2
(strict), with

    dist^2(z) = K(z, z) - 2 sum_i alpha_i K(x_i, z)
                + sum_ij alpha_i alpha_j K(x_i, x_j).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernel as _kernel
from .errors import (
    ConvergenceError,
    DegenerateModelError,
    DimensionError,
    InputError,
    NumericalError,
    UnsupportedOperationError,
)
from .kernel import GAUSSIAN, LINEAR, KernelSpec, as_data_matrix

MODEL_FORMAT_VERSION = 1

INLIER = "inlier"
OUTLIER = "outlier"
INSIDE = "inside"
BOUNDARY = "boundary"
OUTSIDE = "outside"

# curvature below this is treated as flat (identical points) in SMO steps
_CURVATURE_FLOOR = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    """Solver knobs. ``f`` is the expected outlier fraction; C = 1/(n f)."""

    f: float
    kkt_tol: float = 1e-6
    max_iterations: int = 100_000

    def __post_init__(self):
        if not (0.0 < self.f <= 1.0):
            raise InputError(f"outlier fraction f must lie in (0, 1], got {self.f!r}")
        if self.kkt_tol <= 0:
            raise InputError("kkt_tol must be positive")
        if self.max_iterations < 1:
            raise InputError("max_iterations must be at least 1")

    def box_bound(self, n: int) -> float:
        return 1.0 / (n * self.f)


@dataclass
class SvddModel:
    """Fitted dual solution plus everything needed to score new points."""

    alphas: np.ndarray
    sv_indices: np.ndarray
    boundary_sv_indices: np.ndarray
    r_squared: float
    spec: KernelSpec
    config: SolverConfig
    support_vectors: np.ndarray
    dual_objective: float
    X: np.ndarray
    kkt_residual: float = 0.0
    iterations: int = 0
    # cached sum_ij alpha_i alpha_j K(x_i, x_j), the constant term of dist^2
    alpha_quad: float = field(default=0.0, repr=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def C(self) -> float:
        return self.config.box_bound(self.n)

    def sv_alphas(self) -> np.ndarray:
        return self.alphas[self.sv_indices]

    def to_dict(self) -> dict:
        s = self.spec.s if self.spec.kind == GAUSSIAN else None
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "kernel_kind": self.spec.kind,
            "s": s,
            "f": self.config.f,
            "C": self.C,
            "r_squared": self.r_squared,
            "dual_objective": self.dual_objective,
            "support_vectors": self.support_vectors.tolist(),
            "alphas": self.alphas[self.sv_indices].tolist(),
        }

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def model_from_dict(payload: dict) -> SvddModel:
    """Rebuild a scoring-capable model from its serialized form.

    Only support vectors are serialized, so the rebuilt model's training
    view is the support-vector set itself (alphas are zero elsewhere and
    contribute nothing to scoring).
    """
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise InputError(f"unsupported model format_version {version!r}")
    kind = payload["kernel_kind"]
    spec = KernelSpec(kind=kind, s=payload["s"] if kind == GAUSSIAN else None)
    sv = np.asarray(payload["support_vectors"], dtype=float)
    alphas = np.asarray(payload["alphas"], dtype=float)
    if sv.ndim != 2 or alphas.shape != (sv.shape[0],):
        raise InputError("support_vectors and alphas are inconsistent")
    config = SolverConfig(f=payload["f"])
    K = _kernel.kernel_matrix(sv, spec)
    n = sv.shape[0]
    C = config.box_bound(n) if n else 0.0
    boundary = _boundary_indices(alphas, payload["C"], config.kkt_tol)
    return SvddModel(
        alphas=alphas,
        sv_indices=np.arange(n),
        boundary_sv_indices=boundary,
        r_squared=float(payload["r_squared"]),
        spec=spec,
        config=config,
        support_vectors=sv,
        dual_objective=float(payload["dual_objective"]),
        X=sv,
        alpha_quad=float(alphas @ K @ alphas),
    )


def load_model(path) -> SvddModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def _boundary_indices(alphas, C, tol) -> np.ndarray:
    return np.flatnonzero((alphas > tol) & (alphas < C - tol))


def _solve_smo(K, C, kkt_tol, max_iterations, alpha0):
    """Maximal-violating-pair SMO on min a'Ka - diag(K)'a over the scaled box.

    Returns (alpha, kkt_residual, iterations). Gradient is maintained
    incrementally and re-derived from scratch before convergence is
    accepted, so drift cannot produce a falsely converged result.
    """
    n = K.shape[0]
    diag = np.ascontiguousarray(np.diag(K))
    alpha = np.asarray(alpha0, dtype=float).copy()
    grad = 2.0 * (K @ alpha) - diag
    iterations = 0
    while iterations < max_iterations:
        i = int(np.argmin(np.where(alpha < C, grad, np.inf)))
        j = int(np.argmax(np.where(alpha > 0.0, grad, -np.inf)))
        violation = grad[j] - grad[i]
        if violation <= kkt_tol:
            grad = 2.0 * (K @ alpha) - diag
            i = int(np.argmin(np.where(alpha < C, grad, np.inf)))
            j = int(np.argmax(np.where(alpha > 0.0, grad, -np.inf)))
            violation = grad[j] - grad[i]
            if violation <= kkt_tol:
                return alpha, float(max(violation, 0.0)), iterations
            continue
        curvature = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if curvature > _CURVATURE_FLOOR:
            step = violation / (2.0 * curvature)
        else:
            step = np.inf
        room_i = C - alpha[i]
        room_j = alpha[j]
        clipped = min(step, room_i, room_j)
        new_i = alpha[i] + clipped
        new_j = alpha[j] - clipped
        if clipped >= room_i:
            new_i = C
        if clipped >= room_j:
            new_j = 0.0
        alpha[i] = new_i
        alpha[j] = new_j
        grad += (2.0 * clipped) * (K[:, i] - K[:, j])
        iterations += 1
    grad = 2.0 * (K @ alpha) - diag
    i = int(np.argmin(np.where(alpha < C, grad, np.inf)))
    j = int(np.argmax(np.where(alpha > 0.0, grad, -np.inf)))
    residual = float(grad[j] - grad[i])
    raise ConvergenceError(
        f"SMO did not reach kkt_tol={kkt_tol:g} within {max_iterations} iterations "
        f"(residual {residual:.3e})",
        alphas=alpha,
        kkt_residual=residual,
        iterations=iterations,
    )


def _threshold_from_parts(K, alphas, boundary, alpha_quad, kkt_tol):
    """Average squared center distance over boundary support vectors."""
    if boundary.size == 0:
        raise DegenerateModelError(
            "no support vector lies strictly inside the box; the threshold is undefined"
        )
    diag = np.diag(K)
    per_sv = diag[boundary] - 2.0 * (K[boundary, :] @ alphas) + alpha_quad
    spread = float(per_sv.max() - per_sv.min())
    if spread > 10.0 * kkt_tol * max(1.0, float(np.abs(diag).max())):
        raise NumericalError(
            f"boundary support vectors disagree on the threshold by {spread:.3e}"
        )
    return float(max(per_sv.mean(), 0.0))


def _threshold_midpoint_fallback(K, alphas, C, alpha_quad, kkt_tol):
    """Threshold when the optimum has every alpha at a box bound.

    The KKT conditions then only bracket R^2: it is at least the largest
    distance among alpha = 0 points and at most the smallest among
    alpha = C points. Take the midpoint of that interval (or its upper
    end when nothing is strictly inside).
    """
    dist_sq = np.diag(K) - 2.0 * (K @ alphas) + alpha_quad
    inside = alphas <= kkt_tol
    outside = alphas >= C - kkt_tol
    hi = float(dist_sq[outside].min()) if np.any(outside) else 0.0
    if not np.any(inside):
        return max(hi, 0.0)
    lo = float(dist_sq[inside].max())
    return max(0.5 * (lo + hi), 0.0)


def train(X, spec: KernelSpec, config: SolverConfig, initial_alphas=None) -> SvddModel:
    """Fit an SVDD model. Deterministic for fixed inputs.

    ``initial_alphas`` warm-starts SMO (it is projected back to the
    feasible set first); the default is the uniform feasible point.
    """
    X = as_data_matrix(X)
    n = X.shape[0]
    C = config.box_bound(n)
    K = _kernel.kernel_matrix(X, spec)

    if n == 1:
        alphas = np.array([1.0])
        k11 = float(K[0, 0])
        boundary = _boundary_indices(alphas, C, config.kkt_tol)
        return SvddModel(
            alphas=alphas,
            sv_indices=np.array([0]),
            boundary_sv_indices=boundary,
            r_squared=0.0,
            spec=spec,
            config=config,
            support_vectors=X.copy(),
            dual_objective=0.0,
            X=X,
            alpha_quad=k11,
        )

    if initial_alphas is None:
        alpha0 = np.full(n, 1.0 / n)
    else:
        alpha0 = np.clip(np.asarray(initial_alphas, dtype=float), 0.0, C)
        total = alpha0.sum()
        if not np.isfinite(total) or total <= 0:
            alpha0 = np.full(n, 1.0 / n)
        else:
            alpha0 = np.clip(alpha0 / total, 0.0, C)

    alphas, residual, iterations = _solve_smo(
        K, C, config.kkt_tol, config.max_iterations, alpha0
    )
    alphas = alphas / alphas.sum()
    np.clip(alphas, 0.0, C, out=alphas)

    alpha_quad = float(alphas @ (K @ alphas))
    dual_objective = float(np.diag(K) @ alphas - alpha_quad)
    sv_indices = np.flatnonzero(alphas > 0.0)
    boundary = _boundary_indices(alphas, C, config.kkt_tol)
    if boundary.size:
        r_squared = _threshold_from_parts(K, alphas, boundary, alpha_quad, config.kkt_tol)
    else:
        r_squared = _threshold_midpoint_fallback(K, alphas, C, alpha_quad, config.kkt_tol)
    return SvddModel(
        alphas=alphas,
        sv_indices=sv_indices,
        boundary_sv_indices=boundary,
        r_squared=r_squared,
        spec=spec,
        config=config,
        support_vectors=X[sv_indices].copy(),
        dual_objective=dual_objective,
        X=X,
        kkt_residual=residual,
        iterations=iterations,
        alpha_quad=alpha_quad,
    )


def compute_threshold(model: SvddModel) -> float:
    """Recompute R^2 from the stored dual solution (see module docstring)."""
    if model.n == 1:
        return 0.0
    K = _kernel.kernel_matrix(model.X, model.spec)
    return _threshold_from_parts(
        K, model.alphas, model.boundary_sv_indices, model.alpha_quad, model.config.kkt_tol
    )


def score_distances(model: SvddModel, Z) -> np.ndarray:
    """dist^2 for each row of Z against the fitted description."""
    Z = as_data_matrix(Z, name="Z")
    if Z.shape[1] != model.dim:
        raise DimensionError(
            f"scoring rows have {Z.shape[1]} feature(s), model expects {model.dim}"
        )
    cross = _kernel.cross_kernel(Z, model.support_vectors, model.spec)
    if model.spec.kind == GAUSSIAN:
        self_term = np.ones(Z.shape[0])
    else:
        self_term = np.einsum("ij,ij->i", Z, Z)
    return self_term - 2.0 * (cross @ model.sv_alphas()) + model.alpha_quad


def score_distance(model: SvddModel, z) -> float:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise DimensionError("z must be a single feature vector")
    return float(score_distances(model, z.reshape(1, -1))[0])


def classify(model: SvddModel, Z) -> np.ndarray:
    """Label each row of Z 'outlier' iff dist^2 > R^2 (strict), else 'inlier'."""
    dist_sq = score_distances(model, Z)
    return np.where(dist_sq > model.r_squared, OUTLIER, INLIER)


@dataclass
class PositionReport:
    """Per-observation duality positions of the training data."""

    positions: np.ndarray  # str array over {inside, boundary, outside}
    distances: np.ndarray
    r_squared: float
    tolerance: float

    def counts(self) -> dict:
        return {
            kind: int(np.sum(self.positions == kind))
            for kind in (INSIDE, BOUNDARY, OUTSIDE)
        }


def position_report(model: SvddModel, tolerance: float | None = None) -> PositionReport:
    """Classify every training point from its alpha and cross-check distances.

    inside: alpha ~ 0, boundary: 0 < alpha < C, outside: alpha ~ C. The
    distance consistency (inside => dist^2 <= R^2 + tol, boundary =>
    |dist^2 - R^2| <= tol, outside => dist^2 >= R^2 - tol) is verified and
    a violation raises NumericalError, since it can only come from an
    unconverged solve.
    """
    tol = 10.0 * model.config.kkt_tol if tolerance is None else tolerance
    C = model.C
    a = model.alphas
    positions = np.full(model.n, BOUNDARY, dtype=object)
    positions[a <= model.config.kkt_tol] = INSIDE
    positions[a >= C - model.config.kkt_tol] = OUTSIDE
    dist_sq = score_distances(model, model.X)
    r2 = model.r_squared
    bad_inside = (positions == INSIDE) & (dist_sq > r2 + tol)
    bad_boundary = (positions == BOUNDARY) & (np.abs(dist_sq - r2) > tol)
    bad_outside = (positions == OUTSIDE) & (dist_sq < r2 - tol)
    bad = bad_inside | bad_boundary | bad_outside
    if np.any(bad):
        worst = int(np.argmax(np.abs(dist_sq - r2) * bad))
        raise NumericalError(
            f"duality position of observation {worst} is inconsistent with its "
            f"distance (alpha={a[worst]:.3e}, dist^2={dist_sq[worst]:.6e}, R^2={r2:.6e})"
        )
    return PositionReport(
        positions=np.asarray(positions, dtype=str),
        distances=dist_sq,
        r_squared=r2,
        tolerance=tol,
    )


def compute_center(model: SvddModel) -> np.ndarray:
    """Center of the hypersphere, defined in input space for linear kernels."""
    if model.spec.kind != LINEAR:
        raise UnsupportedOperationError(
            "the center lives in input space only for the linear kernel"
        )
    return model.sv_alphas() @ model.support_vectors
