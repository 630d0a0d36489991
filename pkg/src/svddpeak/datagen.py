"""Synthetic two-dimensional geometry for benchmarking boundary quality.

Random polygons are built from order statistics of uniform angles with
uniform radii; interior points come from bounding-box rejection
sampling; ground-truth labels use a ray-casting point-in-polygon test
with a closed boundary (edge points count as inside, matching the
inclusive inlier rule dist^2 <= R^2).

All randomness flows through numpy's seedable PCG64 generator
(``numpy.random.default_rng``), so fixed seeds reproduce byte-identical
datasets on every platform.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, InputError
from .kernel import as_data_matrix

BANANA = "banana"
STAR = "star"
THREE_CLUSTER = "three_cluster"
SHAPE_KINDS = (BANANA, STAR, THREE_CLUSTER)

# defaults for the reconstructed benchmark shapes
SHAPE_SIZES = {BANANA: 267, STAR: 500, THREE_CLUSTER: 450}
SHAPE_NOISE = {BANANA: 0.25, STAR: 0.0, THREE_CLUSTER: 0.7}

_MAX_POLYGON_ATTEMPTS = 16


@dataclass(frozen=True)
class PolygonConfig:
    k: int
    r_min: float = 3.0
    r_max: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 3:
            raise InputError("polygons need at least 3 vertices")
        if not (0.0 < self.r_min <= self.r_max):
            raise InputError("need 0 < r_min <= r_max")


@dataclass
class Polygon:
    vertices: np.ndarray  # (k, 2), anticlockwise
    attempts: int = 1

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise InputError("polygon vertices must form a (k, 2) array with k >= 3")
        self.vertices = v
        if shoelace_area(v) <= 0.0:
            raise InputError("polygon must be anticlockwise with positive area")

    @property
    def k(self) -> int:
        return self.vertices.shape[0]

    @property
    def area(self) -> float:
        return shoelace_area(self.vertices)

    def bounding_box(self) -> tuple:
        v = self.vertices
        return (
            float(v[:, 0].min()),
            float(v[:, 0].max()),
            float(v[:, 1].min()),
            float(v[:, 1].max()),
        )


@dataclass
class LabeledGrid:
    """Lattice over a bounding rectangle with ground-truth inside labels.

    Points are ordered x-fastest: points[i] = (xs[i % rx], ys[i // rx]).
    """

    bounds: tuple  # (x_min, x_max, y_min, y_max)
    resolution: tuple  # (rx, ry)
    points: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)


def shoelace_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def generate_polygon(config: PolygonConfig) -> Polygon:
    """Random anticlockwise polygon: sorted uniform angles, uniform radii.

    The first vertex sits on the positive x-axis (its angle is fixed at
    zero). A zero-area draw (measure zero, but possible in floating
    point) is regenerated from seed + 1, and the retry count is recorded
    on the returned polygon.
    """
    for attempt in range(_MAX_POLYGON_ATTEMPTS):
        rng = np.random.default_rng(config.seed + attempt)
        thetas = np.concatenate([[0.0], np.sort(rng.uniform(0.0, 2.0 * np.pi, config.k - 1))])
        radii = rng.uniform(config.r_min, config.r_max, config.k)
        vertices = np.column_stack([radii * np.cos(thetas), radii * np.sin(thetas)])
        if shoelace_area(vertices) > 1e-12 * config.r_max**2:
            return Polygon(vertices=vertices, attempts=attempt + 1)
    raise DegenerateInputError(
        f"could not draw a non-degenerate polygon from seed {config.seed}"
    )


def points_in_polygon(points, poly: Polygon) -> np.ndarray:
    """Vectorized ray-casting test, closed boundary (edges are inside)."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    x, y = P[:, 0], P[:, 1]
    v = poly.vertices
    x1, y1 = v[:, 0], v[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    scale = max(1.0, float(np.abs(v).max()))
    edge_tol = 1e-12 * scale * scale
    inside = np.zeros(P.shape[0], dtype=bool)
    on_edge = np.zeros(P.shape[0], dtype=bool)
    for a1, b1, a2, b2 in zip(x1, y1, x2, y2):
        cross = (a2 - a1) * (y - b1) - (b2 - b1) * (x - a1)
        within = (
            (np.minimum(a1, a2) - edge_tol <= x)
            & (x <= np.maximum(a1, a2) + edge_tol)
            & (np.minimum(b1, b2) - edge_tol <= y)
            & (y <= np.maximum(b1, b2) + edge_tol)
        )
        on_edge |= (np.abs(cross) <= edge_tol) & within
        spans = (b1 > y) != (b2 > y)
        if np.any(spans):
            x_hit = a1 + (y - b1) * (a2 - a1) / (b2 - b1)
            inside ^= spans & (x < x_hit)
    return inside | on_edge


def point_in_polygon(p, poly: Polygon) -> bool:
    return bool(points_in_polygon(np.asarray(p, dtype=float).reshape(1, 2), poly)[0])


def sample_interior(poly: Polygon, count: int, seed: int) -> np.ndarray:
    """Uniform interior points by bounding-box rejection, fixed seed."""
    if count < 1:
        raise InputError("count must be at least 1")
    if poly.area <= 0.0 or not np.isfinite(poly.area):
        raise DegenerateInputError("cannot sample from a zero-area polygon")
    x_min, x_max, y_min, y_max = poly.bounding_box()
    rng = np.random.default_rng(seed)
    chunks = []
    have = 0
    while have < count:
        batch = max(4 * (count - have), 256)
        cand = np.column_stack(
            [rng.uniform(x_min, x_max, batch), rng.uniform(y_min, y_max, batch)]
        )
        keep = cand[points_in_polygon(cand, poly)]
        chunks.append(keep)
        have += keep.shape[0]
    return np.concatenate(chunks, axis=0)[:count]


def make_labeled_grid(poly: Polygon, resolution=(200, 200)) -> LabeledGrid:
    """Inclusive lattice over the polygon's bounding rectangle, labeled."""
    rx, ry = int(resolution[0]), int(resolution[1])
    if rx < 2 or ry < 2:
        raise InputError("grid resolution must be at least 2 per axis")
    bounds = poly.bounding_box()
    xs = np.linspace(bounds[0], bounds[1], rx)
    ys = np.linspace(bounds[2], bounds[3], ry)
    gx, gy = np.meshgrid(xs, ys)
    points = np.column_stack([gx.ravel(), gy.ravel()])
    labels = points_in_polygon(points, poly)
    return LabeledGrid(bounds=bounds, resolution=(rx, ry), points=points, labels=labels)


def labeled_grid_over(points, resolution=(200, 200), padding=0.0, poly: Polygon | None = None):
    """Lattice over the bounding box of arbitrary points, optionally labeled."""
    P = as_data_matrix(points)
    if P.shape[1] != 2:
        raise InputError("labeled grids are defined for 2-D data only")
    rx, ry = int(resolution[0]), int(resolution[1])
    x_min, x_max = float(P[:, 0].min()), float(P[:, 0].max())
    y_min, y_max = float(P[:, 1].min()), float(P[:, 1].max())
    pad_x = padding * (x_max - x_min)
    pad_y = padding * (y_max - y_min)
    xs = np.linspace(x_min - pad_x, x_max + pad_x, rx)
    ys = np.linspace(y_min - pad_y, y_max + pad_y, ry)
    gx, gy = np.meshgrid(xs, ys)
    lattice = np.column_stack([gx.ravel(), gy.ravel()])
    labels = points_in_polygon(lattice, poly) if poly is not None else np.zeros(lattice.shape[0], bool)
    return LabeledGrid(
        bounds=(xs[0], xs[-1], ys[0], ys[-1]),
        resolution=(rx, ry),
        points=lattice,
        labels=labels,
    )


def make_star_polygon(n_points=5, outer_radius=4.0, inner_radius=1.6, seed=None) -> Polygon:
    """Regular star polygon with alternating outer and inner vertices."""
    angles = np.pi / 2.0 + np.arange(2 * n_points) * np.pi / n_points
    radii = np.where(np.arange(2 * n_points) % 2 == 0, outer_radius, inner_radius)
    vertices = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    if shoelace_area(vertices) < 0:
        vertices = vertices[::-1]
    return Polygon(vertices=vertices)


def generate_shape(kind: str, n: int | None = None, noise: float | None = None, seed: int = 0) -> np.ndarray:
    """Reconstructed benchmark shapes: banana band, star interior, 3 blobs.

    ``noise`` is the band thickness for the banana, the within-cluster
    standard deviation for the clusters, and ignored for the star.
    """
    if kind not in SHAPE_KINDS:
        raise InputError(f"unknown shape kind {kind!r}; expected one of {SHAPE_KINDS}")
    n = SHAPE_SIZES[kind] if n is None else int(n)
    if n < 1:
        raise InputError("n must be at least 1")
    noise = SHAPE_NOISE[kind] if noise is None else float(noise)
    rng = np.random.default_rng(seed)
    if kind == BANANA:
        t = rng.uniform(-3.0, 3.0, n)
        base = np.column_stack([t, t * t / 3.0 - 1.5])
        return base + rng.normal(0.0, noise, (n, 2))
    if kind == STAR:
        poly = make_star_polygon()
        return sample_interior(poly, n, seed)
    centers = np.array([[0.0, 0.0], [8.0, 0.0], [4.0, 7.0]])
    sizes = [n // 3 + (1 if r < n % 3 else 0) for r in range(3)]
    parts = [
        centers[c] + rng.normal(0.0, noise, (sizes[c], 2))
        for c in range(3)
        if sizes[c] > 0
    ]
    return np.concatenate(parts, axis=0)


def shape_truth_grid(kind: str, X, resolution=(200, 200), noise: float | None = None) -> LabeledGrid:
    """Ground-truth labels for the reconstructed benchmark shapes.

    The ideal region is the generator's support: a band of half-width
    2 * noise around the banana arc, the star polygon itself, or discs of
    radius 2.45 * noise (95% Gaussian mass) around the cluster centers.
    The lattice covers the bounding box of the sample X.
    """
    if kind not in SHAPE_KINDS:
        raise InputError(f"unknown shape kind {kind!r}; expected one of {SHAPE_KINDS}")
    noise = SHAPE_NOISE[kind] if noise is None else float(noise)
    grid = labeled_grid_over(X, resolution=resolution)
    if kind == BANANA:
        t = np.linspace(-3.0, 3.0, 2001)
        arc = np.column_stack([t, t * t / 3.0 - 1.5])
        from scipy.spatial.distance import cdist

        labels = cdist(grid.points, arc).min(axis=1) <= 2.0 * noise
    elif kind == STAR:
        labels = points_in_polygon(grid.points, make_star_polygon())
    else:
        centers = np.array([[0.0, 0.0], [8.0, 0.0], [4.0, 7.0]])
        sq = ((grid.points[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
        labels = np.sqrt(sq.min(axis=1)) <= 2.45 * noise
    return LabeledGrid(
        bounds=grid.bounds,
        resolution=grid.resolution,
        points=grid.points,
        labels=labels,
    )


def save_dataset(path, X, labels=None) -> None:
    """CSV export: header x1..xm plus an optional integer label column."""
    X = as_data_matrix(X)
    header = [f"x{i + 1}" for i in range(X.shape[1])]
    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape[0] != X.shape[0]:
            raise InputError("labels length must match the number of rows")
        header.append("label")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(X.shape[0]):
            row = [f"{v:.12g}" for v in X[i]]
            if labels is not None:
                row.append(str(int(labels[i])))
            writer.writerow(row)
