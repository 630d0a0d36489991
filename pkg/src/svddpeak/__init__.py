"""One-class classification with support vector data description and
automatic Gaussian bandwidth selection from the dual objective curve."""

from .baselines import BaselineResult, select_cv, select_dfn, select_md
from .datagen import (
    LabeledGrid,
    Polygon,
    PolygonConfig,
    generate_polygon,
    generate_shape,
    make_labeled_grid,
    point_in_polygon,
    sample_interior,
)
from .evaluation import (
    ConfusionCounts,
    F1SweepResult,
    Metrics,
    SimulationReport,
    compute_metrics,
    f1_sweep,
    polygon_study,
    score_grid,
)
from .kernel import GAUSSIAN, LINEAR, KernelSpec, kernel_matrix, kernel_value
from .smoothing import SplineConfig, SplineFit, ci_contains_zero, fit_pspline, select_lambda
from .solver import (
    PositionReport,
    SolverConfig,
    SvddModel,
    classify,
    compute_center,
    compute_threshold,
    load_model,
    position_report,
    score_distance,
    score_distances,
    train,
)
from .tuning import (
    BandwidthGrid,
    ObjectiveCurve,
    PeakResult,
    find_peak,
    select_bandwidth_peak,
    sweep_objective,
)

__version__ = "0.1.0"

__all__ = [
    "BandwidthGrid",
    "BaselineResult",
    "ConfusionCounts",
    "F1SweepResult",
    "GAUSSIAN",
    "KernelSpec",
    "LINEAR",
    "LabeledGrid",
    "Metrics",
    "ObjectiveCurve",
    "PeakResult",
    "Polygon",
    "PolygonConfig",
    "PositionReport",
    "SimulationReport",
    "SolverConfig",
    "SplineConfig",
    "SplineFit",
    "SvddModel",
    "__version__",
    "ci_contains_zero",
    "classify",
    "compute_center",
    "compute_metrics",
    "compute_threshold",
    "f1_sweep",
    "find_peak",
    "fit_pspline",
    "generate_polygon",
    "generate_shape",
    "kernel_matrix",
    "kernel_value",
    "load_model",
    "make_labeled_grid",
    "point_in_polygon",
    "polygon_study",
    "position_report",
    "sample_interior",
    "score_distance",
    "score_distances",
    "score_grid",
    "select_bandwidth_peak",
    "select_cv",
    "select_dfn",
    "select_lambda",
    "select_md",
    "sweep_objective",
    "train",
]
