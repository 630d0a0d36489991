"""Command-line surface: training, tuning, scoring, grids, simulation,
shape generation, and UCI shuttle ingestion.

Every command writes a manifest JSON next to its primary output with the
resolved parameters, seeds, input digests, tool version, and timestamp;
re-running a command from its manifest reproduces the primary outputs
byte for byte (the manifest's own timestamp is the only thing that
changes). All randomness flows from explicit --seed flags.

CSV dialect everywhere: comma separator, required header row, '.'
decimal, UTF-8.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from . import baselines as _baselines
from . import datagen as _datagen
from . import evaluation as _evaluation
from . import solver as _solver
from . import tuning as _tuning
from .errors import InputError, NoPeakFoundError, ParseError, SvddError
from .kernel import GAUSSIAN, LINEAR, KernelSpec
from .solver import SolverConfig
from .tuning import BandwidthGrid

SHUTTLE_URL = "https://archive.ics.uci.edu/dataset/148/statlog+shuttle"
JOBS_ENV = "SVDD_PEAK_JOBS"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NO_PEAK = 3


def _fmt(value) -> str:
    return f"{value:.12g}"


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(primary_output, command, parameters, inputs, seeds=None):
    manifest = {
        "command": command,
        "parameters": parameters,
        "seeds": seeds or {},
        "inputs": {str(p): _sha256(p) for p in inputs},
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    path = str(primary_output) + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_csv_dataset(path):
    """(header, matrix, labels) from a comma-separated file with a header.

    A final integer column named 'label' is split off when present. Rows
    are validated; a malformed cell reports its 1-based line number.
    """
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, expected a header row")
        header = [h.strip() for h in header]
        has_label = bool(header) and header[-1] == "label"
        width = len(header) - (1 if has_label else 0)
        if width < 1:
            raise ParseError(f"{path}: no feature columns in header")
        rows, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: line {line_no}: expected {len(header)} fields, got {len(row)}",
                    line_number=line_no,
                )
            try:
                rows.append([float(v) for v in row[:width]])
                if has_label:
                    labels.append(int(row[-1]))
            except ValueError as exc:
                raise ParseError(
                    f"{path}: line {line_no}: {exc}", line_number=line_no
                ) from exc
    X = np.array(rows, dtype=float) if rows else np.empty((0, width))
    y = np.array(labels, dtype=int) if has_label else None
    return header[:width], X, y


def ingest_shuttle(path):
    """Parse the UCI Statlog shuttle file: 9 integer features + class.

    Returns (features, class_labels). The file is whitespace separated
    with no header.
    """
    features, labels = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 10:
                raise ParseError(
                    f"{path}: line {line_no}: expected 10 whitespace-separated fields, "
                    f"got {len(parts)}",
                    line_number=line_no,
                )
            try:
                values = [int(v) for v in parts]
            except ValueError as exc:
                raise ParseError(
                    f"{path}: line {line_no}: {exc}", line_number=line_no
                ) from exc
            features.append(values[:9])
            labels.append(values[9])
    if not features:
        raise ParseError(f"{path}: no data rows")
    return np.array(features, dtype=float), np.array(labels, dtype=int)


def sample_shuttle_class1(X, labels, count, seed):
    """The training protocol: a fixed-seed sample of class-1 rows."""
    class1 = np.flatnonzero(labels == 1)
    if class1.size < count:
        raise ParseError(
            f"asked for {count} class-1 rows but the file has only {class1.size}"
        )
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(class1, size=count, replace=False))
    return X[chosen]


def _grid_from_args(args) -> BandwidthGrid:
    return BandwidthGrid(args.s_min, args.s_max, args.s_step)


def _solver_config(args) -> SolverConfig:
    return SolverConfig(f=args.f, kkt_tol=args.kkt_tol, max_iterations=args.max_iterations)


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _curve_rows(curve, fit, mask):
    """Rows for the objective-curve export; derivative columns are blank
    at the two endpoints where central differences are undefined."""
    rows = []
    n = curve.s_values.size
    for i, s in enumerate(curve.s_values):
        if 1 <= i <= n - 2:
            j = i - 1
            rows.append(
                [
                    _fmt(s),
                    _fmt(curve.v_star[i]),
                    _fmt(curve.d1[j]),
                    _fmt(curve.d2[j]),
                    _fmt(fit.fitted[j]),
                    _fmt(fit.ci_lower[j]),
                    _fmt(fit.ci_upper[j]),
                    int(mask[j]),
                ]
            )
        else:
            rows.append([_fmt(s), _fmt(curve.v_star[i]), "", "", "", "", "", ""])
    return rows


CURVE_HEADER = ["s", "v_star", "d1", "d2", "d2_fitted", "ci_lower", "ci_upper", "in_zero_region"]


def cmd_train(args) -> int:
    if args.s is None and args.tune is None and args.kernel != LINEAR:
        print("error: provide --s or --tune (a gaussian model needs a bandwidth)",
              file=sys.stderr)
        return EXIT_USAGE
    _, X, _ = read_csv_dataset(args.data)
    config = _solver_config(args)
    tuned = None
    s = args.s
    if s is None and args.tune is not None:
        grid = _grid_from_args(args)
        if args.tune == "peak":
            curve = _tuning.sweep_objective(
                X, args.f, grid, config=config, warm_start=False, jobs=args.jobs
            )
            result = _tuning.find_peak(curve, min_run=args.min_run)
            s = result.recommended
            tuned = {"method": "peak", "s_low": result.s_low, "s_high": result.s_high}
        elif args.tune == "cv":
            s = _baselines.select_cv(X, grid).s
            tuned = {"method": "cv"}
        elif args.tune == "md":
            s = _baselines.select_md(X, args.f).s
            tuned = {"method": "md"}
        else:
            s = _baselines.select_dfn(X, grid).s
            tuned = {"method": "dfn"}
    spec = KernelSpec(kind=args.kernel, s=s if args.kernel == GAUSSIAN else None)
    model = _solver.train(X, spec, config)
    model.save(args.out)
    params = {
        "data": str(args.data),
        "kernel": args.kernel,
        "s": s,
        "f": args.f,
        "kkt_tol": args.kkt_tol,
        "max_iterations": args.max_iterations,
        "tuned": tuned,
        "out": str(args.out),
    }
    _write_manifest(args.out, "train", params, [args.data])
    print(f"trained on {X.shape[0]} rows: s={_fmt(s) if s is not None else 'n/a'} "
          f"r_squared={_fmt(model.r_squared)} -> {args.out}")
    return EXIT_OK


def cmd_tune(args) -> int:
    _, X, _ = read_csv_dataset(args.data)
    grid = _grid_from_args(args)
    curve_path = args.curve or (os.path.splitext(str(args.out))[0] + "_curve.csv")
    report = {
        "method": args.method,
        "data": str(args.data),
        "grid": {"s_min": grid.s_min, "s_max": grid.s_max, "step": grid.step},
    }
    exit_code = EXIT_OK
    if args.method == "peak":
        config = _solver_config(args)
        curve = _tuning.sweep_objective(
            X, args.f, grid, config=config, warm_start=False, jobs=args.jobs
        )
        report["f"] = args.f
        try:
            result = _tuning.find_peak(curve, min_run=args.min_run)
            fit, mask = result.fit, result.zero_mask
            report.update(
                {
                    "s": result.recommended,
                    "s_low": result.s_low,
                    "s_high": result.s_high,
                }
            )
        except NoPeakFoundError as exc:
            fit, mask = exc.fit, exc.zero_mask
            report.update({"error": str(exc), "s": None})
            exit_code = EXIT_NO_PEAK
        _write_rows(curve_path, CURVE_HEADER, _curve_rows(curve, fit, mask))
    elif args.method == "md":
        result = _baselines.select_md(X, args.f)
        report.update({"s": result.s, "f": args.f})
        curve_path = None
    else:
        select = _baselines.select_cv if args.method == "cv" else _baselines.select_dfn
        result = select(X, grid)
        report["s"] = result.s
        _write_rows(
            curve_path,
            ["s", "value"],
            [[_fmt(s), _fmt(v)] for s, v in result.curve],
        )
    if curve_path:
        report["curve_csv"] = str(curve_path)
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(args.out, "tune", report, [args.data])
    if exit_code == EXIT_OK:
        print(f"method={args.method} selected s={_fmt(report['s'])} -> {args.out}")
    else:
        print(f"method={args.method}: no zero plateau found; diagnostics in {curve_path}",
              file=sys.stderr)
    return exit_code


def cmd_score(args) -> int:
    model = _solver.load_model(args.model)
    header, Z, _ = read_csv_dataset(args.data)
    if Z.shape[0] == 0:
        _write_rows(args.out, header + ["dist_sq", "r_sq", "label"], [])
        _write_manifest(args.out, "score", {"model": str(args.model), "data": str(args.data)},
                        [args.model, args.data])
        print(f"scored 0 rows -> {args.out}")
        return EXIT_OK
    dist_sq = _solver.score_distances(model, Z)
    labels = np.where(dist_sq > model.r_squared, _solver.OUTLIER, _solver.INLIER)
    rows = [
        [_fmt(v) for v in Z[i]] + [_fmt(dist_sq[i]), _fmt(model.r_squared), labels[i]]
        for i in range(Z.shape[0])
    ]
    _write_rows(args.out, header + ["dist_sq", "r_sq", "label"], rows)
    _write_manifest(args.out, "score", {"model": str(args.model), "data": str(args.data),
                                        "out": str(args.out)}, [args.model, args.data])
    n_out = int(np.sum(labels == _solver.OUTLIER))
    print(f"scored {Z.shape[0]} rows ({n_out} outliers) -> {args.out}")
    return EXIT_OK


def cmd_grid(args) -> int:
    model = _solver.load_model(args.model)
    if model.dim != 2:
        print(f"grid scoring needs a 2-D model, this one has {model.dim} features",
              file=sys.stderr)
        return EXIT_USAGE
    if args.data:
        _, P, _ = read_csv_dataset(args.data)
        inputs = [args.model, args.data]
    else:
        P = model.support_vectors
        inputs = [args.model]
    x_min, x_max = float(P[:, 0].min()), float(P[:, 0].max())
    y_min, y_max = float(P[:, 1].min()), float(P[:, 1].max())
    pad_x = args.padding * (x_max - x_min)
    pad_y = args.padding * (y_max - y_min)
    res = args.resolution
    xs = np.linspace(x_min - pad_x, x_max + pad_x, res)
    ys = np.linspace(y_min - pad_y, y_max + pad_y, res)
    gx, gy = np.meshgrid(xs, ys)
    lattice = np.column_stack([gx.ravel(), gy.ravel()])
    dist_sq = _solver.score_distances(model, lattice)
    labels = np.where(dist_sq > model.r_squared, _solver.OUTLIER, _solver.INLIER)
    # plot-ready marker: a support vector sits within one lattice spacing
    spacing = max((xs[-1] - xs[0]) / max(res - 1, 1), (ys[-1] - ys[0]) / max(res - 1, 1))
    from scipy.spatial.distance import cdist

    near_sv = cdist(lattice, model.support_vectors).min(axis=1) <= spacing
    rows = [
        [_fmt(lattice[i, 0]), _fmt(lattice[i, 1]), _fmt(dist_sq[i]), labels[i], int(near_sv[i])]
        for i in range(lattice.shape[0])
    ]
    _write_rows(args.out, ["x", "y", "dist_sq", "label", "is_sv_nearby"], rows)
    params = {"model": str(args.model), "resolution": res, "padding": args.padding,
              "data": str(args.data) if args.data else None, "out": str(args.out)}
    _write_manifest(args.out, "grid", params, inputs)
    n_in = int(np.sum(labels == _solver.INLIER))
    print(f"grid {res}x{res}: {n_in} inlier cells of {lattice.shape[0]} -> {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    if args.full:
        vertex_counts = list(range(5, 31))
        per_count = 20
    else:
        vertex_counts = [int(v) for v in args.vertices.split(",")]
        per_count = args.per_count
    grid = _grid_from_args(args)
    report = _evaluation.polygon_study(
        vertex_counts=vertex_counts,
        polygons_per_count=per_count,
        sample_size=args.samples,
        grid=grid,
        master_seed=args.seed,
        f=args.f,
        min_run=args.min_run,
        jobs=args.jobs,
    )
    report_path = os.path.join(args.out_dir, "polygon_study.csv")
    _write_rows(
        report_path,
        ["vertex_count", "polygon_index", "seed", "s_peak_low", "s_peak_high",
         "s_recommended", "f_peak", "s_best", "f_best", "ratio"],
        [
            [r.vertex_count, r.polygon_index, r.seed, _fmt(r.s_peak_low),
             _fmt(r.s_peak_high), _fmt(r.s_recommended), _fmt(r.f_peak),
             _fmt(r.s_best), _fmt(r.f_best), _fmt(r.ratio)]
            for r in report.rows
        ],
    )
    summary_path = os.path.join(args.out_dir, "polygon_study_summary.csv")
    _write_rows(
        summary_path,
        ["vertex_count", "min", "q1", "median", "q3", "max", "mean"],
        [
            [s.vertex_count, _fmt(s.minimum), _fmt(s.q1), _fmt(s.median),
             _fmt(s.q3), _fmt(s.maximum), _fmt(s.mean)]
            for s in report.summaries
        ],
    )
    if report.failures:
        failures_path = os.path.join(args.out_dir, "polygon_study_failures.csv")
        _write_rows(
            failures_path,
            ["vertex_count", "polygon_index", "seed", "error"],
            [[fl.vertex_count, fl.polygon_index, fl.seed, fl.error] for fl in report.failures],
        )
        print(f"{len(report.failures)} polygon(s) failed; see {failures_path}", file=sys.stderr)
    params = {
        "vertex_counts": vertex_counts,
        "polygons_per_count": per_count,
        "samples": args.samples,
        "f": args.f,
        "grid": {"s_min": grid.s_min, "s_max": grid.s_max, "step": grid.step},
        "out_dir": str(args.out_dir),
    }
    _write_manifest(report_path, "simulate", params, [], seeds={"master_seed": args.seed})
    ratios = report.ratios()
    if ratios.size:
        print(f"{len(report.rows)} polygons: mean ratio {_fmt(float(ratios.mean()))}, "
              f"min {_fmt(float(ratios.min()))} -> {report_path}")
    return EXIT_OK


def cmd_shapes(args) -> int:
    X = _datagen.generate_shape(args.kind, n=args.n, noise=args.noise, seed=args.seed)
    _datagen.save_dataset(args.out, X)
    params = {"kind": args.kind, "n": X.shape[0], "noise": args.noise, "out": str(args.out)}
    _write_manifest(args.out, "shapes", params, [], seeds={"seed": args.seed})
    print(f"wrote {X.shape[0]} x {X.shape[1]} {args.kind} dataset -> {args.out}")
    return EXIT_OK


def cmd_shuttle(args) -> int:
    if not args.path:
        print("The Statlog shuttle data is not bundled; download it from:")
        print(f"  {SHUTTLE_URL}")
        print("then re-run with --path pointing at the extracted shuttle file.")
        return EXIT_OK
    X, labels = ingest_shuttle(args.path)
    counts = {int(c): int(np.sum(labels == c)) for c in np.unique(labels)}
    print(f"{X.shape[0]} rows, 9 features, class counts: {counts}")
    if args.sample_class1:
        sample = sample_shuttle_class1(X, labels, args.sample_class1, args.seed)
        if not args.out:
            print("--out is required with --sample-class1", file=sys.stderr)
            return EXIT_USAGE
        _datagen.save_dataset(args.out, sample)
        _write_manifest(
            args.out,
            "shuttle",
            {"path": str(args.path), "sample_class1": args.sample_class1, "out": str(args.out)},
            [args.path],
            seeds={"seed": args.seed},
        )
        print(f"sampled {sample.shape[0]} class-1 rows -> {args.out}")
    return EXIT_OK


def _add_grid_flags(p, s_min=0.05, s_max=8.0, s_step=0.05):
    p.add_argument("--s-min", dest="s_min", type=float, default=s_min)
    p.add_argument("--s-max", dest="s_max", type=float, default=s_max)
    p.add_argument("--s-step", dest="s_step", type=float, default=s_step)


def _add_solver_flags(p):
    p.add_argument("--f", type=float, default=0.001, help="expected outlier fraction")
    p.add_argument("--kkt-tol", dest="kkt_tol", type=float, default=1e-6)
    p.add_argument("--max-iterations", dest="max_iterations", type=int, default=100_000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svddpeak",
        description="Train and tune support vector data description models",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    default_jobs = int(os.environ.get(JOBS_ENV, "1"))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model and write it as JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--s", type=float, default=None, help="Gaussian bandwidth")
    p.add_argument("--tune", choices=["peak", "cv", "md", "dfn"], default=None,
                   help="select the bandwidth first (alternative to --s)")
    p.add_argument("--kernel", choices=[GAUSSIAN, LINEAR], default=GAUSSIAN)
    _add_solver_flags(p)
    _add_grid_flags(p)
    p.add_argument("--min-run", dest="min_run", type=int, default=_tuning.DEFAULT_MIN_RUN)
    p.add_argument("--jobs", type=int, default=default_jobs)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tune", help="select a bandwidth and export the criterion curve")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=["peak", "cv", "md", "dfn"], required=True)
    _add_solver_flags(p)
    _add_grid_flags(p)
    p.add_argument("--min-run", dest="min_run", type=int, default=_tuning.DEFAULT_MIN_RUN)
    p.add_argument("--jobs", type=int, default=default_jobs)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--curve", default=None, help="curve CSV path (default <out>_curve.csv)")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("score", help="score a CSV against a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("grid", help="score a lattice over the data bounding box")
    p.add_argument("--model", required=True)
    p.add_argument("--data", default=None, help="CSV whose bounding box frames the lattice "
                                                "(default: the model's support vectors)")
    p.add_argument("--resolution", type=int, default=200)
    p.add_argument("--padding", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("simulate", help="random-polygon F1-ratio study")
    p.add_argument("--vertices", default="5,10,15", help="comma-separated vertex counts")
    p.add_argument("--per-count", dest="per_count", type=int, default=5)
    p.add_argument("--samples", type=int, default=600)
    p.add_argument("--full", action="store_true",
                   help="paper-scale run: vertices 5..30, 20 polygons each")
    p.add_argument("--seed", type=int, default=20240501)
    _add_solver_flags(p)
    _add_grid_flags(p)
    p.add_argument("--min-run", dest="min_run", type=int, default=_tuning.DEFAULT_MIN_RUN)
    p.add_argument("--jobs", type=int, default=default_jobs)
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("shapes", help="generate a benchmark shape dataset")
    p.add_argument("--kind", choices=list(_datagen.SHAPE_KINDS), required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--noise", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_shapes)

    p = sub.add_parser("shuttle", help="ingest the UCI Statlog shuttle file")
    p.add_argument("--path", default=None)
    p.add_argument("--sample-class1", dest="sample_class1", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_shuttle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NoPeakFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_PEAK
    except (ParseError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SvddError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
