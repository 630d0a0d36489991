import csv
import json
import math

import numpy as np
import pytest

from svddpeak.cli import (
    EXIT_NO_PEAK,
    EXIT_OK,
    EXIT_USAGE,
    ingest_shuttle,
    main,
    read_csv_dataset,
    sample_shuttle_class1,
)
from svddpeak.datagen import generate_shape, save_dataset
from svddpeak.errors import ParseError


@pytest.fixture
def two_point_csv(tmp_path):
    path = tmp_path / "two_point.csv"
    save_dataset(path, np.array([[0.0, 0.0], [2.0, 0.0]]))
    return path


@pytest.fixture
def one_point_csv(tmp_path):
    path = tmp_path / "one_point.csv"
    save_dataset(path, np.array([[1.0, 2.0]]))
    return path


@pytest.fixture(scope="module")
def banana_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "banana.csv"
    save_dataset(path, generate_shape("banana", seed=11))
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestTrain:
    def test_two_point_model_file(self, two_point_csv, tmp_path):
        out = tmp_path / "model.json"
        code = main(["train", "--data", str(two_point_csv), "--s", "2", "--f", "0.1",
                     "--out", str(out)])
        assert code == EXIT_OK
        payload = json.loads(out.read_text())
        assert payload["kernel_kind"] == "gaussian"
        assert payload["s"] == 2.0
        np.testing.assert_allclose(payload["alphas"], [0.5, 0.5], atol=1e-8)
        manifest = json.loads((tmp_path / "model.json.manifest.json").read_text())
        assert manifest["command"] == "train"
        assert str(two_point_csv) in manifest["inputs"]

    def test_single_point_zero_radius(self, one_point_csv, tmp_path):
        out = tmp_path / "model.json"
        code = main(["train", "--data", str(one_point_csv), "--s", "1", "--f", "0.5",
                     "--out", str(out)])
        assert code == EXIT_OK
        assert json.loads(out.read_text())["r_squared"] == 0.0

    def test_banana_fixed_bandwidth(self, banana_csv, tmp_path):
        out = tmp_path / "banana_model.json"
        code = main(["train", "--data", str(banana_csv), "--s", "0.7", "--f", "0.001",
                     "--out", str(out)])
        assert code == EXIT_OK
        payload = json.loads(out.read_text())
        assert payload["kernel_kind"] == "gaussian"
        assert payload["s"] == 0.7

    def test_missing_bandwidth_is_usage_error(self, two_point_csv, tmp_path):
        code = main(["train", "--data", str(two_point_csv), "--f", "0.1",
                     "--out", str(tmp_path / "m.json")])
        assert code == EXIT_USAGE

    def test_reproducible_byte_identical(self, two_point_csv, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            assert main(["train", "--data", str(two_point_csv), "--s", "2", "--f", "0.1",
                         "--out", str(out)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()


class TestTune:
    def test_md_two_point(self, two_point_csv, tmp_path):
        out = tmp_path / "report.json"
        code = main(["tune", "--data", str(two_point_csv), "--method", "md",
                     "--f", "0.001", "--out", str(out)])
        assert code == EXIT_OK
        report = json.loads(out.read_text())
        assert report["s"] == pytest.approx(2.0 / math.sqrt(math.log(2.998)), abs=1e-9)

    def test_cv_equidistant_ties_to_s_min(self, tmp_path):
        data = tmp_path / "tri.csv"
        save_dataset(data, np.eye(3))
        out = tmp_path / "report.json"
        code = main(["tune", "--data", str(data), "--method", "cv",
                     "--s-min", "0.1", "--s-max", "2.0", "--s-step", "0.1",
                     "--out", str(out)])
        assert code == EXIT_OK
        report = json.loads(out.read_text())
        assert report["s"] == pytest.approx(0.1)
        curve = read_rows(report["curve_csv"])
        assert curve[0] == ["s", "value"]
        assert len(curve) == 1 + 20

    def test_peak_writes_curve_csv(self, banana_csv, tmp_path):
        out = tmp_path / "peak.json"
        code = main(["tune", "--data", str(banana_csv), "--method", "peak",
                     "--f", "0.001", "--out", str(out)])
        assert code == EXIT_OK
        report = json.loads(out.read_text())
        assert report["s_low"] <= report["s"] <= report["s_high"]
        rows = read_rows(report["curve_csv"])
        assert rows[0] == ["s", "v_star", "d1", "d2", "d2_fitted",
                           "ci_lower", "ci_upper", "in_zero_region"]
        assert len(rows) == 1 + 160
        # endpoints have no derivative estimates
        assert rows[1][2] == "" and rows[-1][2] == ""
        assert rows[2][2] != ""
        in_zero = [r[7] for r in rows[1:] if r[7] != ""]
        assert set(in_zero) <= {"0", "1"} and "1" in in_zero

    def test_peak_failure_exit_code_with_diagnostics(self, tmp_path):
        # a tight cluster plus one far outlier keeps the curve steep: with a
        # huge min_run nothing qualifies, but diagnostics must still land
        rng = np.random.default_rng(5)
        data = tmp_path / "hard.csv"
        save_dataset(data, rng.normal(size=(40, 2)))
        out = tmp_path / "peak.json"
        code = main(["tune", "--data", str(data), "--method", "peak", "--f", "0.01",
                     "--s-min", "0.5", "--s-max", "3.0", "--s-step", "0.1",
                     "--min-run", "1000", "--out", str(out)])
        assert code == EXIT_NO_PEAK
        report = json.loads(out.read_text())
        assert report["s"] is None and "error" in report
        assert len(read_rows(report["curve_csv"])) == 1 + 26


class TestScoreAndGrid:
    @pytest.fixture
    def model_path(self, two_point_csv, tmp_path):
        out = tmp_path / "model.json"
        main(["train", "--data", str(two_point_csv), "--s", "2", "--f", "0.1",
              "--out", str(out)])
        return out

    def test_score_boundary_and_far_point(self, model_path, two_point_csv, tmp_path):
        score_in = tmp_path / "score_in.csv"
        save_dataset(score_in, np.array([[0.0, 0.0], [100.0, 0.0]]))
        out = tmp_path / "scored.csv"
        code = main(["score", "--model", str(model_path), "--data", str(score_in),
                     "--out", str(out)])
        assert code == EXIT_OK
        rows = read_rows(out)
        assert rows[0] == ["x1", "x2", "dist_sq", "r_sq", "label"]
        boundary = rows[1]
        assert abs(float(boundary[2]) - float(boundary[3])) < 1e-6
        assert boundary[4] == "inlier"
        assert rows[2][4] == "outlier"

    def test_score_empty_file(self, model_path, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("x1,x2\n")
        out = tmp_path / "scored.csv"
        assert main(["score", "--model", str(model_path), "--data", str(empty),
                     "--out", str(out)]) == EXIT_OK
        assert read_rows(out) == [["x1", "x2", "dist_sq", "r_sq", "label"]]

    def test_score_dimension_mismatch_usage_error(self, model_path, tmp_path):
        bad = tmp_path / "bad.csv"
        save_dataset(bad, np.zeros((2, 3)))
        assert main(["score", "--model", str(model_path), "--data", str(bad),
                     "--out", str(tmp_path / "s.csv")]) == EXIT_USAGE

    def test_grid_resolution_and_labels(self, model_path, two_point_csv, tmp_path):
        out = tmp_path / "grid.csv"
        code = main(["grid", "--model", str(model_path), "--data", str(two_point_csv),
                     "--resolution", "50", "--out", str(out)])
        assert code == EXIT_OK
        rows = read_rows(out)
        assert rows[0] == ["x", "y", "dist_sq", "label", "is_sv_nearby"]
        assert len(rows) == 1 + 2500
        labels = {r[3] for r in rows[1:]}
        assert labels == {"inlier", "outlier"}
        assert any(r[4] == "1" for r in rows[1:])

    def test_grid_rejects_non_2d_model(self, tmp_path):
        data = tmp_path / "three_col.csv"
        save_dataset(data, np.random.default_rng(0).normal(size=(5, 3)))
        model = tmp_path / "m.json"
        main(["train", "--data", str(data), "--s", "1", "--f", "0.2", "--out", str(model)])
        assert main(["grid", "--model", str(model),
                     "--out", str(tmp_path / "g.csv")]) == EXIT_USAGE


class TestSimulate:
    def test_desk_scale_outputs(self, tmp_path):
        out_dir = tmp_path / "study"
        code = main(["simulate", "--vertices", "5", "--per-count", "1",
                     "--samples", "100", "--seed", "7", "--out-dir", str(out_dir)])
        assert code == EXIT_OK
        rows = read_rows(out_dir / "polygon_study.csv")
        assert rows[0][:3] == ["vertex_count", "polygon_index", "seed"]
        assert len(rows) == 2
        ratio = float(rows[1][-1])
        assert 0.0 <= ratio <= 1.0
        summary = read_rows(out_dir / "polygon_study_summary.csv")
        assert summary[0] == ["vertex_count", "min", "q1", "median", "q3", "max", "mean"]

    def test_failed_polygons_recorded_not_dropped(self, tmp_path):
        # a grid too coarse to host a 3-point plateau: the polygon lands in
        # the failures file instead of vanishing
        out_dir = tmp_path / "study"
        code = main(["simulate", "--vertices", "5", "--per-count", "1",
                     "--samples", "100", "--s-min", "0.3", "--s-max", "3.0",
                     "--s-step", "0.15", "--seed", "7", "--out-dir", str(out_dir)])
        assert code == EXIT_OK
        failures = read_rows(out_dir / "polygon_study_failures.csv")
        assert failures[0] == ["vertex_count", "polygon_index", "seed", "error"]
        assert len(failures) == 2
        assert len(read_rows(out_dir / "polygon_study.csv")) == 1


class TestShapes:
    def test_banana_roundtrip(self, tmp_path):
        out = tmp_path / "banana.csv"
        code = main(["shapes", "--kind", "banana", "--seed", "3", "--out", str(out)])
        assert code == EXIT_OK
        header, X, labels = read_csv_dataset(out)
        assert header == ["x1", "x2"]
        assert X.shape == (267, 2)
        assert labels is None
        np.testing.assert_allclose(X, generate_shape("banana", seed=3), atol=1e-9)


class TestShuttle:
    def make_shuttle_file(self, tmp_path, rows):
        path = tmp_path / "shuttle.trn"
        path.write_text("\n".join(" ".join(str(v) for v in row) for row in rows) + "\n")
        return path

    def test_ingest_and_sample(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = []
        for i in range(50):
            cls = 1 if i < 40 else 2  # ~80% class one
            rows.append(list(rng.integers(-50, 120, 9)) + [cls])
        path = self.make_shuttle_file(tmp_path, rows)
        X, labels = ingest_shuttle(path)
        assert X.shape == (50, 9)
        assert set(np.unique(labels)) == {1, 2}
        assert np.mean(labels == 1) == pytest.approx(0.8)
        sample = sample_shuttle_class1(X, labels, 10, seed=4)
        assert sample.shape == (10, 9)
        again = sample_shuttle_class1(X, labels, 10, seed=4)
        np.testing.assert_array_equal(sample, again)

    def test_malformed_row_names_line(self, tmp_path):
        path = tmp_path / "bad.trn"
        path.write_text("1 2 3 4 5 6 7 8 9 1\n1 2 3\n")
        with pytest.raises(ParseError) as err:
            ingest_shuttle(path)
        assert err.value.line_number == 2
        assert "line 2" in str(err.value)

    def test_no_path_prints_location(self, capsys):
        assert main(["shuttle"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "archive.ics.uci.edu" in out

    def test_sample_flag_writes_csv(self, tmp_path):
        rng = np.random.default_rng(1)
        rows = [list(rng.integers(0, 100, 9)) + [1] for _ in range(30)]
        path = self.make_shuttle_file(tmp_path, rows)
        out = tmp_path / "sample.csv"
        code = main(["shuttle", "--path", str(path), "--sample-class1", "5",
                     "--seed", "2", "--out", str(out)])
        assert code == EXIT_OK
        _, X, _ = read_csv_dataset(out)
        assert X.shape == (5, 9)


def test_jobs_env_var_sets_default(monkeypatch):
    from svddpeak.cli import build_parser

    monkeypatch.setenv("SVDD_PEAK_JOBS", "3")
    args = build_parser().parse_args(
        ["tune", "--data", "x.csv", "--method", "peak", "--out", "r.json"]
    )
    assert args.jobs == 3


class TestCsvIngestion:
    def test_round_trip_identity(self, tmp_path, rng):
        X = rng.normal(size=(15, 4))
        path = tmp_path / "data.csv"
        save_dataset(path, X)
        header, Y, labels = read_csv_dataset(path)
        assert header == ["x1", "x2", "x3", "x4"]
        np.testing.assert_allclose(Y, X, rtol=1e-10)

    def test_label_column_split(self, tmp_path, rng):
        X = rng.normal(size=(8, 2))
        labels = rng.integers(0, 2, 8)
        path = tmp_path / "data.csv"
        save_dataset(path, X, labels)
        _, Y, got = read_csv_dataset(path)
        assert Y.shape == (8, 2)
        np.testing.assert_array_equal(got, labels)

    def test_malformed_cell_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x1,x2\n1.0,2.0\noops,3.0\n")
        with pytest.raises(ParseError) as err:
            read_csv_dataset(path)
        assert err.value.line_number == 3

    def test_missing_file_is_usage_error(self, tmp_path):
        assert main(["score", "--model", str(tmp_path / "nope.json"),
                     "--data", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "out.csv")]) == EXIT_USAGE
