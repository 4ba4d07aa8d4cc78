from __future__ import annotations

import numpy as np
import pytest

from chanest.dataset import generate_dataset, read_dataset, write_predictions
from chanest.evaluate import (
    Estimator,
    EvalPoint,
    ds_sweep,
    emit_report,
    evaluate_point,
    generalization_grid,
    get_estimator,
    mse_vs_snr,
    plot_report,
    read_report,
    score_predictions,
)
from chanest.link import DEFAULT_FRAME, DEFAULT_PATTERN
from chanest.profiles import ChannelSpec, builtin_profile


def _ls():
    return get_estimator("ls", DEFAULT_PATTERN, DEFAULT_FRAME)


class TestGetEstimator:
    def test_ids(self):
        assert _ls().id == "ls"
        assert get_estimator("mmse", DEFAULT_PATTERN, DEFAULT_FRAME).id == "mmse"
        assert (
            get_estimator("mmse:designed", DEFAULT_PATTERN, DEFAULT_FRAME).id
            == "mmse:designed"
        )

    def test_unknown_id(self):
        with pytest.raises(ValueError):
            get_estimator("kalman", DEFAULT_PATTERN, DEFAULT_FRAME)
        with pytest.raises(ValueError):
            get_estimator("mmse:imaginary-channel", DEFAULT_PATTERN, DEFAULT_FRAME)

    def test_estimator_output_shape(self):
        y = np.ones((72, 14), dtype=complex)
        pdp = builtin_profile("epa")
        for est_id in ("ls", "mmse", "mmse:designed"):
            est = get_estimator(est_id, DEFAULT_PATTERN, DEFAULT_FRAME)
            assert est.fn(y, 10.0, pdp).shape == (72, 14)


class TestEvaluatePoint:
    def test_deterministic(self):
        pdp = builtin_profile("epa")
        a = evaluate_point(_ls(), pdp, "epa", 10.0, 20, 0)
        b = evaluate_point(_ls(), pdp, "epa", 10.0, 20, 0)
        assert a == b

    def test_thread_invariance(self):
        pdp = builtin_profile("etu")
        a = evaluate_point(_ls(), pdp, "etu", 5.0, 20, 0, threads=1)
        b = evaluate_point(_ls(), pdp, "etu", 5.0, 20, 0, threads=4)
        assert a == b

    def test_seed_changes_result(self):
        pdp = builtin_profile("epa")
        a = evaluate_point(_ls(), pdp, "epa", 10.0, 20, 0)
        b = evaluate_point(_ls(), pdp, "epa", 10.0, 20, 1)
        assert a.mse != b.mse

    def test_draws_are_estimator_independent(self):
        # two estimators with different ids must see identical channel draws
        pdp = builtin_profile("epa")
        clone = Estimator("ls-clone", _ls().fn)
        a = evaluate_point(_ls(), pdp, "epa", 10.0, 25, 0)
        b = evaluate_point(clone, pdp, "epa", 10.0, 25, 0)
        assert a.mse == b.mse
        assert b.estimator == "ls-clone"

    def test_noiseless_static_flat_is_exact(self):
        pdp = builtin_profile("flat")
        point = evaluate_point(
            _ls(), pdp, "flat", np.inf, 10, 0, doppler_range=(0.0, 0.0)
        )
        assert point.mse == pytest.approx(0.0, abs=1e-24)

    def test_point_metadata(self):
        pdp = builtin_profile("eva")
        point = evaluate_point(_ls(), pdp, "eva", 15.0, 8, 3, ds_ns=300.0)
        assert point == EvalPoint("ls", "eva", 15.0, 300.0, 8, point.mse, point.stderr)
        assert point.stderr > 0

    def test_td_path_runs(self):
        pdp = builtin_profile("designed")
        point = evaluate_point(_ls(), pdp, "designed", 20.0, 5, 0, use_td=True)
        assert np.isfinite(point.mse)

    def test_rejects_zero_n(self):
        with pytest.raises(ValueError):
            evaluate_point(_ls(), builtin_profile("flat"), "flat", 10.0, 0, 0)


class TestMseVsSnr:
    def test_grid_order_and_monotonicity(self):
        points = mse_vs_snr("ls", ["flat", "epa"], [0, 10, 20], 40, 0, threads=4)
        assert [(p.channel, p.snr_db) for p in points] == [
            ("flat", 0.0), ("flat", 10.0), ("flat", 20.0),
            ("epa", 0.0), ("epa", 10.0), ("epa", 20.0),
        ]
        flat = [p.mse for p in points[:3]]
        assert flat[0] > flat[1] > flat[2]

    def test_accepts_profile_objects(self):
        pdp = builtin_profile("epa")
        points = mse_vs_snr("ls", [pdp], [10], 5, 0)
        assert points[0].channel == "epa"


class TestGeneralizationGrid:
    def test_mmse_grid_matched_beats_mismatched(self):
        points = generalization_grid(["epa", "etu"], ["epa", "etu"], 15.0, 60, 0, threads=4)
        table = {(p.estimator, p.channel): p.mse for p in points}
        assert len(table) == 4
        assert table[("mmse:epa", "epa")] < table[("mmse:epa", "etu")]
        assert table[("mmse:etu", "etu")] < table[("mmse:epa", "etu")]

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            generalization_grid(["epa"], ["epa"], 15.0, 4, 0, family="nn")

    def test_predictions_family_requires_dirs(self):
        with pytest.raises(ValueError):
            generalization_grid(["epa"], ["epa"], 15.0, 4, 0, family="predictions")

    def test_predictions_family(self, tmp_path):
        datasets = tmp_path / "datasets"
        preds = tmp_path / "preds"
        preds.mkdir()
        for name in ("flat", "epa"):
            generate_dataset(
                ChannelSpec(builtin_profile(name)), DEFAULT_PATTERN, DEFAULT_FRAME,
                6, (15.0, 15.0), (0.0, 97.0), 9, datasets / name, val_fraction=0.0,
            )
        for train in ("flat", "epa"):
            for test in ("flat", "epa"):
                _, samples = read_dataset(datasets / test)
                write_predictions(
                    preds / f"{train}__{test}.bin", (s.label for s in samples), 6
                )
        points = generalization_grid(
            ["flat", "epa"], ["flat", "epa"], 15.0, 6, 0,
            family="predictions", predictions_dir=preds, datasets_dir=datasets,
        )
        assert len(points) == 4
        for p in points:
            assert p.mse == 0.0  # predictions were the labels themselves
            assert p.estimator.startswith("predictions:")
            assert p.n == 6

    def test_predictions_family_missing_cell(self, tmp_path):
        (tmp_path / "preds").mkdir()
        with pytest.raises(FileNotFoundError, match="cell"):
            generalization_grid(
                ["flat"], ["flat"], 15.0, 4, 0, family="predictions",
                predictions_dir=tmp_path / "preds", datasets_dir=tmp_path / "datasets",
            )


class TestDsSweep:
    def test_points_and_ids(self):
        points = ds_sweep("ls", ["cdl-a"], [100.0, 300.0], 20.0, 10, 0, threads=4)
        assert [p.ds_ns for p in points] == [100.0, 300.0]
        assert all(p.channel == "CDL-A" for p in points)
        assert all(np.isfinite(p.mse) for p in points)


class TestScorePredictions:
    def test_mse_of_known_offset(self, tmp_path):
        ds = tmp_path / "ds"
        generate_dataset(
            ChannelSpec(builtin_profile("flat")), DEFAULT_PATTERN, DEFAULT_FRAME,
            4, (10.0, 20.0), (0.0, 0.0), 5, ds, val_fraction=0.0,
        )
        _, samples = read_dataset(ds)
        shifted = [s.label + np.float32(1.0) for s in samples]
        path = tmp_path / "p.bin"
        write_predictions(path, shifted, 4)
        point = score_predictions(ds, path)
        # both planes shifted by 1: squared error 2 per resource element
        assert point.mse == pytest.approx(2.0, rel=1e-6)
        assert point.snr_db == 15.0  # midpoint of the dataset's range
        assert point.channel == "flat"

    def test_count_mismatch(self, tmp_path):
        ds = tmp_path / "ds"
        generate_dataset(
            ChannelSpec(builtin_profile("flat")), DEFAULT_PATTERN, DEFAULT_FRAME,
            4, (10.0, 20.0), (0.0, 0.0), 5, ds, val_fraction=0.0,
        )
        _, samples = read_dataset(ds)
        two = [s.label for s in list(samples)[:2]]
        path = tmp_path / "p.bin"
        write_predictions(path, two, 2)
        with pytest.raises(ValueError):
            score_predictions(ds, path)


class TestReports:
    POINTS = [
        EvalPoint("ls", "epa", 10.0, None, 50, 0.123456789012345, 0.001),
        EvalPoint("mmse", "etu", 20.0, 300.0, 50, 6.7e-3, 2.5e-4),
    ]

    def test_csv_round_trip(self, tmp_path):
        path = tmp_path / "r.csv"
        emit_report(self.POINTS, path)
        got = read_report(path)
        assert got == self.POINTS  # repr() floats survive the round trip exactly

    def test_csv_layout(self, tmp_path):
        path = tmp_path / "r.csv"
        emit_report(self.POINTS, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "estimator,channel,snr_db,ds_ns,n,mse,stderr"
        assert lines[1].startswith("ls,epa,10.0,,50,")

    def test_empty_table(self, tmp_path):
        with pytest.raises(ValueError):
            emit_report([], tmp_path / "r.csv")

    def test_svg_written_and_deterministic(self, tmp_path):
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        plot_report(self.POINTS, a)
        plot_report(self.POINTS, b)
        text = a.read_text()
        assert text.startswith("<?xml")
        assert a.read_bytes() == b.read_bytes()

    def test_emit_with_svg(self, tmp_path):
        emit_report(self.POINTS, tmp_path / "r.csv", tmp_path / "r.svg")
        assert (tmp_path / "r.svg").is_file()
