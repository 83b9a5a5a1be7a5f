"""Evaluation tests: rasterization, IoU scoring, protocol, baseline decoder."""

import numpy as np
import pytest

from lanepost.evaluation import (
    CubicPath,
    EvalConfig,
    FrameAlignmentError,
    baseline_decode,
    evaluate,
    lane_iou,
    mask_iou,
    rasterize_polyline,
)
from lanepost.probmap_io import GroundTruthFrame, ProbMapFrame

from oracles import baseline_points_oracle, iou_oracle, mask_oracle


def _vline(x, y0=287.0, y1=0.0):
    ys = np.arange(y0, y1 - 1, -1.0)
    return np.column_stack([np.full_like(ys, x), ys])


class TestRasterize:
    def test_vertical_segment_area(self):
        # length-10 vertical segment, width 2: strip of ~20 px plus caps;
        # 23 is the oracle-pinned count for this (fractional) placement
        pts = np.array([[10.9, 50.1], [10.9, 60.1]])
        mask = rasterize_polyline(pts, 2.0, 40, 80)
        assert int(mask.sum()) == 23
        assert 19 <= int(mask.sum()) <= 23

    def test_matches_oracle_exactly(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            n = int(rng.integers(2, 6))
            pts = np.column_stack([rng.uniform(0, 60, n), rng.uniform(0, 50, n)])
            width = float(rng.uniform(1, 12))
            got = rasterize_polyline(pts, width, 60, 50)
            want = mask_oracle(pts, width, 60, 50)
            np.testing.assert_array_equal(got, want)

    def test_deterministic(self):
        pts = np.array([[5.2, 40.0], [18.8, 3.0]])
        a = rasterize_polyline(pts, 4.0, 30, 50)
        b = rasterize_polyline(pts, 4.0, 30, 50)
        np.testing.assert_array_equal(a, b)

    def test_single_point_rejected(self):
        with pytest.raises(ValueError):
            rasterize_polyline(np.array([[3.0, 4.0]]), 2.0, 10, 10)


class TestIoU:
    CFG = EvalConfig()

    def test_identical_same_width_is_one(self):
        line = _vline(200.0)
        a = rasterize_polyline(line, 16.0, 800, 288)
        assert mask_iou(a, a) == 1.0

    def test_disjoint_is_zero(self):
        assert lane_iou(_vline(100.0), _vline(700.0), self.CFG, 800, 288) == 0.0

    def test_identical_geometry_ratio(self):
        line = _vline(300.0)
        got = lane_iou(line, line, self.CFG, 800, 288)
        want = iou_oracle(line, 16.0, line, 30.0, 800, 288)
        assert got == pytest.approx(want, abs=1e-12)
        # narrow strip inside the wide one: a bit over 16/30 after pixelation
        assert 0.5 < got < 0.57

    def test_swap_with_swapped_widths_is_identical(self):
        a = _vline(240.0)
        b = _vline(250.0)
        cfg = self.CFG
        swapped = EvalConfig(gt_line_width=cfg.pred_line_width,
                             pred_line_width=cfg.gt_line_width)
        assert lane_iou(a, b, cfg, 800, 288) == lane_iou(b, a, swapped, 800, 288)

    def test_width_scaling_with_frame(self):
        line = _vline(300.0)
        base = lane_iou(line, line, self.CFG, 800, 288)
        scaled_line = line * 2.0
        scaled = lane_iou(scaled_line, scaled_line, self.CFG, 1600, 576)
        assert scaled == pytest.approx(base, abs=0.02)

    def test_random_cases_match_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            n = int(rng.integers(2, 5))
            a = np.column_stack([rng.uniform(0, 200, n), np.sort(rng.uniform(0, 100, n))[::-1]])
            b = np.column_stack([rng.uniform(0, 200, n), np.sort(rng.uniform(0, 100, n))[::-1]])
            got = lane_iou(a, b, self.CFG, 200, 100)
            scale = 200 / self.CFG.eval_width
            want = iou_oracle(a, self.CFG.pred_line_width * scale,
                              b, self.CFG.gt_line_width * scale, 200, 100)
            assert got == pytest.approx(want, abs=0.02)
            assert 0.0 <= got <= 1.0


class TestEvaluate:
    CFG = EvalConfig()

    def _gt(self, frame_id, xs=(300.0, 500.0)):
        return GroundTruthFrame(frame_id, tuple(_vline(x) for x in xs))

    def test_three_of_four_matched(self):
        gts = [self._gt(0), self._gt(1)]
        preds = {
            0: [_vline(300.0), _vline(500.0)],
            1: [_vline(300.0), _vline(640.0)],  # right prediction far off
        }
        report = evaluate(preds, gts, self.CFG, 800, 288)
        assert report.n_gt == 4
        assert report.accuracy_at(0.30) == pytest.approx(3 / 4)

    def test_zero_predictions(self):
        gts = [self._gt(0)]
        report = evaluate({0: []}, gts, self.CFG, 800, 288)
        assert report.n_gt == 2
        assert all(a == 0.0 for a in report.accuracies)

    def test_identity_predictions_hit_every_threshold(self):
        gts = [self._gt(i) for i in range(3)]
        preds = {i: [_vline(300.0), _vline(500.0)] for i in range(3)}
        report = evaluate(preds, gts, self.CFG, 800, 288)
        assert all(a == 1.0 for a in report.accuracies)

    def test_threshold_sweep_shape_and_monotonicity(self):
        assert len(self.CFG.thresholds) == 21
        assert self.CFG.thresholds[0] == pytest.approx(0.30)
        assert self.CFG.thresholds[-1] == pytest.approx(0.50)
        rng = np.random.default_rng(10)
        gts = [self._gt(0)]
        preds = {0: [_vline(300.0 + rng.uniform(-12, 12)), _vline(500.0 + rng.uniform(-12, 12))]}
        report = evaluate(preds, gts, self.CFG, 800, 288)
        acc = report.accuracies
        assert all(a >= b for a, b in zip(acc, acc[1:]))

    def test_frames_without_lanes_skipped(self):
        gts = [GroundTruthFrame(5, ()), self._gt(6)]
        preds = {6: [_vline(300.0), _vline(500.0)]}  # no entry for frame 5
        report = evaluate(preds, gts, self.CFG, 800, 288)
        assert report.n_gt == 2

    def test_frame_misalignment_errors(self):
        with pytest.raises(FrameAlignmentError):
            evaluate({}, [self._gt(3)], self.CFG, 800, 288)

    def test_single_prediction_cannot_serve_both_sides(self):
        gts = [GroundTruthFrame(0, (_vline(390.0), _vline(410.0)))]
        preds = {0: [_vline(390.0)]}  # left-side prediction only
        report = evaluate(preds, gts, self.CFG, 800, 288)
        assert report.accuracy_at(0.30) == pytest.approx(0.5)

    def test_report_formats(self):
        report = evaluate({0: [_vline(300.0), _vline(500.0)]}, [self._gt(0)],
                          self.CFG, 800, 288)
        text = report.to_text()
        csv = report.to_csv()
        assert text.splitlines()[0] == "threshold n_tp n_gt accuracy"
        assert csv.splitlines()[0] == "threshold,n_tp,n_gt,accuracy"
        assert len(text.splitlines()) == 22


class TestBaselineDecode:
    def test_single_column_lane(self):
        ch = np.zeros((288, 800), dtype=np.float32)
        ch[:, 40] = 0.9
        frame = ProbMapFrame(0, ch[None])
        paths = baseline_decode(frame)
        assert len(paths) == 1
        want = baseline_points_oracle(ch, 20, 0.3)
        assert len(want) == len(paths[0].knots)
        assert {(p.y, p.x) for p in paths[0].knots} == {(y, x) for y, x, _ in want}
        poly = paths[0].polyline()
        np.testing.assert_allclose(poly[:, 0], 40.0, atol=1e-9)

    def test_all_zero_channel(self):
        frame = ProbMapFrame(0, np.zeros((1, 100, 60), dtype=np.float32))
        assert baseline_decode(frame) == []

    def test_channels_are_independent(self):
        ch0 = np.zeros((100, 200), dtype=np.float32)
        ch1 = np.zeros((100, 200), dtype=np.float32)
        ch0[:, 30] = 0.8
        ch1[:, 170] = 0.7
        frame = ProbMapFrame(0, np.stack([ch0, ch1]))
        paths = baseline_decode(frame)
        assert len(paths) == 2
        assert paths[0].x_at(50.0) == pytest.approx(30.0, abs=1e-6)
        assert paths[1].x_at(50.0) == pytest.approx(170.0, abs=1e-6)

    def test_threshold_filters_rows(self):
        ch = np.zeros((100, 50), dtype=np.float32)
        ch[99, 10] = 0.25  # below the fixed 0.3 cut
        ch[79, 10] = 0.9
        ch[59, 10] = 0.9
        frame = ProbMapFrame(0, ch[None])
        paths = baseline_decode(frame)
        assert len(paths) == 1
        ys = {p.y for p in paths[0].knots}
        assert ys == {79.0, 59.0}
