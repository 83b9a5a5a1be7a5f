"""IoU-overlap accuracy scoring of predicted lanes against ground truth.

Predicted and ground-truth polylines are rasterized as strips of fixed
width (16 px and 30 px respectively at the 800 px reference width, scaled
with the frame), and a prediction is a true positive at threshold t when
its strip overlaps the ground-truth strip with IoU above t. Accuracy is
true positives over ground-truth lanes, swept over thresholds 0.30..0.50
at 0.01 steps. Also hosts the comparison decoder that picks the per-row
argmax every twenty rows and joins the points with cubic splines.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .extraction import LanePoint
from .probmap_io import GroundTruthFrame, ProbMapFrame


class FrameAlignmentError(ValueError):
    """Predictions and ground truth do not cover the same frames."""


@dataclass(frozen=True)
class EvalConfig:
    eval_width: int = 800        # reference output width the line widths assume
    gt_line_width: float = 30.0
    pred_line_width: float = 16.0
    iou_min: float = 0.30
    iou_max: float = 0.50
    iou_step: float = 0.01

    @property
    def thresholds(self) -> np.ndarray:
        n = int(round((self.iou_max - self.iou_min) / self.iou_step)) + 1
        return np.round(self.iou_min + self.iou_step * np.arange(n), 10)


@dataclass(frozen=True)
class FrameEval:
    frame_id: int
    gt_sides: tuple[str, ...]
    matched_ious: tuple[float, ...]  # best one-to-one IoU per ground-truth lane


@dataclass(frozen=True)
class EvalReport:
    thresholds: tuple[float, ...]
    n_tp: tuple[int, ...]
    n_gt: int
    frames: tuple[FrameEval, ...]

    @property
    def accuracies(self) -> tuple[float, ...]:
        if self.n_gt == 0:
            return tuple(0.0 for _ in self.thresholds)
        return tuple(tp / self.n_gt for tp in self.n_tp)

    def accuracy_at(self, threshold: float) -> float:
        for t, acc in zip(self.thresholds, self.accuracies):
            if abs(t - threshold) < 1e-9:
                return acc
        raise KeyError(f"threshold {threshold} not evaluated")

    def to_text(self) -> str:
        lines = ["threshold n_tp n_gt accuracy"]
        for t, tp, acc in zip(self.thresholds, self.n_tp, self.accuracies):
            lines.append(f"{t:.2f} {tp} {self.n_gt} {acc:.6f}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["threshold,n_tp,n_gt,accuracy"]
        for t, tp, acc in zip(self.thresholds, self.n_tp, self.accuracies):
            lines.append(f"{t:.2f},{tp},{self.n_gt},{acc:.6f}")
        return "\n".join(lines) + "\n"


def rasterize_polyline(
    points: np.ndarray, width: float, canvas_w: int, canvas_h: int
) -> np.ndarray:
    """Boolean mask of pixels within width/2 of the polyline.

    Pixel (i, j) samples the point (x=j, y=i); the predicate is exact
    distance-to-segment, which gives round caps and joins for free.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError("polyline needs at least 2 (x, y) points")
    r = width / 2.0
    r2 = r * r
    mask = np.zeros((canvas_h, canvas_w), dtype=bool)
    for k in range(pts.shape[0] - 1):
        p0, p1 = pts[k], pts[k + 1]
        x_lo = max(0, int(np.floor(min(p0[0], p1[0]) - r)))
        x_hi = min(canvas_w - 1, int(np.ceil(max(p0[0], p1[0]) + r)))
        y_lo = max(0, int(np.floor(min(p0[1], p1[1]) - r)))
        y_hi = min(canvas_h - 1, int(np.ceil(max(p0[1], p1[1]) + r)))
        if x_lo > x_hi or y_lo > y_hi:
            continue
        xs = np.arange(x_lo, x_hi + 1, dtype=np.float64)
        ys = np.arange(y_lo, y_hi + 1, dtype=np.float64)
        gx = xs[None, :] - p0[0]
        gy = ys[:, None] - p0[1]
        vx, vy = p1[0] - p0[0], p1[1] - p0[1]
        seg_len2 = vx * vx + vy * vy
        if seg_len2 == 0.0:
            d2 = gx * gx + gy * gy
        else:
            t = np.clip((gx * vx + gy * vy) / seg_len2, 0.0, 1.0)
            d2 = (gx - t * vx) ** 2 + (gy - t * vy) ** 2
        mask[y_lo : y_hi + 1, x_lo : x_hi + 1] |= d2 <= r2
    return mask


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    union = int(np.logical_or(a, b).sum())
    if union == 0:
        return 0.0
    inter = int(np.logical_and(a, b).sum())
    return inter / union


def lane_iou(
    pred: np.ndarray,
    gt: np.ndarray,
    cfg: EvalConfig,
    frame_w: int,
    frame_h: int,
) -> float:
    """IoU of the width-expanded prediction and ground-truth strips.

    Line widths scale with the frame width so results compare uniformly
    across model output resolutions.
    """
    scale = frame_w / cfg.eval_width
    pred_mask = rasterize_polyline(pred, cfg.pred_line_width * scale, frame_w, frame_h)
    gt_mask = rasterize_polyline(gt, cfg.gt_line_width * scale, frame_w, frame_h)
    return mask_iou(pred_mask, gt_mask)


def _bottom_x(polyline: np.ndarray) -> float:
    i = int(np.argmax(polyline[:, 1]))
    return float(polyline[i, 0])


def _side_of(polyline: np.ndarray, frame_w: int) -> str:
    return "right" if _bottom_x(polyline) >= frame_w / 2.0 else "left"


def evaluate(
    preds: Mapping[int, Sequence[np.ndarray]],
    gts: Sequence[GroundTruthFrame],
    cfg: EvalConfig,
    frame_w: int,
    frame_h: int,
) -> EvalReport:
    """Score predictions against ground-truth active lanes.

    Ground-truth frames without lanes are skipped. For each remaining frame
    every active lane is matched one-to-one against same-side predictions,
    best IoU first; a matched lane counts as a true positive at every
    threshold below its IoU.
    """
    thresholds = cfg.thresholds
    matched: list[float] = []
    frames: list[FrameEval] = []
    n_gt = 0
    for gt in gts:
        actives = gt.active_lanes()
        if not actives:
            continue
        if gt.frame_id not in preds:
            raise FrameAlignmentError(f"no predictions for frame {gt.frame_id}")
        n_gt += len(actives)
        frame_preds = [np.asarray(p, dtype=np.float64) for p in preds[gt.frame_id]]
        gt_sides = [_side_of(l, frame_w) for l in actives]
        pred_sides = [_side_of(p, frame_w) for p in frame_preds]
        ious = np.zeros(len(actives))
        for side in ("left", "right"):
            g_idx = [i for i, s in enumerate(gt_sides) if s == side]
            p_idx = [i for i, s in enumerate(pred_sides) if s == side]
            pairs = []
            for gi in g_idx:
                for pi in p_idx:
                    iou = lane_iou(frame_preds[pi], actives[gi], cfg, frame_w, frame_h)
                    pairs.append((iou, gi, pi))
            pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
            used_g: set[int] = set()
            used_p: set[int] = set()
            for iou, gi, pi in pairs:
                if gi in used_g or pi in used_p:
                    continue
                used_g.add(gi)
                used_p.add(pi)
                ious[gi] = iou
        matched.extend(ious.tolist())
        frames.append(FrameEval(gt.frame_id, tuple(gt_sides), tuple(ious.tolist())))
    matched_arr = np.asarray(matched)
    n_tp = tuple(int(np.sum(matched_arr > t)) for t in thresholds)
    return EvalReport(tuple(float(t) for t in thresholds), n_tp, n_gt, tuple(frames))


class CubicPath:
    """Cubic-spline lane x(y) used by the comparison decoder."""

    def __init__(self, points: Sequence[LanePoint]):
        self.knots: tuple[LanePoint, ...] = tuple(points)
        pts = sorted(points, key=lambda p: p.y)
        ys = np.array([p.y for p in pts], dtype=np.float64)
        xs = np.array([p.x for p in pts], dtype=np.float64)
        if ys.size < 2:
            raise ValueError("need at least 2 points")
        self.y_min = float(ys[0])
        self.y_max = float(ys[-1])
        if ys.size == 2:
            self._spline = None
            self._lin = (xs, ys)
        else:
            self._spline = CubicSpline(ys, xs)
            self._lin = None

    def x_at(self, y):
        y = np.clip(np.asarray(y, dtype=np.float64), self.y_min, self.y_max)
        if self._spline is not None:
            return self._spline(y)
        xs, ys = self._lin
        return np.interp(y, ys, xs)

    def polyline(self) -> np.ndarray:
        """Sample at every integer row covered by the points, bottom first."""
        ys = np.arange(np.ceil(self.y_max), np.floor(self.y_min) - 1, -1.0)
        return np.column_stack([np.asarray(self.x_at(ys)), ys])


def baseline_decode(
    frame: ProbMapFrame, row_stride: int = 20, threshold: float = 0.3
) -> list[CubicPath]:
    """Comparison decoder: per-row argmax every ``row_stride`` rows.

    Each channel independently contributes the highest-confidence column of
    every sampled row (kept when above a fixed threshold), joined by a cubic
    spline. Channels with fewer than two selected points yield nothing.
    """
    h = frame.height
    rows = np.arange(h - 1, -1, -row_stride)
    out = []
    for ch in frame.channels:
        cols = np.argmax(ch[rows], axis=1)
        confs = ch[rows, cols]
        pts = [
            LanePoint(float(x), float(y), float(c))
            for y, x, c in zip(rows, cols, confs)
            if c > threshold
        ]
        if len(pts) >= 2:
            out.append(CubicPath(pts))
    return out
