"""Per-frame pipeline and batch dataset runner.

A frame passes through extract -> classify -> construct -> track -> select.
Matching uses each lane's best provisional geometry (spline for curve
candidates, fitted line otherwise); the stored kind is settled only after
the curve flag is corroborated against the matched track's history.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, fields, is_dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import probmap_io
from .backend import available_backends, get_backend
from .evaluation import (
    CubicPath,
    EvalConfig,
    EvalReport,
    FrameEval,
    baseline_decode,
    evaluate,
)
from .extraction import ExtractionConfig, LanePoint, extract_lane_points
from .lane_model import Classification, classify, corroborate_curve
from .probmap_io import (
    DataFormatError,
    GroundTruthFrame,
    LaneRecord,
    ManifestClip,
    ProbMapFrame,
    load_manifest,
    load_manifest_frame,
    load_manifest_gt,
    write_lane_output,
)
from .regression import (
    FitDegenerateError,
    QuadSpline,
    StraightLine,
    VerticalLaneError,
    build_spline,
    fit_straight,
)
from .tracker import Observation, TrackedLane, Tracker, TrackerConfig

MODE_FULL = "full"
MODE_BASELINE = "baseline"


@dataclass
class PipelineConfig:
    extraction: ExtractionConfig = field(default_factory=ExtractionConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    n: int = 3                 # minimum points for a straight lane
    curve_votes: int = 2       # curve flags needed within the window
    curve_window: int = 3      # frames participating in curve corroboration
    kappa: float = 2.5         # outlier cut in units of RMS x-distance
    min_abs_beta1: float = 1e-6  # gradients below this are horizontal noise
    mode: str = MODE_FULL
    backend: str = "auto"
    baseline_row_stride: int = 20
    baseline_threshold: float = 0.3

    def __post_init__(self):
        if self.mode not in (MODE_FULL, MODE_BASELINE):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.n < 2 or self.curve_votes < 1 or self.curve_window < 1:
            raise ValueError("invalid classifier constants")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        kwargs = dict(data)
        for key, sub_cls in (
            ("extraction", ExtractionConfig),
            ("tracker", TrackerConfig),
            ("evaluation", EvalConfig),
        ):
            if key in kwargs and isinstance(kwargs[key], dict):
                kwargs[key] = sub_cls(**kwargs[key])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        def as_plain(obj):
            if is_dataclass(obj) and not isinstance(obj, type):
                return {f.name: as_plain(getattr(obj, f.name)) for f in fields(obj)}
            return obj

        return as_plain(self)

    def with_override(self, dotted_key: str, raw_value: str) -> "PipelineConfig":
        """Apply one 'section.key=value' style override with type coercion."""
        parts = dotted_key.split(".")
        target = self
        if len(parts) == 2:
            section = getattr(self, parts[0], None)
            if not is_dataclass(section):
                raise KeyError(f"unknown config section {parts[0]!r}")
            target = section
        elif len(parts) != 1:
            raise KeyError(f"bad override key {dotted_key!r}")
        name = parts[-1]
        try:
            current = getattr(target, name)
        except AttributeError as exc:
            raise KeyError(f"unknown config key {dotted_key!r}") from exc
        value = _coerce(raw_value, current)
        if target is self:
            return replace(self, **{name: value})
        return replace(self, **{parts[0]: replace(target, **{name: value})})


def _coerce(raw: str, current):
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    data = json.loads(Path(path).read_text())
    return PipelineConfig.from_dict(data)


@dataclass(frozen=True)
class OutputLane:
    lane_id: int
    kind: str  # "straight" or "curved"
    geometry: object
    polyline: np.ndarray  # (h, 2) samples at every image row, bottom first

    def to_record(self) -> LaneRecord:
        if self.kind == "straight":
            line: StraightLine = self.geometry
            if line.is_vertical:
                return LaneRecord(self.lane_id, "straight", self.polyline,
                                  vertical_x=line.x_intercept)
            return LaneRecord(self.lane_id, "straight", self.polyline,
                              beta0=line.beta0, beta1=line.beta1)
        knots = getattr(self.geometry, "knots", ())
        arr = np.array([[p.x, p.y, p.confidence] for p in knots], dtype=np.float64)
        return LaneRecord(self.lane_id, "curved", self.polyline, knots=arr)


@dataclass(frozen=True)
class FrameResult:
    frame_id: int
    left: OutputLane | None
    right: OutputLane | None
    extra: tuple[OutputLane, ...] = ()  # baseline mode emits every decoded lane
    timings_us: dict[str, float] = field(default_factory=dict)

    def lanes(self) -> list[OutputLane]:
        out = [l for l in (self.left, self.right) if l is not None]
        out.extend(self.extra)
        return out

    def pred_polylines(self) -> list[np.ndarray]:
        return [l.polyline for l in self.lanes()]


@dataclass(frozen=True)
class _Constructed:
    points: tuple[LanePoint, ...]
    curve_candidate: bool
    line: StraightLine
    spline: QuadSpline | None
    rms_confidence: float
    active_hint: bool
    channel_id: int

    @property
    def match_geometry(self):
        return self.spline if (self.curve_candidate and self.spline is not None) else self.line


def _construct_lane(
    points: Sequence[LanePoint], channel_id: int, hint: bool, cfg: PipelineConfig
) -> _Constructed | None:
    if len(points) < cfg.n:
        return None
    cls = classify(points, cfg.n)
    if cls is Classification.TOO_FEW_POINTS:
        return None
    curve_flag = cls is Classification.CURVED_CANDIDATE
    try:
        fit = fit_straight(points, cfg.kappa)
    except VerticalLaneError as exc:
        line = StraightLine.vertical(exc.x0)
    except FitDegenerateError:
        return None
    else:
        if abs(fit.beta1) < cfg.min_abs_beta1:
            return None  # active lanes are never horizontal in image space
        line = fit.line()
    spline = None
    if curve_flag:
        try:
            spline = build_spline(points)
        except (FitDegenerateError, ValueError):
            curve_flag = False
    conf = np.array([p.confidence for p in points])
    rms_conf = float(np.sqrt(np.mean(conf * conf)))
    return _Constructed(tuple(points), curve_flag, line, spline, rms_conf, hint, channel_id)


def _render_rows(height: int) -> np.ndarray:
    return np.arange(height - 1, -1, -1, dtype=np.float64)


def _output_from_track(trk: TrackedLane, height: int) -> OutputLane:
    ys = _render_rows(height)
    xs = np.asarray(trk.params.x_at(ys), dtype=np.float64)
    kind = "curved" if isinstance(trk.params, QuadSpline) else "straight"
    return OutputLane(trk.lane_id, kind, trk.params, np.column_stack([xs, ys]))


def process_frame(
    frame: ProbMapFrame,
    tracker: Tracker,
    cfg: PipelineConfig,
    hints: Sequence[bool] | None = None,
) -> FrameResult:
    """Run the full pipeline on one frame, mutating the tracker state."""
    h, w = frame.height, frame.width
    t0 = time.perf_counter_ns()
    per_channel = [
        extract_lane_points(frame.channels[i], cfg.extraction, cfg.backend)
        for i in range(frame.num_channels)
    ]
    t1 = time.perf_counter_ns()
    constructed = []
    for i, points in enumerate(per_channel):
        hint = bool(hints[i]) if hints is not None and i < len(hints) else True
        lane = _construct_lane(points, i, hint, cfg)
        if lane is not None:
            constructed.append(lane)
    t2 = time.perf_counter_ns()
    observations = [
        Observation(c.match_geometry, c.rms_confidence, len(c.points),
                    c.active_hint, c.curve_candidate)
        for c in constructed
    ]
    assignment = tracker.match(observations)
    final_geoms = []
    for i, c in enumerate(constructed):
        history = tracker.history_for(assignment, i)
        corroborated = corroborate_curve(
            c.curve_candidate, history, cfg.curve_votes, cfg.curve_window
        )
        final_geoms.append(c.spline if (corroborated and c.spline is not None) else c.line)
    tracker.commit(observations, assignment, final_geoms)
    left_trk, right_trk = tracker.select_active()
    t3 = time.perf_counter_ns()
    left = _output_from_track(left_trk, h) if left_trk else None
    right = _output_from_track(right_trk, h) if right_trk else None
    t4 = time.perf_counter_ns()
    timings = {
        "extract_us": (t1 - t0) / 1000.0,
        "construct_us": (t2 - t1) / 1000.0,
        "track_us": (t3 - t2) / 1000.0,
        "render_us": (t4 - t3) / 1000.0,
        "total_us": (t4 - t0) / 1000.0,
    }
    return FrameResult(frame.frame_id, left, right, timings_us=timings)


def process_frame_baseline(frame: ProbMapFrame, cfg: PipelineConfig) -> FrameResult:
    """Comparison decoder: argmax every twenty rows, cubic-spline joins."""
    t0 = time.perf_counter_ns()
    paths = baseline_decode(frame, cfg.baseline_row_stride, cfg.baseline_threshold)
    lanes = [OutputLane(i, "curved", path, path.polyline()) for i, path in enumerate(paths)]
    t1 = time.perf_counter_ns()
    timings = {"extract_us": 0.0, "construct_us": 0.0,
               "track_us": 0.0, "render_us": 0.0, "total_us": (t1 - t0) / 1000.0}
    return FrameResult(frame.frame_id, None, None, tuple(lanes), timings)


@dataclass
class RunSummary:
    out_dir: Path
    frames_processed: int
    clips: int
    report: EvalReport | None
    timing_stats: dict[str, float]


def _timing_stats(samples_us: list[float]) -> dict[str, float]:
    if not samples_us:
        return {"frames": 0}
    arr = np.asarray(samples_us)
    return {
        "frames": int(arr.size),
        "mean_ms": float(arr.mean() / 1000.0),
        "p50_ms": float(np.percentile(arr, 50) / 1000.0),
        "p99_ms": float(np.percentile(arr, 99) / 1000.0),
        "std_ms": float(arr.std() / 1000.0),
    }


def merge_reports(reports: Sequence[EvalReport]) -> EvalReport | None:
    reports = [r for r in reports if r is not None]
    if not reports:
        return None
    thresholds = reports[0].thresholds
    for r in reports[1:]:
        if r.thresholds != thresholds:
            raise ValueError("cannot merge reports with different thresholds")
    n_tp = tuple(sum(r.n_tp[i] for r in reports) for i in range(len(thresholds)))
    n_gt = sum(r.n_gt for r in reports)
    frames: list[FrameEval] = []
    for r in reports:
        frames.extend(r.frames)
    return EvalReport(thresholds, n_tp, n_gt, tuple(frames))


def run_dataset(
    manifest_path: str | Path,
    cfg: PipelineConfig,
    out_dir: str | Path,
    overlay: bool = False,
) -> RunSummary:
    """Process every clip in a manifest; write lane files, report, timings."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    clips = load_manifest(manifest_path)
    totals: list[float] = []
    reports: list[EvalReport] = []
    frames_processed = 0
    for clip in clips:
        clip_dir = out_dir / clip.name
        clip_dir.mkdir(parents=True, exist_ok=True)
        preds: dict[int, list[np.ndarray]] = {}
        gts: list[GroundTruthFrame] = []
        tracker: Tracker | None = None
        dims: tuple[int, int] | None = None
        for entry in clip.frames:
            frame = load_manifest_frame(entry)
            if dims is None:
                dims = (frame.width, frame.height)
                tracker = Tracker(cfg.tracker, frame.width, frame.height, cfg.curve_window)
            elif dims != (frame.width, frame.height):
                raise DataFormatError(
                    f"clip {clip.name}: frame {entry.frame_id} dims "
                    f"{frame.width}x{frame.height} != clip dims {dims[0]}x{dims[1]}"
                )
            if cfg.mode == MODE_BASELINE:
                result = process_frame_baseline(frame, cfg)
            else:
                result = process_frame(frame, tracker, cfg, entry.hints)
            totals.append(result.timings_us["total_us"])
            frames_processed += 1
            preds[entry.frame_id] = result.pred_polylines()
            write_lane_output(
                [l.to_record() for l in result.lanes()],
                clip_dir / f"frame_{entry.frame_id:06d}.lanes.txt",
            )
            gt = load_manifest_gt(entry)
            if gt is not None:
                gts.append(gt)
            if overlay:
                _write_overlay(
                    clip_dir / f"overlay_{entry.frame_id:06d}.png",
                    dims, result.pred_polylines(),
                    gt.active_lanes() if gt is not None else (),
                )
        if gts:
            reports.append(evaluate(preds, gts, cfg.evaluation, dims[0], dims[1]))
    report = merge_reports(reports)
    if report is not None:
        (out_dir / "eval_report.txt").write_text(report.to_text())
        (out_dir / "eval_report.csv").write_text(report.to_csv())
    stats = _timing_stats(totals)
    (out_dir / "timings.txt").write_text(
        "".join(f"{k} {v}\n" for k, v in sorted(stats.items()))
    )
    (out_dir / "config_used.json").write_text(
        json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    return RunSummary(out_dir, frames_processed, len(clips), report, stats)


def _write_overlay(path, dims, preds, gt_lanes):
    from PIL import Image, ImageDraw

    w, h = dims
    img = Image.new("RGB", (w, h), (0, 0, 0))
    draw = ImageDraw.Draw(img)
    for lane in gt_lanes:
        draw.line([(float(x), float(y)) for x, y in lane], fill=(60, 100, 255), width=3)
    for lane in preds:
        draw.line([(float(x), float(y)) for x, y in lane], fill=(0, 220, 90), width=2)
    img.save(path)


@dataclass
class BenchReport:
    per_backend: dict[str, dict[str, float]]
    repeats: int

    def to_text(self) -> str:
        lines = [f"repeats {self.repeats}"]
        for name, stats in self.per_backend.items():
            parts = " ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}"
                             for k, v in sorted(stats.items()))
            lines.append(f"backend {name}: {parts}")
        return "\n".join(lines) + "\n"


def bench(
    manifest_path: str | Path,
    cfg: PipelineConfig,
    repeats: int = 5,
    backends: Sequence[str] | None = None,
) -> BenchReport:
    """Time process_frame over preloaded frames (file I/O excluded)."""
    if repeats < 1:
        raise ValueError("bench needs at least one timed repeat")
    clips = load_manifest(manifest_path)
    loaded: list[tuple[ManifestClip, list]] = []
    for clip in clips:
        frames = [(load_manifest_frame(e), e.hints) for e in clip.frames]
        loaded.append((clip, frames))
    if backends is None:
        backends = [cfg.backend]
    elif list(backends) == ["both"]:
        backends = available_backends()
    report: dict[str, dict[str, float]] = {}
    for backend in backends:
        get_backend(backend)  # fail fast on unavailable backends
        run_cfg = replace(cfg, backend=backend)
        samples: list[float] = []
        for pass_idx in range(repeats + 1):  # first pass is warmup
            for clip, frames in loaded:
                if not frames:
                    continue
                f0 = frames[0][0]
                tracker = Tracker(run_cfg.tracker, f0.width, f0.height, run_cfg.curve_window)
                for frame, hints in frames:
                    start = time.perf_counter_ns()
                    if run_cfg.mode == MODE_BASELINE:
                        process_frame_baseline(frame, run_cfg)
                    else:
                        process_frame(frame, tracker, run_cfg, hints)
                    if pass_idx > 0:
                        samples.append((time.perf_counter_ns() - start) / 1000.0)
        stats = _timing_stats(samples)
        stats["variance_ms2"] = float(np.asarray(samples).var() / 1e6) if samples else 0.0
        report[backend] = stats
    return BenchReport(report, repeats)
