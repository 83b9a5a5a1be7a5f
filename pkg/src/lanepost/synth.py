"""Synthetic probability-map scenarios with exact ground truth.

Each lane renders as a Gaussian-profile ridge in its own channel; salt
noise plants isolated bright pixels; a dropout schedule zeroes whole
channels on chosen frames (noise is applied after dropout, mimicking a
detector that lost the lane but still fires spuriously). Everything is
deterministic given the spec and seed, and scenarios are written through
the same raw-frame/manifest/ground-truth formats the pipeline ingests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .probmap_io import GroundTruthFrame, ProbMapFrame, write_probmap


@dataclass(frozen=True)
class StraightLaneSpec:
    """Lane y = beta0 + beta1 * x, with optional per-frame parameter drift."""

    beta0: float
    beta1: float
    dbeta0: float = 0.0
    dbeta1: float = 0.0
    active: bool = True

    def x_at(self, y: np.ndarray, frame: int, height: int) -> np.ndarray:
        b0 = self.beta0 + frame * self.dbeta0
        b1 = self.beta1 + frame * self.dbeta1
        return (np.asarray(y, dtype=np.float64) - b0) / b1


@dataclass(frozen=True)
class CurvedLaneSpec:
    """Quadratic lane x(y) anchored at the bottom row.

    x = x_bottom + slope * dy + curvature * dy^2 with dy = y - (h - 1);
    ``drift`` shifts x_bottom per frame.
    """

    x_bottom: float
    slope: float
    curvature: float
    drift: float = 0.0
    active: bool = True

    def x_at(self, y: np.ndarray, frame: int, height: int) -> np.ndarray:
        dy = np.asarray(y, dtype=np.float64) - (height - 1)
        return self.x_bottom + frame * self.drift + self.slope * dy + self.curvature * dy * dy


LaneSpec = StraightLaneSpec | CurvedLaneSpec


@dataclass(frozen=True)
class ScenarioSpec:
    frames: int
    width: int = 800
    height: int = 288
    lanes: tuple[LaneSpec, ...] = ()
    salt_density: float = 0.0
    salt_amplitude: float = 0.0
    dropouts: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    blur_sigma: float = 1.5
    peak_confidence: float = 1.0
    active_pair: tuple[int, int] | None = None

    def __post_init__(self):
        if self.frames < 1 or not self.lanes:
            raise ValueError("scenario needs at least one frame and one lane")
        if not (0.0 <= self.salt_density <= 1.0 and 0.0 <= self.salt_amplitude <= 1.0):
            raise ValueError("salt density and amplitude must be in [0, 1]")
        if not (0.0 < self.peak_confidence <= 1.0):
            raise ValueError("peak confidence must be in (0, 1]")
        for f, l in self.dropouts:
            if not (0 <= f < self.frames and 0 <= l < len(self.lanes)):
                raise ValueError(f"dropout ({f}, {l}) references a missing frame or lane")
        if self.active_pair is not None:
            i, j = self.active_pair
            if not (0 <= i < len(self.lanes) and 0 <= j < len(self.lanes)):
                raise ValueError("active_pair indices out of range")

    @property
    def hints(self) -> tuple[bool, ...]:
        return tuple(l.active for l in self.lanes)


def seeded_rng(seed: int) -> np.random.Generator:
    """Deterministic random stream; identical seeds give identical scenarios."""
    return np.random.default_rng(seed)


def _render_channel(spec: ScenarioSpec, lane: LaneSpec, frame: int) -> np.ndarray:
    ys = np.arange(spec.height, dtype=np.float64)
    centers = lane.x_at(ys, frame, spec.height)
    xs = np.arange(spec.width, dtype=np.float64)
    d = xs[None, :] - centers[:, None]
    sigma = max(spec.blur_sigma, 1e-6)
    return (spec.peak_confidence * np.exp(-(d * d) / (2.0 * sigma * sigma))).astype(np.float32)


def render_scenario(
    spec: ScenarioSpec, seed: int = 0
) -> tuple[list[ProbMapFrame], list[GroundTruthFrame]]:
    """Render probability-map frames and the matching analytic ground truth."""
    rng = seeded_rng(seed)
    frames: list[ProbMapFrame] = []
    gts: list[GroundTruthFrame] = []
    ys = np.arange(spec.height - 1, -1, -1, dtype=np.float64)  # bottom-to-top
    for f in range(spec.frames):
        channels = []
        for li, lane in enumerate(spec.lanes):
            grid = _render_channel(spec, lane, f)
            if (f, li) in spec.dropouts:
                grid = np.zeros_like(grid)
            if spec.salt_density > 0.0:
                # draw for every channel so the schedule never shifts the stream
                mask = rng.random(grid.shape) < spec.salt_density
                grid = np.maximum(grid, np.float32(spec.salt_amplitude) * mask)
            channels.append(grid)
        frames.append(ProbMapFrame(f, np.stack(channels, axis=0)))
        lanes = tuple(
            np.column_stack([lane.x_at(ys, f, spec.height), ys]) for lane in spec.lanes
        )
        gts.append(GroundTruthFrame(f, lanes, spec.active_pair))
    return frames, gts


def write_scenario(
    spec: ScenarioSpec, out_dir: str | Path, seed: int = 0, clip_name: str = "clip0"
) -> Path:
    """Write frames, ground truth, and a manifest; returns the manifest path.

    Ground-truth files list the active-lane markings only (what evaluation
    compares against), one polyline per line as x y pairs.
    """
    out_dir = Path(out_dir)
    (out_dir / "frames").mkdir(parents=True, exist_ok=True)
    (out_dir / "gt").mkdir(parents=True, exist_ok=True)
    frames, gts = render_scenario(spec, seed)
    lines = [f"# synthetic scenario seed={seed}", f"clip {clip_name}"]
    lines.append("hints " + " ".join("1" if h else "0" for h in spec.hints))
    for frame, gt in zip(frames, gts):
        raw_rel = f"frames/frame_{frame.frame_id:06d}.raw"
        gt_rel = f"gt/frame_{frame.frame_id:06d}.lines.txt"
        write_probmap(frame, out_dir / raw_rel)
        _write_lines_txt(gt.active_lanes(), out_dir / gt_rel)
        lines.append(f"{frame.frame_id} {raw_rel} gt={gt_rel}")
    manifest = out_dir / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


def _write_lines_txt(lanes, path: Path) -> None:
    rows = []
    for lane in lanes:
        rows.append(" ".join(f"{x:.4f} {y:.4f}" for x, y in lane))
    path.write_text("\n".join(rows) + "\n")


def _straight_through(
    x_bottom: float, x_top: float, height: int, drift_x: float = 0.0, active: bool = True
) -> StraightLaneSpec:
    """Straight lane from (x_bottom, h-1) to (x_top, 0) with x drift per frame."""
    beta1 = (height - 1) / (x_bottom - x_top)
    beta0 = (height - 1) - beta1 * x_bottom
    return StraightLaneSpec(beta0, beta1, dbeta0=-drift_x * beta1, active=active)


def clean_preset(frames: int = 20, width: int = 800, height: int = 288) -> ScenarioSpec:
    """Noise-free clip: two straight lanes plus one gently curved active lane."""
    return ScenarioSpec(
        frames=frames,
        width=width,
        height=height,
        lanes=(
            _straight_through(300.0, 240.0, height, drift_x=0.5, active=True),
            # x stays monotonic in y so the pre-corroboration line fit is sane
            CurvedLaneSpec(
                x_bottom=500.0, slope=0.30, curvature=4e-4, drift=0.3, active=True
            ),
            _straight_through(700.0, 740.0, height, drift_x=0.0, active=False),
        ),
        blur_sigma=1.5,
        peak_confidence=1.0,
        active_pair=(0, 1),
    )


def degraded_preset(frames: int = 20, width: int = 800, height: int = 288) -> ScenarioSpec:
    """Salt noise plus dropout of the left active channel on 5 of 20 frames."""
    n_drop = 5
    drop_frames = [min(frames - 1, 5 + 3 * i) for i in range(n_drop)]
    return ScenarioSpec(
        frames=frames,
        width=width,
        height=height,
        lanes=(
            _straight_through(300.0, 260.0, height, drift_x=0.4, active=True),
            _straight_through(520.0, 560.0, height, drift_x=-0.3, active=True),
            _straight_through(700.0, 730.0, height, drift_x=0.0, active=False),
        ),
        salt_density=0.002,
        salt_amplitude=0.45,
        dropouts=frozenset((f, 0) for f in drop_frames),
        blur_sigma=1.5,
        peak_confidence=1.0,
        active_pair=(0, 1),
    )


PRESETS = {"clean": clean_preset, "degraded": degraded_preset}
