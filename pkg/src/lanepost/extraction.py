"""Confidence-weighted lane point extraction from probability-map channels.

Per channel, a first salient point (confidence above an adaptive threshold)
seeds a walk up the image. From each accepted point the next point is the
highest-confidence salient cell inside a window spanning the next h/20 rows
and w/2 columns centered on the current x; searching only near the last
point keeps noise elsewhere in the map out of the lane. A short run of
empty windows slides the search upward; a long gap allows a single re-seed
so fragmented ridges still yield one marking per channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import get_backend


@dataclass(frozen=True)
class LanePoint:
    """One detected lane point in image coordinates (y grows downward)."""

    x: float
    y: float
    confidence: float


@dataclass(frozen=True)
class ExtractionConfig:
    alpha: float = 0.5          # adaptive threshold as a fraction of the frame peak
    tau_min: float = 0.1        # absolute confidence floor
    row_step_divisor: int = 20  # window height = h / 20
    col_span_divisor: int = 2   # window width = w / 2
    max_gap_windows: int = 3    # empty windows tolerated before a re-seed
    max_reseeds: int = 1

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must satisfy 0 < alpha <= 1")
        if not (0.0 <= self.tau_min < 1.0):
            raise ValueError("tau_min must satisfy 0 <= tau_min < 1")
        if self.row_step_divisor < 1 or self.col_span_divisor < 1:
            raise ValueError("window divisors must be >= 1")

    def row_step(self, height: int) -> int:
        return max(1, height // self.row_step_divisor)

    def half_span(self, width: int) -> int:
        # total window width is w / col_span_divisor, split evenly per side
        return max(1, width // (2 * self.col_span_divisor))


def adaptive_threshold(channel: np.ndarray, cfg: ExtractionConfig) -> float:
    """Threshold adapted to the strongest response in this channel."""
    if channel.size == 0:
        raise ValueError("channel must be nonempty")
    return max(cfg.tau_min, cfg.alpha * float(channel.max()))


def extract_lane_points(
    channel: np.ndarray,
    cfg: ExtractionConfig,
    backend: str | None = None,
) -> list[LanePoint]:
    """Extract one lane marking's points from a single channel.

    Points come back ordered by strictly decreasing y; every confidence
    strictly exceeds the adaptive threshold. Empty when nothing is salient.
    """
    channel = np.asarray(channel, dtype=np.float32)
    if channel.ndim != 2 or channel.size == 0:
        raise ValueError("channel must be a nonempty 2-d grid")
    h, w = channel.shape
    thr = adaptive_threshold(channel, cfg)
    mod, _ = get_backend(backend)
    ys, xs, cs = mod.scan_channel(
        channel, thr, cfg.row_step(h), cfg.half_span(w),
        cfg.max_gap_windows, cfg.max_reseeds,
    )
    return [
        LanePoint(float(x), float(y), float(c))
        for y, x, c in zip(ys.tolist(), xs.tolist(), cs.tolist())
    ]
