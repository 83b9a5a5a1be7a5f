"""Multi-frame lane tracking.

Lanes found in the current frame are matched to tracked lanes by the RMS
x-distance between the two lane curves over the image height; pairs within
w/200 pixels are the same lane, smallest distance first so each current
lane claims at most one track. Matched tracks gain weight proportional to
how much high-confidence evidence the frame contributed; unmatched tracks
decay by e^-1 per missed frame, so a lane missing d frames carries e^-d of
its accumulated weight. The active pair is the heaviest track on each side
of the image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .regression import QuadSpline, StraightLine

LaneGeometry = StraightLine | QuadSpline


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class TrackerConfig:
    psi_active: float = 1.0     # weight increment factor, potential active lanes
    psi_inactive: float = 0.5   # weight increment factor, everything else
    match_tol_divisor: int = 200  # match threshold = w / 200
    max_miss: int = 10          # drop a track missing longer than this
    pft_enabled: bool = True    # carry state across frames

    def __post_init__(self):
        if not (self.psi_active >= self.psi_inactive > 0.0):
            raise ValueError("require psi_active >= psi_inactive > 0")


@dataclass
class TrackedLane:
    lane_id: int
    params: LaneGeometry
    weight: float = 0.0
    miss_count: int = 0
    curve_history: list[bool] = field(default_factory=list)
    rms_confidence: float = 0.0
    point_count: int = 0
    active_hint: bool = True

    def bottom_x(self, h: int) -> float:
        return float(np.asarray(self.params.x_at(h - 1)))

    def side(self, w: int, h: int) -> Side:
        return Side.RIGHT if self.bottom_x(h) >= w / 2.0 else Side.LEFT


@dataclass(frozen=True)
class Observation:
    """One constructed lane from the current frame, ready for matching."""

    geometry: LaneGeometry
    rms_confidence: float
    point_count: int
    active_hint: bool = True
    curve_candidate: bool = False


@dataclass(frozen=True)
class Assignment:
    matches: tuple[tuple[int, int], ...]  # (observation index, track index)
    new_lanes: tuple[int, ...]            # unmatched observation indices
    missed: tuple[int, ...]               # unmatched track indices


def zeta(l1: LaneGeometry, l2: LaneGeometry, h: int) -> float:
    """RMS x-distance between two lane curves over image height h.

    For two straight lanes the integral (1/h) * int_0^h (x1(y) - x2(y))^2 dy
    has the closed form below; any curved participant falls back to the
    discrete RMS over every integer row in [0, h).
    """
    if isinstance(l1, StraightLine) and isinstance(l2, StraightLine):
        a = l1.dxdy - l2.dxdy
        b = l1.x_intercept - l2.x_intercept
        return math.sqrt(a * a * h * h / 3.0 + a * b * h + b * b)
    ys = np.arange(h, dtype=np.float64)
    diff = np.asarray(l1.x_at(ys)) - np.asarray(l2.x_at(ys))
    return float(np.sqrt(np.mean(diff * diff)))


def match_lanes(
    current: Sequence[Observation],
    tracked: Sequence[TrackedLane],
    w: int,
    h: int,
) -> Assignment:
    """One-to-one greedy assignment by increasing RMS x-distance."""
    tol = w / 200.0
    pairs = []
    for ci, obs in enumerate(current):
        for ti, trk in enumerate(tracked):
            d = zeta(obs.geometry, trk.params, h)
            if d <= tol:
                pairs.append((d, ci, ti))
    pairs.sort(key=lambda t: (t[0], t[1], t[2]))
    used_c: set[int] = set()
    used_t: set[int] = set()
    matches = []
    for d, ci, ti in pairs:
        if ci in used_c or ti in used_t:
            continue
        used_c.add(ci)
        used_t.add(ti)
        matches.append((ci, ti))
    new_lanes = tuple(i for i in range(len(current)) if i not in used_c)
    missed = tuple(i for i in range(len(tracked)) if i not in used_t)
    return Assignment(tuple(matches), new_lanes, missed)


def update_weights(tracked: list[TrackedLane], cfg: TrackerConfig) -> list[TrackedLane]:
    """Apply per-frame weight bookkeeping; returns the surviving tracks.

    Tracks seen this frame (miss_count == 0) gain psi * c * N where c is the
    RMS point confidence and N the point count; every other track's total
    weight decays by e^-1, and tracks missing beyond max_miss are dropped.
    """
    survivors = []
    for trk in tracked:
        if trk.miss_count == 0:
            psi = cfg.psi_active if trk.active_hint else cfg.psi_inactive
            trk.weight += psi * trk.rms_confidence * trk.point_count
            survivors.append(trk)
        else:
            trk.weight *= math.exp(-1.0)
            if trk.miss_count <= cfg.max_miss:
                survivors.append(trk)
    return survivors


def select_active(
    tracked: Sequence[TrackedLane], w: int, h: int
) -> tuple[TrackedLane | None, TrackedLane | None]:
    """Pick the highest-weight track on each side of the image.

    Side is judged by the lane's x at the bottom row (y = h - 1); exactly
    w/2 counts as right. Weight ties go to the older track.
    """
    best: dict[Side, TrackedLane] = {}
    for trk in tracked:
        side = trk.side(w, h)
        cur = best.get(side)
        if cur is None or trk.weight > cur.weight or (
            trk.weight == cur.weight and trk.lane_id < cur.lane_id
        ):
            best[side] = trk
    return best.get(Side.LEFT), best.get(Side.RIGHT)


class Tracker:
    """Owns the tracked-lane state for one video stream.

    Not safe for concurrent mutation; one tracker per stream. With
    preceding-frame tracking disabled the state is cleared on every frame,
    making each frame's output a pure function of that frame.
    """

    def __init__(self, cfg: TrackerConfig, w: int, h: int, curve_window: int = 3):
        self.cfg = cfg
        self.w = w
        self.h = h
        self.curve_window = curve_window
        self.tracks: list[TrackedLane] = []
        self._next_id = 0

    def reset(self) -> None:
        self.tracks = []
        self._next_id = 0

    def match(self, observations: Sequence[Observation]) -> Assignment:
        if not self.cfg.pft_enabled:
            self.reset()
        return match_lanes(observations, self.tracks, self.w, self.h)

    def history_for(self, assignment: Assignment, obs_index: int) -> list[bool]:
        """Curve-flag history of the track an observation matched, if any."""
        for ci, ti in assignment.matches:
            if ci == obs_index:
                return list(self.tracks[ti].curve_history)
        return []

    def commit(
        self,
        observations: Sequence[Observation],
        assignment: Assignment,
        final_geometry: Sequence[LaneGeometry],
    ) -> None:
        """Fold the frame's observations into the track state."""
        for ci, ti in assignment.matches:
            obs = observations[ci]
            trk = self.tracks[ti]
            trk.params = final_geometry[ci]
            trk.miss_count = 0
            trk.rms_confidence = obs.rms_confidence
            trk.point_count = obs.point_count
            trk.active_hint = obs.active_hint
            trk.curve_history.append(obs.curve_candidate)
            del trk.curve_history[: -self.curve_window]
        for ti in assignment.missed:
            self.tracks[ti].miss_count += 1
        for ci in assignment.new_lanes:
            obs = observations[ci]
            trk = TrackedLane(
                lane_id=self._next_id,
                params=final_geometry[ci],
                rms_confidence=obs.rms_confidence,
                point_count=obs.point_count,
                active_hint=obs.active_hint,
                curve_history=[obs.curve_candidate],
            )
            self._next_id += 1
            self.tracks.append(trk)
        self.tracks = update_weights(self.tracks, self.cfg)

    def select_active(self) -> tuple[TrackedLane | None, TrackedLane | None]:
        return select_active(self.tracks, self.w, self.h)

    def snapshot(self) -> str:
        """Deterministic text dump of the tracker state for golden tests."""
        lines = [f"tracker w={self.w} h={self.h} tracks={len(self.tracks)}"]
        for trk in sorted(self.tracks, key=lambda t: t.lane_id):
            kind = "curved" if isinstance(trk.params, QuadSpline) else "straight"
            hist = "".join("1" if f else "0" for f in trk.curve_history)
            lines.append(
                f"track id={trk.lane_id} kind={kind} weight={trk.weight:.6f}"
                f" miss={trk.miss_count} n={trk.point_count}"
                f" c={trk.rms_confidence:.6f} hint={int(trk.active_hint)}"
                f" history={hist or '-'}"
            )
        return "\n".join(lines) + "\n"
