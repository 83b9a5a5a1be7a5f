"""Straight-vs-curved lane classification.

A lane marking is held to a linear model by the coefficient of
determination of its points. If dropping the n points furthest up the
image (smallest y) makes the remainder fit a line strictly better, the
far end is straying from the line, which is how a curve looks; the flag
is then corroborated against recent frames to keep one noisy frame from
flipping a lane's category.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .extraction import LanePoint
from .regression import QuadSpline, StraightLine

MIN_STRAIGHT_POINTS = 3  # minimum points for a straight lane
CURVED_MIN_FACTOR = 3    # curved lanes need 3x that many

_R2_ONE_SNAP = 1e-12


class Classification(Enum):
    STRAIGHT_CANDIDATE = "straight"
    CURVED_CANDIDATE = "curved"
    TOO_FEW_POINTS = "too_few"


@dataclass(frozen=True)
class LaneMarking:
    """A constructed lane: its points plus fitted geometry."""

    points: tuple[LanePoint, ...]
    geometry: StraightLine | QuadSpline
    channel_id: int = 0
    active_hint: bool = True

    @property
    def kind(self) -> str:
        return "curved" if isinstance(self.geometry, QuadSpline) else "straight"


def _xy(points) -> tuple[np.ndarray, np.ndarray]:
    if len(points) and isinstance(points[0], LanePoint):
        x = np.array([p.x for p in points], dtype=np.float64)
        y = np.array([p.y for p in points], dtype=np.float64)
    else:
        xy = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        x, y = xy[:, 0], xy[:, 1]
    return x, y


def r_squared(points: Sequence[LanePoint] | np.ndarray) -> float:
    """Proportion of variance explained by a line: Cov(X,Y)^2 / (Var X * Var Y).

    Population (1/m) moments. Degenerate variance (a perfectly vertical or
    horizontal point set) counts as perfectly explained and returns 1.0.
    """
    x, y = _xy(points)
    if x.size < 2:
        raise ValueError("need at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    var_x = float(dx @ dx) / x.size
    var_y = float(dy @ dy) / y.size
    if var_x == 0.0 or var_y == 0.0:
        return 1.0
    cov = float(dx @ dy) / x.size
    r2 = (cov * cov) / (var_x * var_y)
    # collinear sets must classify as straight; absorb last-ulp rounding
    if r2 >= 1.0 - _R2_ONE_SNAP:
        return 1.0
    return max(0.0, r2)


def classify(points: Sequence[LanePoint], n: int = MIN_STRAIGHT_POINTS) -> Classification:
    """Label a point set straight or curved by comparing r-squared values.

    Points arrive ordered by decreasing y; the "top" points to drop are the
    n with smallest y, i.e. the end of the list.
    """
    if len(points) < n:
        return Classification.TOO_FEW_POINTS
    if len(points) >= CURVED_MIN_FACTOR * n:
        whole = r_squared(points)
        truncated = r_squared(points[:-n])
        if whole < truncated:
            return Classification.CURVED_CANDIDATE
    return Classification.STRAIGHT_CANDIDATE


def corroborate_curve(
    current: bool,
    history: Sequence[bool],
    votes_needed: int = 2,
    window: int = 3,
) -> bool:
    """Confirm a curve flag against recent frames.

    ``history`` holds the lane's curve-candidate flags from previous frames,
    oldest first. The vote counts the current frame plus the last
    ``window - 1`` history entries; a non-candidate is never promoted.
    """
    if not current:
        return False
    recent = list(history)[-(window - 1):] if window > 1 else []
    votes = 1 + sum(bool(f) for f in recent)
    return votes >= votes_needed
