"""Confidence-weighted line fitting, outlier pruning, and quadratic splines.

Straight lanes are fit by weighted least squares, regressing y on x with
each point weighted by its detection confidence; the estimate minimizes
||C^(1/2) (y - X beta)||^2 for the diagonal confidence matrix C. Outliers
are pruned once by x-distance from the fitted line, then the survivors are
refit. Curved lanes connect their points with a C1 piecewise-quadratic
spline in x(y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .extraction import LanePoint


class FitDegenerateError(ValueError):
    """Too few usable points to fit a lane."""


class VerticalLaneError(Exception):
    """All points share one x; the lane is the vertical line x = x0."""

    def __init__(self, x0: float):
        super().__init__(f"vertical lane at x={x0}")
        self.x0 = x0


@dataclass(frozen=True)
class StraightLine:
    """A non-horizontal line stored as x(y) = dxdy * y + x_intercept.

    This parameterization stays finite for vertical lanes (dxdy = 0) and is
    what rendering and matching consume. ``beta0``/``beta1`` recover the
    y = beta0 + beta1 * x regression form when it exists.
    """

    dxdy: float
    x_intercept: float

    @classmethod
    def from_beta(cls, beta0: float, beta1: float) -> "StraightLine":
        if beta1 == 0.0:
            raise ValueError("beta1 must be nonzero for a lane line")
        return cls(1.0 / beta1, -beta0 / beta1)

    @classmethod
    def vertical(cls, x0: float) -> "StraightLine":
        return cls(0.0, x0)

    @property
    def is_vertical(self) -> bool:
        return self.dxdy == 0.0

    @property
    def beta1(self) -> float:
        return math.inf if self.is_vertical else 1.0 / self.dxdy

    @property
    def beta0(self) -> float:
        return math.nan if self.is_vertical else -self.x_intercept / self.dxdy

    def x_at(self, y):
        return self.dxdy * np.asarray(y, dtype=np.float64) + self.x_intercept


@dataclass(frozen=True)
class WlsFit:
    beta0: float          # y-intercept of y = beta0 + beta1 * x
    beta1: float          # gradient
    weighted_sse: float   # ||C^(1/2) (y - X beta)||^2 at the solution
    support: int          # number of points behind the fit

    def __post_init__(self):
        if self.weighted_sse < 0 or self.support < 3:
            raise ValueError("invalid fit: negative error or support below 3")

    def line(self) -> StraightLine:
        return StraightLine.from_beta(self.beta0, self.beta1)


def _point_arrays(points: Sequence[LanePoint]):
    x = np.array([p.x for p in points], dtype=np.float64)
    y = np.array([p.y for p in points], dtype=np.float64)
    c = np.array([p.confidence for p in points], dtype=np.float64)
    return x, y, c


def wls_fit(points: Sequence[LanePoint]) -> WlsFit:
    """Confidence-weighted least squares estimate of the lane line."""
    if len(points) < 3:
        raise FitDegenerateError(f"need at least 3 points, got {len(points)}")
    x, y, c = _point_arrays(points)
    if np.ptp(x) == 0.0:
        raise VerticalLaneError(float(x[0]))
    sw = np.sqrt(c)
    design = np.column_stack([sw, sw * x])
    target = sw * y
    beta, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ beta
    return WlsFit(float(beta[0]), float(beta[1]), float(resid @ resid), len(points))


def x_residuals(points: Sequence[LanePoint], fit: WlsFit) -> np.ndarray:
    """Absolute x-distance of each point from the fitted line."""
    if fit.beta1 == 0.0:
        raise ValueError("x-distance undefined for a horizontal fit")
    x, y, _ = _point_arrays(points)
    return np.abs(x - (y - fit.beta0) / fit.beta1)


def remove_outliers(
    points: Sequence[LanePoint], fit: WlsFit, kappa: float = 2.5
) -> list[LanePoint]:
    """Drop points whose x-distance from the line exceeds kappa * RMS."""
    pts = list(points)
    if len(pts) <= 3:
        return pts
    resid = x_residuals(pts, fit)
    rms = float(np.sqrt(np.mean(resid**2)))
    if rms == 0.0:
        return pts
    keep = resid <= kappa * rms
    return [p for p, k in zip(pts, keep) if k]


def fit_straight(points: Sequence[LanePoint], kappa: float = 2.5) -> WlsFit:
    """Fit, prune x-distance outliers once, refit the survivors."""
    first = wls_fit(points)
    survivors = remove_outliers(points, first, kappa)
    if len(survivors) < 3:
        raise FitDegenerateError("fewer than 3 points survive outlier removal")
    if len(survivors) == len(points):
        return first
    return wls_fit(survivors)


class QuadSpline:
    """C1 piecewise-quadratic interpolant x(y) through lane points.

    Knots are given with strictly decreasing y (bottom of the image first).
    The first segment's derivative starts at the secant of the first two
    knots, so the bottom piece is linear and each later piece picks up where
    the previous one left off. Evaluation outside the knot range is linear
    extrapolation from the nearest end segment.
    """

    def __init__(self, knots: Sequence[LanePoint]):
        knots = _collapse_duplicate_y(knots)
        if len(knots) < 3:
            raise FitDegenerateError("spline needs at least 3 distinct y values")
        self.knots: tuple[LanePoint, ...] = tuple(knots)
        ys = np.array([p.y for p in knots], dtype=np.float64)
        xs = np.array([p.x for p in knots], dtype=np.float64)
        if not np.all(np.diff(ys) < 0):
            raise ValueError("spline knots must have strictly decreasing y")
        n = len(ys)
        slope = np.empty(n)
        curv = np.empty(n - 1)
        slope[0] = (xs[1] - xs[0]) / (ys[1] - ys[0])
        for i in range(n - 1):
            d = ys[i + 1] - ys[i]
            curv[i] = (xs[i + 1] - xs[i] - slope[i] * d) / (d * d)
            slope[i + 1] = slope[i] + 2.0 * curv[i] * d
        self._ys = ys
        self._xs = xs
        self._slope = slope
        self._curv = curv

    def x_at(self, y):
        y = np.asarray(y, dtype=np.float64)
        scalar = y.ndim == 0
        y = np.atleast_1d(y)
        ys, xs = self._ys, self._xs
        out = np.empty_like(y)

        below = y >= ys[0]   # at or past the bottom knot
        above = y <= ys[-1]  # at or past the top knot
        inner = ~(below | above)
        out[below] = xs[0] + self._slope[0] * (y[below] - ys[0])
        out[above] = xs[-1] + self._slope[-1] * (y[above] - ys[-1])
        if np.any(inner):
            # segment index via ascending view of knot y values; side="left"
            # lands exact knot hits at offset 0 so knots evaluate bit-exactly
            asc = ys[::-1]
            j = np.searchsorted(asc, y[inner], side="left") - 1
            seg = np.clip(len(ys) - 2 - j, 0, len(ys) - 2)
            d = y[inner] - ys[seg]
            out[inner] = xs[seg] + self._slope[seg] * d + self._curv[seg] * d * d
        return float(out[0]) if scalar else out

    def derivative_at_knot(self, i: int) -> float:
        return float(self._slope[i])


def _collapse_duplicate_y(points: Sequence[LanePoint]) -> list[LanePoint]:
    """Keep one point per y value, preferring the higher confidence."""
    best: dict[float, LanePoint] = {}
    order: list[float] = []
    for p in points:
        cur = best.get(p.y)
        if cur is None:
            best[p.y] = p
            order.append(p.y)
        elif p.confidence > cur.confidence:
            best[p.y] = p
    return [best[y] for y in order]


def build_spline(points: Sequence[LanePoint]) -> QuadSpline:
    """Connect curved-lane points with quadratic splines."""
    return QuadSpline(points)
