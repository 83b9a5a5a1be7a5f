"""Independent oracle implementations used to pin expected test values.

Each oracle is written from the operation's contract, deliberately taking a
different computational route from the library code it checks.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad


# ---------------------------------------------------------------------------
# Windowed scan (brute-force, plain loops, no numpy)


def scan_oracle(grid, threshold, row_step, half_span, max_gap_windows, max_reseeds):
    """Reference ridge walk: returns a list of (y, x, confidence)."""
    rows = [list(map(float, r)) for r in grid]
    h = len(rows)
    w = len(rows[0])

    def row_best(y):
        best_x, best_v = 0, -1.0
        for x in range(w):
            if rows[y][x] > best_v:
                best_x, best_v = x, rows[y][x]
        return best_x, best_v

    def seed_at_or_below(y_top):
        for y in range(y_top, -1, -1):
            x, v = row_best(y)
            if v > threshold:
                return y, x, v
        return None

    out = []
    seed = seed_at_or_below(h - 1)
    if seed is None:
        return out
    y_cur, x_cur, v = seed
    out.append((y_cur, x_cur, v))
    y_base = y_cur
    empty_run = 0
    reseeds = 0
    while y_base > 0:
        lo = max(0, y_base - row_step)
        cl = max(0, x_cur - half_span)
        cr = min(w - 1, x_cur + half_span)
        best = None  # (value, y, x) with ties to smaller y then smaller x
        for y in range(lo, y_base):
            for x in range(cl, cr + 1):
                v = rows[y][x]
                if v > threshold and (best is None or v > best[0]):
                    best = (v, y, x)
        if best is not None:
            v, y_cur, x_cur = best
            out.append((y_cur, x_cur, v))
            y_base = y_cur
            empty_run = 0
        else:
            empty_run += 1
            y_base = lo
            if empty_run > max_gap_windows:
                if reseeds >= max_reseeds:
                    break
                reseeds += 1
                seed = seed_at_or_below(y_base - 1)
                if seed is None:
                    break
                y_cur, x_cur, v = seed
                out.append((y_cur, x_cur, v))
                y_base = y_cur
                empty_run = 0
    return out


# ---------------------------------------------------------------------------
# Statistics


def r_squared_oracle(x, y) -> float:
    """Squared sample correlation coefficient via numpy's corrcoef."""
    r = np.corrcoef(np.asarray(x, float), np.asarray(y, float))[0, 1]
    return float(r * r)


def wls_oracle(x, y, c):
    """Weighted simple regression through the centered closed form."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    c = np.asarray(c, float)
    sw = c.sum()
    xbar = float((c * x).sum() / sw)
    ybar = float((c * y).sum() / sw)
    beta1 = float((c * (x - xbar) * (y - ybar)).sum() / (c * (x - xbar) ** 2).sum())
    beta0 = ybar - beta1 * xbar
    return beta0, beta1


def ols_oracle(x, y):
    return wls_oracle(x, y, np.ones(len(x)))


# ---------------------------------------------------------------------------
# RMS x-distance between straight lanes, by numeric quadrature


def zeta_quad_oracle(a1, b1, a2, b2, h) -> float:
    def diff_sq(yy):
        return ((yy - b1) / a1 - (yy - b2) / a2) ** 2

    integral, _ = quad(diff_sq, 0.0, h, limit=200)
    return math.sqrt(integral / h)


# ---------------------------------------------------------------------------
# Lane weight by direct summation


def weight_sum_oracle(events, at_frame=None):
    """Direct evidence sum for one lane.

    ``events`` maps frame index -> (psi, c, n) for frames where the lane was
    detected. Each term decays by e^-d where d counts the frames the lane
    has been missing since that detection, evaluated at ``at_frame``
    (default: the last frame mentioned).
    """
    if at_frame is None:
        at_frame = max(events)
    detected = sorted(f for f in events if f <= at_frame)
    total = 0.0
    for f in detected:
        psi, c, n = events[f]
        # misses accumulated between this detection and the evaluation frame
        d = sum(1 for g in range(f + 1, at_frame + 1) if g not in events)
        total += math.exp(-d) * psi * c * n
    return total


# ---------------------------------------------------------------------------
# Rasterization by per-pixel minimum distance over the whole canvas


def mask_oracle(points, width, canvas_w, canvas_h):
    pts = np.asarray(points, float)
    r = width / 2.0
    xs = np.arange(canvas_w, dtype=float)
    ys = np.arange(canvas_h, dtype=float)
    gx, gy = np.meshgrid(xs, ys)
    min_d2 = np.full((canvas_h, canvas_w), np.inf)
    for k in range(len(pts) - 1):
        (x0, y0), (x1, y1) = pts[k], pts[k + 1]
        vx, vy = x1 - x0, y1 - y0
        L2 = vx * vx + vy * vy
        if L2 == 0.0:
            d2 = (gx - x0) ** 2 + (gy - y0) ** 2
        else:
            t = np.clip(((gx - x0) * vx + (gy - y0) * vy) / L2, 0.0, 1.0)
            d2 = (gx - x0 - t * vx) ** 2 + (gy - y0 - t * vy) ** 2
        min_d2 = np.minimum(min_d2, d2)
    return min_d2 <= r * r


def iou_oracle(points_a, width_a, points_b, width_b, canvas_w, canvas_h) -> float:
    a = mask_oracle(points_a, width_a, canvas_w, canvas_h)
    b = mask_oracle(points_b, width_b, canvas_w, canvas_h)
    union = np.logical_or(a, b).sum()
    return float(np.logical_and(a, b).sum() / union) if union else 0.0


# ---------------------------------------------------------------------------
# Piecewise-quadratic interpolation by explicit linear solves


def quad_interp_oracle(knots, y_eval):
    """Evaluate the secant-started C1 quadratic spline at y_eval.

    ``knots`` is a list of (x, y) with strictly decreasing y. Each segment i
    solves x(y) = a*y^2 + b*y + c subject to interpolating both endpoints
    and matching the incoming derivative at the segment start.
    """
    knots = [(float(x), float(y)) for x, y in knots]
    x0, y0 = knots[0]
    x1, y1 = knots[1]
    slope = (x1 - x0) / (y1 - y0)
    segments = []
    for (xa, ya), (xb, yb) in zip(knots[:-1], knots[1:]):
        mat = np.array([
            [ya * ya, ya, 1.0],
            [yb * yb, yb, 1.0],
            [2.0 * ya, 1.0, 0.0],
        ])
        rhs = np.array([xa, xb, slope])
        a, b, c = np.linalg.solve(mat, rhs)
        segments.append((ya, yb, a, b, c))
        slope = 2.0 * a * yb + b

    def eval_one(y):
        if y >= segments[0][0]:  # below the bottom knot: linear from first segment
            a, b = segments[0][2], segments[0][3]
            ya = segments[0][0]
            s = 2.0 * a * ya + b
            xa = a * ya * ya + b * ya + segments[0][4]
            return xa + s * (y - ya)
        if y <= segments[-1][1]:
            a, b = segments[-1][2], segments[-1][3]
            yb = segments[-1][1]
            s = 2.0 * a * yb + b
            xb = a * yb * yb + b * yb + segments[-1][4]
            return xb + s * (y - yb)
        for ya, yb, a, b, c in segments:
            if yb <= y <= ya:
                return a * y * y + b * y + c
        raise AssertionError("unreachable")

    ys = np.atleast_1d(np.asarray(y_eval, float))
    vals = np.array([eval_one(v) for v in ys])
    return float(vals[0]) if np.isscalar(y_eval) or np.asarray(y_eval).ndim == 0 else vals


# ---------------------------------------------------------------------------
# Baseline decoder reference


def baseline_points_oracle(channel, row_stride, threshold):
    """Per-row argmax every row_stride rows, bottom row first."""
    channel = np.asarray(channel)
    h = channel.shape[0]
    pts = []
    y = h - 1
    while y >= 0:
        x = int(np.argmax(channel[y]))
        if channel[y, x] > threshold:
            pts.append((y, x, float(channel[y, x])))
        y -= row_stride
    return pts
