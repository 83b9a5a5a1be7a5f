"""Pure numpy implementation of the windowed ridge scan.

Semantics must match the compiled kernel exactly, including tie handling:
the best cell in a window is the maximum confidence, ties resolved to the
smallest y then smallest x (first occurrence in row-major order).
"""

from __future__ import annotations

import numpy as np


def scan_channel(grid, threshold, row_step, half_span, max_gap_windows, max_reseeds):
    """Walk a confidence grid bottom-to-top collecting one peak per window.

    Returns (ys, xs, confs) int32/int32/float32 arrays ordered by strictly
    decreasing y.
    """
    grid = np.ascontiguousarray(grid, dtype=np.float32)
    h, w = grid.shape
    row_max = grid.max(axis=1)

    def find_seed(y_top):
        if y_top < 0:
            return -1
        rows = np.nonzero(row_max[: y_top + 1] > threshold)[0]
        return int(rows[-1]) if rows.size else -1

    ys: list[int] = []
    xs: list[int] = []
    cs: list[float] = []

    y_seed = find_seed(h - 1)
    if y_seed < 0:
        return _as_arrays(ys, xs, cs)
    x_cur = int(np.argmax(grid[y_seed]))
    ys.append(y_seed)
    xs.append(x_cur)
    cs.append(float(grid[y_seed, x_cur]))

    y_base = y_seed
    empty_run = 0
    reseeds = 0
    while y_base > 0:
        lo = max(0, y_base - row_step)
        cl = max(0, x_cur - half_span)
        cr = min(w, x_cur + half_span + 1)
        window = grid[lo:y_base, cl:cr]
        best = float(window.max()) if window.size else -1.0
        if best > threshold:
            flat = int(window.argmax())
            dy, dx = divmod(flat, window.shape[1])
            y_base = lo + dy
            x_cur = cl + dx
            ys.append(y_base)
            xs.append(x_cur)
            cs.append(best)
            empty_run = 0
        else:
            empty_run += 1
            y_base = lo
            if empty_run > max_gap_windows:
                if reseeds >= max_reseeds:
                    break
                reseeds += 1
                y_seed = find_seed(y_base - 1)
                if y_seed < 0:
                    break
                x_cur = int(np.argmax(grid[y_seed]))
                y_base = y_seed
                ys.append(y_seed)
                xs.append(x_cur)
                cs.append(float(grid[y_seed, x_cur]))
                empty_run = 0
    return _as_arrays(ys, xs, cs)


def _as_arrays(ys, xs, cs):
    return (
        np.asarray(ys, dtype=np.int32),
        np.asarray(xs, dtype=np.int32),
        np.asarray(cs, dtype=np.float32),
    )
