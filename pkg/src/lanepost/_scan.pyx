# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled windowed ridge scan; see _scan_py for the reference semantics."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def scan_channel(object grid_obj, double threshold, Py_ssize_t row_step,
                 Py_ssize_t half_span, Py_ssize_t max_gap_windows,
                 Py_ssize_t max_reseeds):
    cdef cnp.ndarray[cnp.float32_t, ndim=2, mode="c"] grid = \
        np.ascontiguousarray(grid_obj, dtype=np.float32)
    cdef Py_ssize_t h = grid.shape[0]
    cdef Py_ssize_t w = grid.shape[1]

    cdef cnp.ndarray[cnp.int32_t, ndim=1] out_y = np.empty(h, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] out_x = np.empty(h, dtype=np.int32)
    cdef cnp.ndarray[cnp.float32_t, ndim=1] out_c = np.empty(h, dtype=np.float32)

    cdef Py_ssize_t n = 0
    cdef Py_ssize_t y, x, lo, cl, cr, by, bx
    cdef Py_ssize_t y_base, x_cur, empty_run, reseeds
    cdef float v, best
    cdef bint found

    # initial seed: bottom-most row containing a salient cell
    cdef Py_ssize_t y_seed = -1
    cdef Py_ssize_t x_seed = 0
    for y in range(h - 1, -1, -1):
        best = -1.0
        bx = 0
        for x in range(w):
            v = grid[y, x]
            if v > best:
                best = v
                bx = x
        if best > threshold:
            y_seed = y
            x_seed = bx
            break
    if y_seed < 0:
        return out_y[:0], out_x[:0], out_c[:0]

    out_y[n] = <cnp.int32_t> y_seed
    out_x[n] = <cnp.int32_t> x_seed
    out_c[n] = grid[y_seed, x_seed]
    n += 1

    y_base = y_seed
    x_cur = x_seed
    empty_run = 0
    reseeds = 0
    while y_base > 0:
        lo = y_base - row_step
        if lo < 0:
            lo = 0
        cl = x_cur - half_span
        if cl < 0:
            cl = 0
        cr = x_cur + half_span + 1
        if cr > w:
            cr = w
        best = -1.0
        by = -1
        bx = -1
        for y in range(lo, y_base):
            for x in range(cl, cr):
                v = grid[y, x]
                if v > best:
                    best = v
                    by = y
                    bx = x
        if by >= 0 and best > threshold:
            y_base = by
            x_cur = bx
            out_y[n] = <cnp.int32_t> by
            out_x[n] = <cnp.int32_t> bx
            out_c[n] = best
            n += 1
            empty_run = 0
        else:
            empty_run += 1
            y_base = lo
            if empty_run > max_gap_windows:
                if reseeds >= max_reseeds:
                    break
                reseeds += 1
                found = False
                for y in range(y_base - 1, -1, -1):
                    best = -1.0
                    bx = 0
                    for x in range(w):
                        v = grid[y, x]
                        if v > best:
                            best = v
                            bx = x
                    if best > threshold:
                        y_base = y
                        x_cur = bx
                        out_y[n] = <cnp.int32_t> y
                        out_x[n] = <cnp.int32_t> bx
                        out_c[n] = best
                        n += 1
                        empty_run = 0
                        found = True
                        break
                if not found:
                    break
    return out_y[:n].copy(), out_x[:n].copy(), out_c[:n].copy()
