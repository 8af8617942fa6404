# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the hot kernels.

Semantics mirror ``_numpy_impl`` exactly; see ``__init__`` for the
contract of each function.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def box_mean(double[:, ::1] arr, int radius):
    if radius < 0:
        raise ValueError("radius must be >= 0")
    cdef Py_ssize_t h = arr.shape[0]
    cdef Py_ssize_t w = arr.shape[1]
    if radius == 0:
        return np.asarray(arr).copy()
    cdef cnp.ndarray[cnp.float64_t, ndim=2] row_sums = np.empty((h, w), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] rs = row_sums
    cdef double[:, ::1] o = out
    cdef Py_ssize_t y, x, lo, hi
    cdef double acc
    cdef double cw, ch

    # Horizontal clipped running sums.
    for y in range(h):
        acc = 0.0
        hi = radius if radius < w - 1 else w - 1
        for x in range(hi + 1):
            acc += arr[y, x]
        rs[y, 0] = acc
        for x in range(1, w):
            hi = x + radius
            if hi <= w - 1:
                acc += arr[y, hi]
            lo = x - radius - 1
            if lo >= 0:
                acc -= arr[y, lo]
            rs[y, x] = acc

    # Vertical clipped running sums over the row sums.
    for x in range(w):
        acc = 0.0
        hi = radius if radius < h - 1 else h - 1
        for y in range(hi + 1):
            acc += rs[y, x]
        o[0, x] = acc
        for y in range(1, h):
            hi = y + radius
            if hi <= h - 1:
                acc += rs[hi, x]
            lo = y - radius - 1
            if lo >= 0:
                acc -= rs[lo, x]
            o[y, x] = acc

    # Divide by the actual (clipped) window size.
    for y in range(h):
        lo = y - radius
        if lo < 0:
            lo = 0
        hi = y + radius
        if hi > h - 1:
            hi = h - 1
        ch = hi - lo + 1
        for x in range(w):
            lo = x - radius
            if lo < 0:
                lo = 0
            hi = x + radius
            if hi > w - 1:
                hi = w - 1
            cw = hi - lo + 1
            o[y, x] /= cw * ch
    return out


def resize_bilinear(double[:, ::1] arr, Py_ssize_t out_h, Py_ssize_t out_w):
    cdef Py_ssize_t in_h = arr.shape[0]
    cdef Py_ssize_t in_w = arr.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((out_h, out_w), dtype=np.float64)
    cdef double[:, ::1]o = out
    cdef double scale_y = in_h / <double> out_h
    cdef double scale_x = in_w / <double> out_w
    cdef Py_ssize_t y, x, y0, x0, y1, x1
    cdef double sy, sx, fy, fx, top, bottom
    for y in range(out_h):
        sy = (y + 0.5) * scale_y - 0.5
        if sy < 0.0:
            sy = 0.0
        if sy > in_h - 1.0:
            sy = in_h - 1.0
        y0 = <Py_ssize_t> sy
        y1 = y0 + 1
        if y1 > in_h - 1:
            y1 = in_h - 1
        fy = sy - y0
        for x in range(out_w):
            sx = (x + 0.5) * scale_x - 0.5
            if sx < 0.0:
                sx = 0.0
            if sx > in_w - 1.0:
                sx = in_w - 1.0
            x0 = <Py_ssize_t> sx
            x1 = x0 + 1
            if x1 > in_w - 1:
                x1 = in_w - 1
            fx = sx - x0
            top = arr[y0, x0] * (1.0 - fx) + arr[y0, x1] * fx
            bottom = arr[y1, x0] * (1.0 - fx) + arr[y1, x1] * fx
            o[y, x] = top * (1.0 - fy) + bottom * fy
    return out


def warp_bilinear(double[:, ::1] arr, double[:, ::1] flow_x, double[:, ::1] flow_y):
    cdef Py_ssize_t h = arr.shape[0]
    cdef Py_ssize_t w = arr.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t y, x, y0, x0, y1, x1
    cdef double gy, gx, fy, fx, top, bottom
    for y in range(h):
        for x in range(w):
            gx = x + flow_x[y, x]
            gy = y + flow_y[y, x]
            if gx < 0.0:
                gx = 0.0
            if gx > w - 1.0:
                gx = w - 1.0
            if gy < 0.0:
                gy = 0.0
            if gy > h - 1.0:
                gy = h - 1.0
            x0 = <Py_ssize_t> gx
            y0 = <Py_ssize_t> gy
            x1 = x0 + 1
            if x1 > w - 1:
                x1 = w - 1
            y1 = y0 + 1
            if y1 > h - 1:
                y1 = h - 1
            fx = gx - x0
            fy = gy - y0
            top = arr[y0, x0] * (1.0 - fx) + arr[y0, x1] * fx
            bottom = arr[y1, x0] * (1.0 - fx) + arr[y1, x1] * fx
            o[y, x] = top * (1.0 - fy) + bottom * fy
    return out


def _displacement_order(int search):
    disps = [
        (dy, dx)
        for dy in range(-search, search + 1)
        for dx in range(-search, search + 1)
    ]
    disps.sort(key=lambda d: (abs(d[0]) + abs(d[1]), d[0], d[1]))
    return disps


def block_match(double[:, ::1] a, double[:, ::1] b, int block_radius, int search):
    cdef Py_ssize_t h = a.shape[0]
    cdef Py_ssize_t w = a.shape[1]
    disps = _displacement_order(search)
    cdef Py_ssize_t ndisp = len(disps)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] dys = np.asarray([d[0] for d in disps], dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] dxs = np.asarray([d[1] for d in disps], dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] lut_arr = np.full(
        (2 * search + 1, 2 * search + 1), -1, dtype=np.int64
    )
    cdef Py_ssize_t k
    for k in range(ndisp):
        lut_arr[dys[k] + search, dxs[k] + search] = k
    cdef cnp.int64_t[::1] dy_v = dys
    cdef cnp.int64_t[::1] dx_v = dxs
    cdef cnp.int64_t[:, ::1] lut = lut_arr

    # One cost plane per displacement: the squared-difference image
    # summed over the block window with zeros outside the bounds. The
    # running-sum passes make each plane O(h*w) instead of O(h*w*block^2).
    cdef cnp.ndarray[cnp.float64_t, ndim=3] costs_arr = np.empty((ndisp, h, w), dtype=np.float64)
    cdef double[:, :, ::1] costs = costs_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=2] diff2_arr = np.empty((h, w), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] rows_arr = np.empty((h, w), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] col_arr = np.empty(w, dtype=np.float64)
    cdef double[:, ::1] diff2 = diff2_arr
    cdef double[:, ::1] rows = rows_arr
    cdef double[::1] col = col_arr

    cdef Py_ssize_t y, x, sy, sx, lo, hi, best, km, kp
    cdef cnp.int64_t dy, dx, bdy, bdx
    cdef double acc, diff, best_cost, c, cm, cp, denom, off

    for k in range(ndisp):
        dy = dy_v[k]
        dx = dx_v[k]
        for y in range(h):
            sy = y + dy
            if sy < 0:
                sy = 0
            if sy > h - 1:
                sy = h - 1
            for x in range(w):
                sx = x + dx
                if sx < 0:
                    sx = 0
                if sx > w - 1:
                    sx = w - 1
                diff = a[y, x] - b[sy, sx]
                diff2[y, x] = diff * diff

        # Horizontal zero-padded running window sums.
        for y in range(h):
            acc = 0.0
            hi = block_radius if block_radius < w - 1 else w - 1
            for x in range(hi + 1):
                acc += diff2[y, x]
            rows[y, 0] = acc
            for x in range(1, w):
                hi = x + block_radius
                if hi <= w - 1:
                    acc += diff2[y, hi]
                lo = x - block_radius - 1
                if lo >= 0:
                    acc -= diff2[y, lo]
                rows[y, x] = acc

        # Vertical pass over the row sums, one running value per column.
        for x in range(w):
            col[x] = 0.0
        hi = block_radius if block_radius < h - 1 else h - 1
        for y in range(hi + 1):
            for x in range(w):
                col[x] += rows[y, x]
        for x in range(w):
            costs[k, 0, x] = col[x]
        for y in range(1, h):
            hi = y + block_radius
            if hi <= h - 1:
                for x in range(w):
                    col[x] += rows[hi, x]
            lo = y - block_radius - 1
            if lo >= 0:
                for x in range(w):
                    col[x] -= rows[lo, x]
            for x in range(w):
                costs[k, y, x] = col[x]

    cdef cnp.ndarray[cnp.float64_t, ndim=2] fx_out = np.empty((h, w), dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] fy_out = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] fx_o = fx_out
    cdef double[:, ::1] fy_o = fy_out

    for y in range(h):
        for x in range(w):
            best = 0
            best_cost = costs[0, y, x]
            for k in range(1, ndisp):
                c = costs[k, y, x]
                if c < best_cost:
                    best_cost = c
                    best = k
            bdy = dy_v[best]
            bdx = dx_v[best]
            fx_o[y, x] = <double> bdx
            fy_o[y, x] = <double> bdy
            if bdx > -search and bdx < search:
                km = lut[bdy + search, bdx - 1 + search]
                kp = lut[bdy + search, bdx + 1 + search]
                cm = costs[km, y, x]
                cp = costs[kp, y, x]
                denom = cm - 2.0 * best_cost + cp
                if denom > 1e-12:
                    off = 0.5 * (cm - cp) / denom
                    if off < -0.5:
                        off = -0.5
                    if off > 0.5:
                        off = 0.5
                    fx_o[y, x] += off
            if bdy > -search and bdy < search:
                km = lut[bdy - 1 + search, bdx + search]
                kp = lut[bdy + 1 + search, bdx + search]
                cm = costs[km, y, x]
                cp = costs[kp, y, x]
                denom = cm - 2.0 * best_cost + cp
                if denom > 1e-12:
                    off = 0.5 * (cm - cp) / denom
                    if off < -0.5:
                        off = -0.5
                    if off > 0.5:
                        off = 0.5
                    fy_o[y, x] += off
    return fx_out, fy_out
