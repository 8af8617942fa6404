"""Pure numpy/scipy implementations of the hot kernels.

Kept semantically identical to the Cython backend in ``_native.pyx``;
tests compare the two directly when the extension is available.
"""

import numpy as np
from scipy import ndimage


def _clipped_counts(n, radius):
    idx = np.arange(n)
    return np.minimum(idx + radius, n - 1) - np.maximum(idx - radius, 0) + 1.0


def box_mean(arr, radius):
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return arr.copy()
    h, w = arr.shape
    size = 2 * radius + 1
    sums = ndimage.uniform_filter(arr, size=size, mode="constant", cval=0.0) * (size * size)
    counts = np.outer(_clipped_counts(h, radius), _clipped_counts(w, radius))
    return sums / counts


def resize_bilinear(arr, out_h, out_w):
    in_h, in_w = arr.shape
    sy = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0.0, in_h - 1.0)
    sx = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0.0, in_w - 1.0)
    y0 = np.floor(sy).astype(np.intp)
    x0 = np.floor(sx).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = (sy - y0)[:, None]
    fx = (sx - x0)[None, :]
    v00 = arr[np.ix_(y0, x0)]
    v01 = arr[np.ix_(y0, x1)]
    v10 = arr[np.ix_(y1, x0)]
    v11 = arr[np.ix_(y1, x1)]
    top = v00 * (1.0 - fx) + v01 * fx
    bottom = v10 * (1.0 - fx) + v11 * fx
    return top * (1.0 - fy) + bottom * fy


def warp_bilinear(arr, flow_x, flow_y):
    h, w = arr.shape
    gx = np.clip(np.arange(w)[None, :] + flow_x, 0.0, w - 1.0)
    gy = np.clip(np.arange(h)[:, None] + flow_y, 0.0, h - 1.0)
    x0 = np.floor(gx).astype(np.intp)
    y0 = np.floor(gy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = gx - x0
    fy = gy - y0
    v00 = arr[y0, x0]
    v01 = arr[y0, x1]
    v10 = arr[y1, x0]
    v11 = arr[y1, x1]
    top = v00 * (1.0 - fx) + v01 * fx
    bottom = v10 * (1.0 - fx) + v11 * fx
    return top * (1.0 - fy) + bottom * fy


def displacement_order(search):
    """Search displacements sorted so ties resolve toward the smallest."""
    disps = [
        (dy, dx)
        for dy in range(-search, search + 1)
        for dx in range(-search, search + 1)
    ]
    disps.sort(key=lambda d: (abs(d[0]) + abs(d[1]), d[0], d[1]))
    return disps


def _parabolic_offset(c_minus, c_center, c_plus):
    denom = c_minus - 2.0 * c_center + c_plus
    out = np.zeros_like(c_center)
    ok = denom > 1e-12
    out[ok] = 0.5 * (c_minus[ok] - c_plus[ok]) / denom[ok]
    return np.clip(out, -0.5, 0.5)


def block_match(a, b, block_radius, search):
    h, w = a.shape
    size = 2 * block_radius + 1
    yy = np.arange(h)[:, None]
    xx = np.arange(w)[None, :]
    disps = displacement_order(search)
    costs = np.empty((len(disps), h, w), dtype=np.float64)
    for k, (dy, dx) in enumerate(disps):
        sy = np.clip(yy + dy, 0, h - 1)
        sx = np.clip(xx + dx, 0, w - 1)
        diff = a - b[sy, sx]
        # Sum of squared differences over the block, zero outside bounds.
        costs[k] = ndimage.uniform_filter(
            diff * diff, size=size, mode="constant", cval=0.0
        ) * (size * size)
    best = np.argmin(costs, axis=0)

    lut = np.full((2 * search + 1, 2 * search + 1), -1, dtype=np.intp)
    for k, (dy, dx) in enumerate(disps):
        lut[dy + search, dx + search] = k
    disp_arr = np.asarray(disps, dtype=np.intp)
    bdy = disp_arr[best, 0]
    bdx = disp_arr[best, 1]
    c0 = np.take_along_axis(costs, best[None], axis=0)[0]

    flow_x = bdx.astype(np.float64)
    flow_y = bdy.astype(np.float64)

    ok_x = np.abs(bdx) < search
    if np.any(ok_x):
        km = lut[bdy[ok_x] + search, bdx[ok_x] - 1 + search]
        kp = lut[bdy[ok_x] + search, bdx[ok_x] + 1 + search]
        rows, cols = np.nonzero(ok_x)
        cm = costs[km, rows, cols]
        cp = costs[kp, rows, cols]
        flow_x[ok_x] += _parabolic_offset(cm, c0[ok_x], cp)

    ok_y = np.abs(bdy) < search
    if np.any(ok_y):
        km = lut[bdy[ok_y] - 1 + search, bdx[ok_y] + search]
        kp = lut[bdy[ok_y] + 1 + search, bdx[ok_y] + search]
        rows, cols = np.nonzero(ok_y)
        cm = costs[km, rows, cols]
        cp = costs[kp, rows, cols]
        flow_y[ok_y] += _parabolic_offset(cm, c0[ok_y], cp)

    return flow_x, flow_y
