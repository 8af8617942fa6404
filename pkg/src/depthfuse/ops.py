"""Resampling, depth-space conversion, colorization and degradations."""

import numpy as np
from scipy import ndimage

from . import _kernels
from .errors import ArgumentError
from .types import BinaryMask, DepthMap, EdgeMap, FlowField, Image

# Five-anchor blue-to-red table (coolwarm style), expanded to 256 rows by
# linear interpolation. Index 0 renders the nearest depth, 255 the farthest.
_COLORMAP_ANCHORS = (
    (0.00, (59, 76, 192)),
    (0.25, (124, 159, 237)),
    (0.50, (222, 220, 218)),
    (0.75, (234, 125, 98)),
    (1.00, (180, 4, 38)),
)


def _build_colormap():
    positions = np.asarray([a[0] for a in _COLORMAP_ANCHORS])
    colors = np.asarray([a[1] for a in _COLORMAP_ANCHORS], dtype=np.float64)
    t = np.linspace(0.0, 1.0, 256)
    table = np.stack(
        [np.interp(t, positions, colors[:, c]) for c in range(3)], axis=1
    )
    return np.rint(table).astype(np.uint8)


COLORMAP = _build_colormap()


def _resize_plane(arr, out_w, out_h):
    out = _kernels.resize_bilinear(arr, out_h, out_w)
    # Bilinear weights are convex, but guard the float roundoff anyway so
    # the output can never leave the input's range.
    return np.clip(out, arr.min(), arr.max())


def resize_bilinear(obj, out_w, out_h):
    """Resize a map or image with half-pixel-center bilinear sampling.

    Same-size calls return a bit-exact copy. Output values never leave
    the input's [min, max] range (per channel for images).
    """
    if out_w < 1 or out_h < 1:
        raise ArgumentError(f"target size must be >= 1, got {out_w}x{out_h}")
    if isinstance(obj, Image):
        planes = [
            _resize_plane(obj.data[:, :, c], out_w, out_h) for c in range(3)
        ]
        return Image(np.stack(planes, axis=2))
    if isinstance(obj, EdgeMap):
        return EdgeMap(_resize_plane(obj.data, out_w, out_h))
    if isinstance(obj, DepthMap):
        data = _resize_plane(obj.data, out_w, out_h)
        if obj.valid_mask is None:
            return DepthMap(data)
        mask = _kernels.resize_bilinear(obj.valid_mask.astype(np.float64), out_h, out_w)
        return DepthMap(data, mask >= 0.5)
    if isinstance(obj, BinaryMask):
        mask = _kernels.resize_bilinear(obj.data.astype(np.float64), out_h, out_w)
        return BinaryMask(mask >= 0.5)
    raise ArgumentError(f"cannot resize object of type {type(obj).__name__}")


def to_depth_space(depth, d_max):
    """Flip a disparity-style map into depth space: out = d_max - value."""
    top = float(d_max)
    if not np.isfinite(top):
        raise ArgumentError("d_max must be finite")
    if top < depth.valid_values().max():
        raise ArgumentError(
            f"d_max={top} is smaller than the map's maximum value"
        )
    return DepthMap(top - depth.data, depth.valid_mask)


def colorize(depth):
    """Render a depth map through the fixed 256-entry colormap.

    The minimum valid depth maps to table row 0 and the maximum to row
    255; equal depths always get equal colors. A constant map (and any
    invalid pixel) renders as row 0.
    """
    values = depth.valid_values()
    lo = values.min()
    hi = values.max()
    data = depth.data if depth.valid_mask is None else np.where(depth.valid_mask, depth.data, lo)
    if hi > lo:
        t = (data - lo) / (hi - lo)
    else:
        t = np.zeros_like(data)
    idx = np.rint(np.clip(t, 0.0, 1.0) * 255.0).astype(np.intp)
    return Image(COLORMAP[idx] / 255.0)


def edge_to_image(edge):
    """Render an edge map as a gray RGB image."""
    return Image(np.repeat(edge.data[:, :, None], 3, axis=2))


def gaussian_kernel1d(sigma):
    """Normalized 1-d Gaussian taps with radius ceil(3*sigma)."""
    if sigma <= 0:
        return np.asarray([1.0])
    radius = int(np.ceil(3.0 * sigma))
    taps = np.exp(-0.5 * (np.arange(-radius, radius + 1) / sigma) ** 2)
    return taps / taps.sum()


def gaussian_blur(arr, sigma):
    """Separable Gaussian blur of a 2-d array with replicated borders."""
    if sigma == 0:
        return arr.copy()
    taps = gaussian_kernel1d(sigma)
    out = ndimage.convolve1d(arr, taps, axis=0, mode="nearest")
    return ndimage.convolve1d(out, taps, axis=1, mode="nearest")


DEGRADE_KINDS = ("gaussian-noise", "gaussian-blur")


def degrade(image, kind, sigma, seed=0):
    """Apply a reproducible degradation to an image.

    "gaussian-noise" adds seeded N(0, sigma^2) noise and clips back to
    [0, 1]; "gaussian-blur" applies a separable Gaussian with replicated
    borders. sigma=0 returns the input unchanged for both kinds.
    """
    if kind not in DEGRADE_KINDS:
        raise ArgumentError(f"unknown degradation {kind!r}, expected one of {DEGRADE_KINDS}")
    if not np.isfinite(sigma) or sigma < 0:
        raise ArgumentError(f"sigma must be finite and >= 0, got {sigma}")
    if sigma == 0:
        return Image(image.data.copy())
    if kind == "gaussian-noise":
        rng = np.random.default_rng(seed)
        noisy = image.data + rng.normal(0.0, sigma, size=image.data.shape)
        return Image(np.clip(noisy, 0.0, 1.0))
    planes = [gaussian_blur(image.data[:, :, c], sigma) for c in range(3)]
    return Image(np.clip(np.stack(planes, axis=2), 0.0, 1.0))


def warp_backward(obj, flow):
    """Backward-warp a map or image by a flow field.

    out(x) bilinearly samples the input at x + flow(x); sample
    coordinates are clamped to the borders. Zero flow is the bit-exact
    identity. Output values never leave the input's range.
    """
    if isinstance(obj, Image):
        if (flow.height, flow.width) != (obj.height, obj.width):
            raise ArgumentError("flow shape does not match image shape")
        planes = []
        for c in range(3):
            plane = obj.data[:, :, c]
            warped = _kernels.warp_bilinear(plane, flow.dx, flow.dy)
            planes.append(np.clip(warped, plane.min(), plane.max()))
        return Image(np.stack(planes, axis=2))
    if isinstance(obj, (DepthMap, EdgeMap)):
        if (flow.height, flow.width) != (obj.height, obj.width):
            raise ArgumentError("flow shape does not match map shape")
        if isinstance(obj, DepthMap) and obj.valid_mask is not None:
            raise ArgumentError("warping masked depth maps is not supported")
        warped = _kernels.warp_bilinear(obj.data, flow.dx, flow.dy)
        warped = np.clip(warped, obj.data.min(), obj.data.max())
        return DepthMap(warped) if isinstance(obj, DepthMap) else EdgeMap(warped)
    raise ArgumentError(f"cannot warp object of type {type(obj).__name__}")
