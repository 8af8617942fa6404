"""Hybrid edge detection: Sobel gradients fused with learned edge maps."""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _kernels
from .errors import ArgumentError, ProviderError
from .types import BinaryMask, EdgeMap, Image

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

SOBEL_X = np.asarray([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_Y = SOBEL_X.T


@dataclass
class HybridEdgeConfig:
    """Knobs for edge fusion, tiling and binarization.

    n_root is the root applied to the product of the two edge maps;
    grid x grid near-uniform tiles are processed at patch_scale times
    their resolution in the tiled strategy.
    """

    n_root: int = 2
    grid: int = 3
    patch_scale: int = 3
    binarize_threshold: float = 0.3

    def __post_init__(self):
        if self.n_root < 1:
            raise ArgumentError(f"n_root must be >= 1, got {self.n_root}")
        if self.grid < 1:
            raise ArgumentError(f"grid must be >= 1, got {self.grid}")
        if self.patch_scale < 1:
            raise ArgumentError(f"patch_scale must be >= 1, got {self.patch_scale}")
        if not 0.0 < self.binarize_threshold < 1.0:
            raise ArgumentError(
                f"binarize_threshold must lie in (0, 1), got {self.binarize_threshold}"
            )


def luminance(image):
    """Rec.601 luminance plane of an RGB image."""
    r, g, b = LUMA_WEIGHTS
    return image.data[:, :, 0] * r + image.data[:, :, 1] * g + image.data[:, :, 2] * b


def sobel_gradients(arr):
    """Horizontal and vertical 3x3 Sobel responses with replicated borders."""
    gx = ndimage.correlate(arr, SOBEL_X, mode="nearest")
    gy = ndimage.correlate(arr, SOBEL_Y, mode="nearest")
    return gx, gy


def gradient_magnitude(arr):
    """Sobel gradient magnitude of a 2-d array, normalized by its maximum."""
    gx, gy = sobel_gradients(arr)
    mag = np.hypot(gx, gy)
    peak = mag.max()
    # Convolution rounding leaves ~1e-16 residue on constant input; a peak
    # below this floor is noise, not an edge, and must not be blown up to 1.
    if peak <= 1e-12:
        return np.zeros_like(mag)
    return np.clip(mag / peak, 0.0, 1.0)


def sobel_magnitude(image):
    """Sobel edge strength of an image's luminance plane.

    The magnitude is normalized by its per-image maximum so values span
    [0, 1]; a constant image yields an all-zero map.
    """
    return EdgeMap(gradient_magnitude(luminance(image)))


def hybrid_fuse(learned, sobel, config=None):
    """Fuse a learned edge map with a Sobel map by their geometric mean.

    out = (learned * sobel) ** (1 / n_root). Either map being zero at a
    pixel forces the output to zero there; two all-ones maps fuse to an
    all-ones map.
    """
    config = config or HybridEdgeConfig()
    if learned.data.shape != sobel.data.shape:
        raise ArgumentError(
            f"edge map shapes differ: {learned.data.shape} vs {sobel.data.shape}"
        )
    fused = (learned.data * sobel.data) ** (1.0 / config.n_root)
    return EdgeMap(np.clip(fused, 0.0, 1.0))


def _tile_bounds(extent, grid):
    # Near-uniform tiles; the remainder pixels go to the last tile.
    base = extent // grid
    bounds = []
    for i in range(grid):
        start = i * base
        stop = (i + 1) * base if i < grid - 1 else extent
        bounds.append((start, stop))
    return bounds


def patched_edges(image, provider, config=None):
    """Run an edge provider tile-by-tile at boosted resolution.

    The image splits into grid x grid near-uniform tiles; each tile is
    bilinearly upsampled by patch_scale, sent through the provider, and
    the result is downsampled back and stitched without overlap. With
    grid=1 and patch_scale=1 this equals running the provider directly.
    """
    config = config or HybridEdgeConfig()
    if image.height < config.grid or image.width < config.grid:
        raise ArgumentError(
            f"image {image.width}x{image.height} too small for a {config.grid}x{config.grid} grid"
        )
    out = np.zeros((image.height, image.width), dtype=np.float64)
    for y0, y1 in _tile_bounds(image.height, config.grid):
        for x0, x1 in _tile_bounds(image.width, config.grid):
            tile = Image(np.ascontiguousarray(image.data[y0:y1, x0:x1]))
            tw = (x1 - x0) * config.patch_scale
            th = (y1 - y0) * config.patch_scale
            planes = [
                _kernels.resize_bilinear(tile.data[:, :, c], th, tw) for c in range(3)
            ]
            upsampled = Image(np.clip(np.stack(planes, axis=2), 0.0, 1.0))
            edge = provider(upsampled)
            if not isinstance(edge, EdgeMap):
                raise ProviderError(
                    f"edge provider returned {type(edge).__name__}, expected EdgeMap"
                )
            if edge.data.shape != (th, tw):
                raise ProviderError(
                    f"edge provider returned shape {edge.data.shape}, expected {(th, tw)}"
                )
            down = _kernels.resize_bilinear(edge.data, y1 - y0, x1 - x0)
            out[y0:y1, x0:x1] = np.clip(down, 0.0, 1.0)
    return EdgeMap(out)


def binarize(edge, threshold=None):
    """Threshold an edge map into a boolean mask (strength >= threshold)."""
    if threshold is None:
        threshold = HybridEdgeConfig().binarize_threshold
    if not 0.0 < threshold < 1.0:
        raise ArgumentError(f"threshold must lie in (0, 1), got {threshold}")
    return BinaryMask(edge.data >= threshold)


def edge_highlight(image, mask):
    """Zero out the masked pixels of an image across all channels."""
    if mask.data.shape != (image.height, image.width):
        raise ArgumentError(
            f"mask shape {mask.data.shape} does not match image {image.data.shape[:2]}"
        )
    out = image.data.copy()
    out[mask.data] = 0.0
    return Image(out)
