"""Array-backed containers shared by every stage of the pipeline.

All containers hold row-major float64 numpy arrays. Images are
(height, width, 3) with channel values in [0, 1]; single-channel maps
are (height, width). Depth maps live in depth space: larger values mean
farther surfaces. Containers validate on construction and never copy
defensively; callers must not mutate the wrapped arrays.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError


def _as_float2d(data, name):
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ArgumentError(f"{name} must be 2-d (H, W), got shape {arr.shape}")
    if arr.size == 0:
        raise ArgumentError(f"{name} must not be empty")
    return arr


@dataclass
class Image:
    """RGB image, shape (H, W, 3), finite values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ArgumentError(f"image must have shape (H, W, 3), got {arr.shape}")
        if arr.size == 0:
            raise ArgumentError("image must not be empty")
        if not np.all(np.isfinite(arr)):
            raise ArgumentError("image contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ArgumentError("image values must lie in [0, 1]")
        self.data = arr

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]


@dataclass
class DepthMap:
    """Single-channel depth map with an optional validity mask.

    Valid pixels must be finite. Depth-space maps are nonnegative by
    convention; intermediate filter outputs may overshoot slightly below
    zero, so nonnegativity is checked by :meth:`require_nonnegative` at
    ingestion and export boundaries rather than on every construction.
    Invalid pixels are excluded from every statistic.
    """

    data: np.ndarray
    valid_mask: np.ndarray | None = None

    def __post_init__(self):
        arr = _as_float2d(self.data, "depth map")
        if self.valid_mask is not None:
            mask = np.asarray(self.valid_mask, dtype=bool)
            if mask.shape != arr.shape:
                raise ArgumentError(
                    f"valid mask shape {mask.shape} does not match depth shape {arr.shape}"
                )
            self.valid_mask = mask
        values = arr if self.valid_mask is None else arr[self.valid_mask]
        if not np.all(np.isfinite(values)):
            raise ArgumentError("depth map contains non-finite valid values")
        self.data = arr

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    def valid(self):
        """Boolean validity mask, materialized as all-true when absent."""
        if self.valid_mask is None:
            return np.ones(self.data.shape, dtype=bool)
        return self.valid_mask

    def valid_values(self):
        """1-d array of the valid depth values."""
        if self.valid_mask is None:
            return self.data.reshape(-1)
        return self.data[self.valid_mask]

    def require_nonnegative(self, name="depth map"):
        """Raise unless every valid value is >= 0. Returns self."""
        if self.valid_values().min() < 0.0:
            raise ArgumentError(f"{name} contains negative depth values")
        return self


@dataclass
class EdgeMap:
    """Edge-strength map, shape (H, W), finite values in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = _as_float2d(self.data, "edge map")
        if not np.all(np.isfinite(arr)):
            raise ArgumentError("edge map contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ArgumentError("edge map values must lie in [0, 1]")
        self.data = arr

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]


@dataclass
class BinaryMask:
    """Boolean mask, shape (H, W)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.dtype != np.bool_:
            raise ArgumentError(f"mask must be boolean, got dtype {arr.dtype}")
        if arr.ndim != 2 or arr.size == 0:
            raise ArgumentError(f"mask must be non-empty 2-d, got shape {arr.shape}")
        self.data = arr

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    def count(self):
        return int(self.data.sum())


@dataclass
class FlowField:
    """Dense 2-d displacement field, shape (H, W, 2) as (dx, dy), finite."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ArgumentError(f"flow must have shape (H, W, 2), got {arr.shape}")
        if arr.size == 0:
            raise ArgumentError("flow must not be empty")
        if not np.all(np.isfinite(arr)):
            raise ArgumentError("flow contains non-finite values")
        self.data = arr

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def dx(self):
        return self.data[:, :, 0]

    @property
    def dy(self):
        return self.data[:, :, 1]
