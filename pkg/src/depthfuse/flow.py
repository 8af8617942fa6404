"""Dense flow providers for cross-scale depth alignment.

Three providers: "identity" (all-zero flow), "file" (a Middlebury .flo
loaded from disk) and "block" (coarse-to-fine block matching). The
estimated flow F satisfies target(x) ~ source(x + F(x)), so
``ops.warp_backward(source, F)`` resamples the source onto the target's
grid.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels, fileio
from .errors import ArgumentError, ProviderError
from .types import DepthMap, EdgeMap, FlowField, Image

FLOW_KINDS = ("identity", "file", "block")


@dataclass
class FlowProviderConfig:
    """Provider selection plus block-matching parameters.

    ``block`` is the odd side length of the matching window; ``search``
    the integer search radius per pyramid level; ``levels`` the number
    of pyramid levels (level 0 is full resolution).
    """

    kind: str = "block"
    path: str | None = None
    levels: int = 2
    block: int = 7
    search: int = 4

    def __post_init__(self):
        if self.kind not in FLOW_KINDS:
            raise ArgumentError(f"unknown flow provider {self.kind!r}, expected one of {FLOW_KINDS}")
        if self.kind == "file" and not self.path:
            raise ArgumentError("file flow provider needs a path")
        if self.levels < 1:
            raise ArgumentError(f"levels must be >= 1, got {self.levels}")
        if self.block < 3 or self.block % 2 == 0:
            raise ArgumentError(f"block must be odd and >= 3, got {self.block}")
        if self.search < 1:
            raise ArgumentError(f"search must be >= 1, got {self.search}")


def _plane(obj, name):
    if isinstance(obj, Image):
        from .edges import luminance

        return luminance(obj)
    if isinstance(obj, (DepthMap, EdgeMap)):
        return obj.data
    raise ArgumentError(f"{name} must be an Image, DepthMap or EdgeMap")


def _pyramid(arr, levels, min_extent):
    pyr = [arr]
    for _ in range(levels - 1):
        h, w = pyr[-1].shape
        nh, nw = h // 2, w // 2
        if nh < min_extent or nw < min_extent:
            break
        pyr.append(_kernels.resize_bilinear(pyr[-1], nh, nw))
    return pyr


def estimate_flow(target, source, config=None):
    """Estimate dense flow from ``target`` onto ``source``."""
    config = config or FlowProviderConfig()
    a = _plane(target, "target")
    b = _plane(source, "source")
    if a.shape != b.shape:
        raise ArgumentError(f"target shape {a.shape} does not match source shape {b.shape}")
    h, w = a.shape

    if config.kind == "identity":
        return FlowField(np.zeros((h, w, 2)))

    if config.kind == "file":
        flow = fileio.read_flo(config.path)
        if (flow.height, flow.width) != (h, w):
            raise ProviderError(
                f"flow file {config.path} has shape {(flow.height, flow.width)}, "
                f"expected {(h, w)}"
            )
        return flow

    block_radius = config.block // 2
    # Keep coarse levels large enough to hold one matching window.
    pyr_a = _pyramid(a, config.levels, config.block)
    pyr_b = _pyramid(b, config.levels, config.block)
    levels = min(len(pyr_a), len(pyr_b))

    flow_x = None
    flow_y = None
    for level in range(levels - 1, -1, -1):
        la = pyr_a[level]
        lb = pyr_b[level]
        lh, lw = la.shape
        if flow_x is None:
            init_x = np.zeros((lh, lw))
            init_y = np.zeros((lh, lw))
        else:
            ph, pw = flow_x.shape
            init_x = _kernels.resize_bilinear(flow_x, lh, lw) * (lw / pw)
            init_y = _kernels.resize_bilinear(flow_y, lh, lw) * (lh / ph)
        # Warp the source by the upsampled estimate, then refine with a
        # constant-displacement search around it.
        if flow_x is None:
            warped = lb
        else:
            warped = _kernels.warp_bilinear(lb, init_x, init_y)
        dx, dy = _kernels.block_match(la, warped, block_radius, config.search)
        flow_x = init_x + dx
        flow_y = init_y + dy
    return FlowField(np.stack([flow_x, flow_y], axis=2))
