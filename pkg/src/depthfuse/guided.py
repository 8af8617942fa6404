"""Edge-preserving guided filtering of depth maps.

The filter fits a local affine model of the guide in every box window:
a = cov(guide, src) / (var(guide) + eps), b = mean(src) - a * mean(guide),
then smooths the per-window coefficients and evaluates
out = mean(a) * guide + mean(b). Windows shrink at the borders and all
means divide by the actual window size.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ArgumentError
from .types import DepthMap


@dataclass
class GuidedFilterParams:
    """Box radius and regularizer for the guided filter."""

    radius: int
    eps: float = 1e-12

    def __post_init__(self):
        if self.radius < 1:
            raise ArgumentError(f"radius must be >= 1, got {self.radius}")
        if not np.isfinite(self.eps) or self.eps <= 0:
            raise ArgumentError(f"eps must be finite and > 0, got {self.eps}")

    @classmethod
    def for_width(cls, width, eps=1e-12):
        """Default parameters: radius is one twelfth of the map width."""
        return cls(radius=max(1, int(width) // 12), eps=eps)


def box_filter(depth, radius):
    """Mean filter with border-shrinking windows."""
    if radius < 1:
        raise ArgumentError(f"radius must be >= 1, got {radius}")
    data = depth.data
    if data.min() == data.max():
        # a mean of equal values is that value; skip the rounded sum path
        return DepthMap(np.full_like(data, data.flat[0]))
    return DepthMap(_kernels.box_mean(data, radius))


def guided_filter(guide, src, params):
    """Filter ``src`` so its output follows the edges of ``guide``."""
    g = guide.data
    p = src.data
    if g.shape != p.shape:
        raise ArgumentError(f"guide shape {g.shape} does not match input shape {p.shape}")
    if p.min() == p.max():
        # cov with a constant input is identically zero, so a = 0 and
        # b = the constant; the rounded path would smear it by ~1e-15
        return DepthMap(np.full_like(p, p.flat[0]))
    r = params.radius
    mean_g = _kernels.box_mean(g, r)
    mean_p = _kernels.box_mean(p, r)
    corr_gg = _kernels.box_mean(g * g, r)
    corr_gp = _kernels.box_mean(g * p, r)
    var_g = corr_gg - mean_g * mean_g
    cov_gp = corr_gp - mean_g * mean_p
    a = cov_gp / (var_g + params.eps)
    b = mean_p - a * mean_g
    out = _kernels.box_mean(a, r) * g + _kernels.box_mean(b, r)
    return DepthMap(out)
