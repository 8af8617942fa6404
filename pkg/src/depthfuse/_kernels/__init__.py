"""Numeric kernels with a compiled fast path.

The heavy inner loops (box means, bilinear resampling, backward warps,
block-match search) are implemented twice: once in Cython (``_native``)
and once in numpy/scipy (``_numpy_impl``). The compiled backend is
picked at import time when the extension was built; set
``DEPTHFUSE_BACKEND=numpy`` to force the fallback or
``DEPTHFUSE_BACKEND=native`` to require the extension.
``benchmarks/bench_kernels.py`` compares the two.

Both backends implement identical semantics:

- ``box_mean(arr, radius)``: mean over a (2r+1)^2 window clipped to the
  array bounds, divided by the actual window size.
- ``resize_bilinear(arr, out_h, out_w)``: half-pixel-center sampling
  with source coordinates clamped to the valid range. Same-size calls
  reproduce the input bit-exactly.
- ``warp_bilinear(arr, flow_x, flow_y)``: out(y, x) samples the input
  at (y + flow_y, x + flow_x) with border clamping. Zero flow is the
  bit-exact identity.
- ``block_match(a, b, block_radius, search)``: per-pixel integer SSD
  search over [-search, search]^2 with deterministic ties toward the
  smaller displacement, then parabolic sub-pixel refinement.
"""

import os

from . import _numpy_impl

_requested = os.environ.get("DEPTHFUSE_BACKEND", "auto")
if _requested not in ("auto", "native", "numpy"):
    raise ImportError(f"unknown DEPTHFUSE_BACKEND value: {_requested!r}")

_impl = _numpy_impl
if _requested in ("auto", "native"):
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "native":
            raise
        _impl = _numpy_impl


def backend_name():
    """Name of the active backend: "native" or "numpy"."""
    return "native" if _impl is not _numpy_impl else "numpy"


def _prepare(arr):
    import numpy as np

    return np.ascontiguousarray(arr, dtype=np.float64)


def box_mean(arr, radius):
    return _impl.box_mean(_prepare(arr), int(radius))


def resize_bilinear(arr, out_h, out_w):
    return _impl.resize_bilinear(_prepare(arr), int(out_h), int(out_w))


def warp_bilinear(arr, flow_x, flow_y):
    return _impl.warp_bilinear(_prepare(arr), _prepare(flow_x), _prepare(flow_y))


def block_match(a, b, block_radius, search):
    return _impl.block_match(_prepare(a), _prepare(b), int(block_radius), int(search))
