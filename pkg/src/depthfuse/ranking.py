"""Edge-guided point-pair sampling and the pairwise ranking loss."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .types import BinaryMask, DepthMap

DEFAULT_RATIO_THRESHOLD = 1.03
_MAX_OFFSET = 6
_REDRAW_LIMIT = 8


@dataclass(frozen=True)
class PointPair:
    """Two pixel locations (row, col) and their ordinal label.

    label is +1 when the first point is farther than the second by more
    than the ratio threshold, -1 for the reverse, 0 when the two depths
    are within the threshold of each other.
    """

    p0: tuple[int, int]
    p1: tuple[int, int]
    label: int


def ordinal_label(a, b, ratio_threshold=DEFAULT_RATIO_THRESHOLD):
    """Ordinal relation of two nonnegative depth values.

    Uses the multiplicative form (a > tau * b) so zero depths need no
    special casing.
    """
    if a > ratio_threshold * b:
        return 1
    if b > ratio_threshold * a:
        return -1
    return 0


def sample_pairs_edge_guided(
    gt,
    edge_mask,
    count,
    ratio_threshold=DEFAULT_RATIO_THRESHOLD,
    seed=0,
    edge_fraction=0.5,
):
    """Sample labeled point pairs, half of them straddling edges.

    An edge-guided pair picks a masked pixel, a random direction, and
    places the two endpoints on opposite sides of that pixel along the
    direction; the rest of the pairs are uniform. Labels come from the
    gt depth ratio against ``ratio_threshold``. With an empty mask every
    pair falls back to uniform sampling.
    """
    if count < 0:
        raise ArgumentError(f"count must be >= 0, got {count}")
    if not 0.0 <= edge_fraction <= 1.0:
        raise ArgumentError(f"edge_fraction must lie in [0, 1], got {edge_fraction}")
    if isinstance(edge_mask, BinaryMask):
        mask = edge_mask.data
    else:
        mask = np.asarray(edge_mask, dtype=bool)
    data = gt.data if isinstance(gt, DepthMap) else np.asarray(gt, dtype=np.float64)
    if mask.shape != data.shape:
        raise ArgumentError(
            f"mask shape {mask.shape} does not match depth shape {data.shape}"
        )
    h, w = data.shape
    rng = np.random.default_rng(seed)
    edge_rows, edge_cols = np.nonzero(mask)
    n_edge_pixels = edge_rows.shape[0]
    n_guided = int(round(count * edge_fraction)) if n_edge_pixels > 0 else 0

    pairs = []
    for i in range(count):
        if i < n_guided:
            k = int(rng.integers(0, n_edge_pixels))
            cy, cx = int(edge_rows[k]), int(edge_cols[k])
            p0 = p1 = (cy, cx)
            for _ in range(_REDRAW_LIMIT):
                theta = rng.uniform(0.0, 2.0 * math.pi)
                d0 = rng.uniform(1.0, _MAX_OFFSET)
                d1 = rng.uniform(1.0, _MAX_OFFSET)
                uy, ux = math.sin(theta), math.cos(theta)
                p0 = (
                    min(max(int(round(cy + d0 * uy)), 0), h - 1),
                    min(max(int(round(cx + d0 * ux)), 0), w - 1),
                )
                p1 = (
                    min(max(int(round(cy - d1 * uy)), 0), h - 1),
                    min(max(int(round(cx - d1 * ux)), 0), w - 1),
                )
                if p0 != (cy, cx) and p1 != (cy, cx) and p0 != p1:
                    break
        else:
            flat = rng.integers(0, h * w, size=2)
            p0 = (int(flat[0]) // w, int(flat[0]) % w)
            p1 = (int(flat[1]) // w, int(flat[1]) % w)
        label = ordinal_label(data[p0], data[p1], ratio_threshold)
        pairs.append(PointPair(p0, p1, label))
    return pairs


def loss_ranking(pred, pairs):
    """Structure-guided ranking loss over labeled point pairs.

    Ordered pairs pay log(1 + exp(-label * diff)); pairs labeled equal
    pay diff^2, where diff = pred[p0] - pred[p1]. Returns the mean over
    the pairs.
    """
    if not pairs:
        raise ArgumentError("loss_ranking needs at least one pair")
    data = pred.data if isinstance(pred, DepthMap) else np.asarray(pred, dtype=np.float64)
    total = 0.0
    for pair in pairs:
        diff = data[pair.p0] - data[pair.p1]
        if pair.label == 0:
            total += diff * diff
        else:
            # log(1 + exp(-l * d)) via the stable softplus form.
            z = -pair.label * diff
            total += (z + math.log1p(math.exp(-z))) if z > 0 else math.log1p(math.exp(z))
    return total / len(pairs)
