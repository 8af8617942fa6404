"""Depth evaluation: alignment, Canny masks and the metric report.

All metrics are means over the pixels of their evaluation set: AbsRel,
SqRel, RMSE and the delta_1 inlier ratio over every valid pixel, the
edge and Canny squared-relative errors over their respective masks, and
ORD, the fraction of sampled point pairs whose ordinal relation
disagrees between prediction and ground truth. Empty evaluation sets
yield NaN for the affected metric, never a silent zero.
"""

import math
from dataclasses import dataclass, fields

import numpy as np
from scipy import ndimage

from .edges import luminance, sobel_gradients
from .errors import AlignmentError, ArgumentError
from .ops import gaussian_blur
from .ranking import DEFAULT_RATIO_THRESHOLD, ordinal_label, sample_pairs_edge_guided
from .types import BinaryMask, DepthMap

DELTA_THRESHOLD = 1.25


@dataclass
class OrdConfig:
    """Sampling parameters for the ordinal disagreement metric."""

    pair_count: int = 5000
    ratio_threshold: float = DEFAULT_RATIO_THRESHOLD
    seed: int = 0

    def __post_init__(self):
        if self.pair_count < 1:
            raise ArgumentError(f"pair_count must be >= 1, got {self.pair_count}")
        if self.ratio_threshold < 1.0:
            raise ArgumentError(
                f"ratio_threshold must be >= 1, got {self.ratio_threshold}"
            )


@dataclass
class MetricReport:
    """Per-image metric values plus the alignment used to compute them."""

    absrel: float
    sqrel: float
    rmse: float
    delta1: float
    esr: float
    ecsr: float
    ord: float
    scale: float
    shift: float
    valid_pixels: int

    @classmethod
    def csv_header(cls):
        return ",".join(f.name for f in fields(cls))

    def csv_row(self):
        parts = []
        for f in fields(self):
            value = getattr(self, f.name)
            parts.append(str(value) if f.type is int else format(float(value), ".12g"))
        return ",".join(parts)


def align_lsq(pred, gt, mask=None):
    """Least-squares scale/shift alignment of pred onto gt.

    Solves min_{s,t} sum (s * pred + t - gt)^2 over the masked pixels via
    the closed-form 2x2 normal equations. Returns (scale, shift,
    aligned_map). A constant prediction over the mask has no unique
    solution and raises AlignmentError.
    """
    if mask is None:
        m = pred.valid() & gt.valid()
    else:
        m = mask.data if isinstance(mask, BinaryMask) else np.asarray(mask, dtype=bool)
        m = m & pred.valid() & gt.valid()
    if m.shape != pred.data.shape or pred.data.shape != gt.data.shape:
        raise ArgumentError("pred, gt and mask must share one shape")
    p = pred.data[m].astype(np.float64)
    g = gt.data[m].astype(np.float64)
    n = p.shape[0]
    if n < 2:
        raise AlignmentError(f"alignment needs at least 2 pixels, got {n}")
    sum_p = p.sum()
    sum_g = g.sum()
    sum_pp = (p * p).sum()
    sum_pg = (p * g).sum()
    det = n * sum_pp - sum_p * sum_p
    if p.max() == p.min() or det <= 0:
        raise AlignmentError("prediction is constant over the mask")
    scale = (n * sum_pg - sum_p * sum_g) / det
    shift = (sum_g - scale * sum_p) / n
    aligned = DepthMap(scale * pred.data + shift, pred.valid_mask)
    return float(scale), float(shift), aligned


def canny(image, low=100.0, high=200.0, sigma=1.4):
    """Classic Canny edge mask of an image.

    Works on the 0-255 luminance scale: Gaussian smoothing, Sobel
    gradients, non-maximum suppression quantized to four directions,
    then double-threshold hysteresis (8-connected weak components are
    kept when they touch a strong pixel).
    """
    if not 0.0 <= low < high:
        raise ArgumentError(f"thresholds must satisfy 0 <= low < high, got {low}, {high}")
    lum = luminance(image) * 255.0
    smoothed = gaussian_blur(lum, sigma)
    gx, gy = sobel_gradients(smoothed)
    mag = np.hypot(gx, gy)

    # Quantize the gradient direction to horizontal / vertical / the two
    # diagonals, then compare against the two neighbors along it. The
    # asymmetric tie-break (> on the negative side, >= on the positive)
    # keeps exactly one pixel of a two-wide plateau.
    angle = np.mod(np.arctan2(gy, gx), np.pi)
    bins = np.zeros(mag.shape, dtype=np.uint8)
    bins[(angle >= np.pi / 8) & (angle < 3 * np.pi / 8)] = 1
    bins[(angle >= 3 * np.pi / 8) & (angle < 5 * np.pi / 8)] = 2
    bins[(angle >= 5 * np.pi / 8) & (angle < 7 * np.pi / 8)] = 3

    padded = np.pad(mag, 1, mode="edge")

    def shifted(dy, dx):
        return padded[1 + dy : 1 + dy + mag.shape[0], 1 + dx : 1 + dx + mag.shape[1]]

    # Neighbor offsets along the gradient direction, negative side first.
    neighbor_pairs = {
        0: ((0, -1), (0, 1)),
        1: ((-1, 1), (1, -1)),
        2: ((-1, 0), (1, 0)),
        3: ((-1, -1), (1, 1)),
    }
    keep = np.zeros(mag.shape, dtype=bool)
    for b, ((ny0, nx0), (ny1, nx1)) in neighbor_pairs.items():
        sel = bins == b
        keep |= sel & (mag > shifted(ny0, nx0)) & (mag >= shifted(ny1, nx1))

    weak = keep & (mag >= low)
    strong = keep & (mag >= high)
    if not strong.any():
        return BinaryMask(np.zeros(mag.shape, dtype=bool))
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    kept_labels = np.unique(labels[strong])
    return BinaryMask(np.isin(labels, kept_labels) & weak)


def _masked_sqrel(d, dstar, mask):
    if not mask.any():
        return math.nan
    dd = d[mask]
    gg = dstar[mask]
    return float(np.mean((dd - gg) ** 2 / gg))


def compute_metrics(
    pred,
    gt,
    edge_mask=None,
    canny_mask=None,
    ord_config=None,
    align=True,
):
    """Evaluate a predicted depth map against ground truth.

    Ground truth must be positive on its valid pixels. With ``align``
    the prediction is first scale/shift aligned by least squares and
    every metric (masked ones included) uses the aligned map. ESR and
    EcSR need their masks; without one the metric is NaN. ORD samples
    point pairs with the edge-guided sampler (reusing ``edge_mask``) and
    labels them on gt and on the (aligned) prediction.
    """
    if pred.data.shape != gt.data.shape:
        raise ArgumentError(
            f"pred shape {pred.data.shape} does not match gt shape {gt.data.shape}"
        )
    ord_config = ord_config or OrdConfig()
    valid = pred.valid() & gt.valid() & np.isfinite(gt.data) & (gt.data > 0)
    n_valid = int(valid.sum())
    nan_report = MetricReport(
        absrel=math.nan,
        sqrel=math.nan,
        rmse=math.nan,
        delta1=math.nan,
        esr=math.nan,
        ecsr=math.nan,
        ord=math.nan,
        scale=math.nan,
        shift=math.nan,
        valid_pixels=n_valid,
    )
    if n_valid == 0:
        return nan_report

    if align:
        try:
            scale, shift, aligned = align_lsq(pred, gt, BinaryMask(valid))
        except AlignmentError:
            return nan_report
    else:
        scale, shift, aligned = 1.0, 0.0, pred

    d = aligned.data[valid]
    dstar = gt.data[valid]
    absrel = float(np.mean(np.abs(d - dstar) / dstar))
    sqrel = float(np.mean((d - dstar) ** 2 / dstar))
    rmse = float(np.sqrt(np.mean((d - dstar) ** 2)))
    # Ratios are meaningless for non-positive predictions; those pixels
    # count as outliers.
    pos = d > 0
    ratio = np.ones_like(d)
    ratio[pos] = np.maximum(d[pos] / dstar[pos], dstar[pos] / d[pos])
    delta1 = float(np.mean(pos & (ratio < DELTA_THRESHOLD)))

    esr = math.nan
    if edge_mask is not None:
        esr = _masked_sqrel(aligned.data, gt.data, edge_mask.data & valid)
    ecsr = math.nan
    if canny_mask is not None:
        ecsr = _masked_sqrel(aligned.data, gt.data, canny_mask.data & valid)

    ord_value = math.nan
    sample_mask = edge_mask.data if edge_mask is not None else np.zeros(valid.shape, bool)
    pairs = sample_pairs_edge_guided(
        gt,
        sample_mask & valid,
        ord_config.pair_count,
        ratio_threshold=ord_config.ratio_threshold,
        seed=ord_config.seed,
    )
    usable = [p for p in pairs if valid[p.p0] and valid[p.p1]]
    if usable:
        disagreements = 0
        for pair in usable:
            pred_label = ordinal_label(
                aligned.data[pair.p0], aligned.data[pair.p1], ord_config.ratio_threshold
            )
            if pred_label != pair.label:
                disagreements += 1
        ord_value = disagreements / len(usable)

    return MetricReport(
        absrel=absrel,
        sqrel=sqrel,
        rmse=rmse,
        delta1=delta1,
        esr=esr,
        ecsr=ecsr,
        ord=ord_value,
        scale=scale,
        shift=shift,
        valid_pixels=n_valid,
    )
