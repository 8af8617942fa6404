"""Layered fusion of an original depth map with its edge-sharpened twin.

Stage 1 filters the edge-highlighted depth map with the edge depth map
as guide; stage 2 merges the original map with the stage-1 result,
either with a second guided filter or with a small two-stream network
trained against guided-filter pseudo labels. Training pairs a
low-detail map with a high-detail one rendered from the same scene and
supervises with the normalized regression loss plus an edge-guided
ranking loss.
"""

import csv
import os
from dataclasses import dataclass

import numpy as np

from . import fileio
from .edges import gradient_magnitude
from .errors import ArgumentError, LossError, TrainingError
from .guided import GuidedFilterParams, guided_filter
from .ops import resize_bilinear
from .ranking import (
    DEFAULT_RATIO_THRESHOLD,
    loss_ranking,
    sample_pairs_edge_guided,
)
from .types import DepthMap

ILNR_TRIM = 0.1


@dataclass
class FusionNetSpec:
    """Architecture of the stage-2 fusion network.

    Two encoder streams of ``depth_levels`` convolutions each (the first
    at stride 1, the rest at stride 2), one bottleneck convolution over
    the concatenated streams and one zero-initialized output head: with
    the defaults, ten learnable layers.
    """

    base_channels: int = 32
    depth_levels: int = 4
    norm_groups: int = 8
    leaky_slope: float = 0.2

    def __post_init__(self):
        if self.base_channels < 1 or self.depth_levels < 2:
            raise ArgumentError("base_channels must be >= 1 and depth_levels >= 2")
        if self.norm_groups < 1:
            raise ArgumentError("norm_groups must be >= 1")


@dataclass
class LfmTrainConfig:
    """Training hyperparameters for the stage-2 fusion network."""

    learning_rate: float = 1e-4
    iterations: int = 9000
    pair_count: int = 3000
    pair_sample_count: int = 512
    seed: int = 0
    ratio_threshold: float = DEFAULT_RATIO_THRESHOLD
    edge_fraction: float = 0.5
    ilnr_weight: float = 1.0
    rank_weight: float = 1.0
    rank_domain: str = "value"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ArgumentError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.iterations < 0:
            raise ArgumentError(f"iterations must be >= 0, got {self.iterations}")
        if self.pair_count < 1 or self.pair_sample_count < 1:
            raise ArgumentError("pair_count and pair_sample_count must be >= 1")
        if self.rank_domain not in ("value", "gradient"):
            raise ArgumentError(
                f"rank_domain must be 'value' or 'gradient', got {self.rank_domain!r}"
            )


def fuse_stage1(d_edge, d_eh, params=None, swap_roles=False):
    """Stage-1 fusion: filter the edge-highlighted map guided by the
    edge map (pass ``swap_roles`` to flip the assignment for ablations).
    """
    params = params or GuidedFilterParams.for_width(d_edge.width)
    if swap_roles:
        return guided_filter(d_eh, d_edge, params)
    return guided_filter(d_edge, d_eh, params)


def _snap_range(data, lo, hi):
    # Affinely map data onto [lo, hi]; constant maps collapse to lo.
    dmin = data.min()
    dmax = data.max()
    if dmax - dmin < 1e-12:
        return np.full_like(data, lo)
    return (data - dmin) * ((hi - lo) / (dmax - dmin)) + lo


def fuse_stage2(d_original, d_stage1, weights=None, spec=None, mode="network", params=None):
    """Stage-2 fusion of the original map with the stage-1 result.

    mode "network" runs the two-stream fusion network and affinely snaps
    its output back onto the original map's value range (so depth stays
    nonnegative and range-consistent); an untrained zero-initialized
    network returns ``d_original`` bit-exactly, weights=None behaves the
    same. mode "guided" reproduces the all-filter variant:
    guided_filter(guide=d_stage1, src=d_original).
    """
    if d_original.data.shape != d_stage1.data.shape:
        raise ArgumentError(
            f"shape mismatch: {d_original.data.shape} vs {d_stage1.data.shape}"
        )
    if mode == "guided":
        params = params or GuidedFilterParams.for_width(d_original.width)
        return guided_filter(d_stage1, d_original, params)
    if mode != "network":
        raise ArgumentError(f"unknown fuse_stage2 mode {mode!r}")
    spec = spec or FusionNetSpec()
    delta = _fusion_delta(d_original.data, d_stage1.data, weights, spec)
    if not delta.any():
        return DepthMap(d_original.data.copy())
    lo = d_original.data.min()
    hi = d_original.data.max()
    span = hi - lo if hi - lo >= 1e-12 else 1.0
    fused = d_original.data + span * delta
    return DepthMap(_snap_range(fused, lo, hi))


def _fusion_delta(a_arr, b_arr, weights, spec):
    """Normalized-unit delta predicted by the fusion network."""
    if weights is None:
        return np.zeros_like(a_arr)
    import torch

    from . import _torchops

    net = _torchops.build_fusion_net(spec)
    _torchops.load_module_weights(net, weights)
    net.eval()
    a_norm, _, _ = _torchops.normalize_unit(a_arr)
    b_norm, _, _ = _torchops.normalize_unit(b_arr)
    with torch.no_grad():
        delta = net(
            torch.from_numpy(a_norm[None, None]).float(),
            torch.from_numpy(b_norm[None, None]).float(),
        )
    return delta[0, 0].numpy().astype(np.float64)


def make_pseudo_pair(depth_lo, depth_hi, params=None):
    """Build a training pair and its guided-filter pseudo label.

    The low-detail map is resampled onto the high-detail map's grid,
    then the label is guided_filter(guide=depth_hi, src=depth_lo): the
    label keeps the low-detail map's structure with the high-detail
    map's edges.
    """
    params = params or GuidedFilterParams.for_width(depth_hi.width)
    if depth_lo.data.shape != depth_hi.data.shape:
        depth_lo = resize_bilinear(depth_lo, depth_hi.width, depth_hi.height)
    label = guided_filter(depth_hi, depth_lo, params)
    return (depth_lo, depth_hi), label


def loss_ilnr(pred, gt, trim_fraction=ILNR_TRIM):
    """Image-level normalized regression loss.

    gt is z-scored with statistics from its trimmed values (the lowest
    and highest ``trim_fraction`` are dropped for the statistics only);
    the loss is mean |pred - gt_norm| plus the mean absolute difference
    of tanh(value / 100) terms. Scaling gt by a positive constant leaves
    the loss unchanged.
    """
    pred_arr = pred.data if isinstance(pred, DepthMap) else np.asarray(pred, np.float64)
    gt_arr = gt.data if isinstance(gt, DepthMap) else np.asarray(gt, np.float64)
    if pred_arr.shape != gt_arr.shape:
        raise ArgumentError(f"shape mismatch: {pred_arr.shape} vs {gt_arr.shape}")
    flat = np.sort(gt_arr, axis=None)
    n = flat.size
    k = int(trim_fraction * n)
    core = flat[k : n - k]
    if core.size < 2:
        raise LossError("too few gt values left after trimming")
    mu = core.mean()
    sigma = np.sqrt(((core - mu) ** 2).mean())
    if sigma <= 0.0:
        raise LossError("gt variance is zero after trimming")
    target = (gt_arr - mu) / sigma
    main = np.abs(pred_arr - target).mean()
    soft = np.abs(np.tanh(pred_arr / 100.0) - np.tanh(target / 100.0)).mean()
    return float(main + soft)


class _TrainingPair:
    """One loaded training sample with its presampled point pairs."""

    def __init__(self, name, lo, hi, label, pairs, rank_map):
        self.name = name
        self.lo = lo
        self.hi = hi
        self.label = label
        self.pairs = pairs
        self.rank_map = rank_map


def _load_pair_dir(path, config, index):
    lo = fileio.load_depth(os.path.join(path, "lo.pfm"))
    hi = fileio.load_depth(os.path.join(path, "hi.pfm"))
    label_path = os.path.join(path, "label.pfm")
    if os.path.exists(label_path):
        label = fileio.load_depth(label_path)
        if lo.data.shape != hi.data.shape:
            lo = resize_bilinear(lo, hi.width, hi.height)
        if label.data.shape != hi.data.shape:
            raise ArgumentError(
                f"label shape {label.data.shape} does not match hi map in {path}"
            )
    else:
        (lo, hi), label = make_pseudo_pair(lo, hi)
    edges_path = os.path.join(path, "edges.pfm")
    if os.path.exists(edges_path):
        edge_mask = fileio.load_edge(edges_path).data >= 0.3
    else:
        edge_mask = gradient_magnitude(label.data) >= 0.3
    if config.rank_domain == "gradient":
        rank_map = gradient_magnitude(label.data)
    else:
        rank_map = label.data
    pairs = sample_pairs_edge_guided(
        DepthMap(np.maximum(rank_map, 0.0)),
        edge_mask,
        config.pair_sample_count,
        ratio_threshold=config.ratio_threshold,
        seed=config.seed + index,
        edge_fraction=config.edge_fraction,
    )
    return _TrainingPair(os.path.basename(path), lo, hi, label, pairs, rank_map)


def load_training_pairs(dataset_dir, config):
    """Load up to ``pair_count`` training pairs from a dataset directory.

    Layout: one subdirectory per pair holding lo.pfm and hi.pfm, with
    optional label.pfm (computed with the guided filter when absent) and
    edges.pfm (label gradient magnitude when absent).
    """
    entries = sorted(
        d
        for d in os.listdir(dataset_dir)
        if os.path.isdir(os.path.join(dataset_dir, d))
    )
    if not entries:
        raise ArgumentError(f"no training pair directories under {dataset_dir}")
    entries = entries[: config.pair_count]
    return [
        _load_pair_dir(os.path.join(dataset_dir, name), config, i)
        for i, name in enumerate(entries)
    ]


def _pair_tensors(sample, torch):
    i0 = np.asarray([p.p0[0] * sample.label.width + p.p0[1] for p in sample.pairs])
    i1 = np.asarray([p.p1[0] * sample.label.width + p.p1[1] for p in sample.pairs])
    labels = np.asarray([p.label for p in sample.pairs])
    return torch.from_numpy(i0), torch.from_numpy(i1), torch.from_numpy(labels)


def _forward_training(net, sample, torchops, torch):
    a_norm, _, _ = torchops.normalize_unit(sample.lo.data)
    b_norm, _, _ = torchops.normalize_unit(sample.hi.data)
    a = torch.from_numpy(a_norm[None, None]).float()
    b = torch.from_numpy(b_norm[None, None]).float()
    delta = net(a, b)[0, 0]
    return a[0, 0] + delta


def _sample_losses(net, sample, config, torchops, torch):
    pred = _forward_training(net, sample, torchops, torch)
    label_t = torch.from_numpy(sample.label.data).float()
    ilnr = torchops.t_ilnr(pred, label_t, ILNR_TRIM)
    i0, i1, labels = _pair_tensors(sample, torch)
    if config.rank_domain == "gradient":
        rank_input = torchops.t_sobel_magnitude(pred)
        peak = rank_input.max().detach()
        rank_input = rank_input / torch.clamp(peak, min=1e-12)
    else:
        rank_input = pred
    rank = torchops.t_ranking(rank_input, i0, i1, labels)
    return ilnr, rank


def train_lfm(dataset_dir, config=None, spec=None, weights_path=None, log_path=None):
    """Train the stage-2 fusion network on resolution pairs.

    Every iteration draws one pair (seeded), forwards the network and
    steps AdamW on ilnr_weight * ILNR + rank_weight * ranking. Returns
    (weights, history) where history holds one dict per iteration with
    the logged losses; the CSV log columns are iteration,ilnr,rank,total.
    A non-finite loss aborts with TrainingError naming the iteration.
    """
    import torch

    from . import _torchops

    config = config or LfmTrainConfig()
    spec = spec or FusionNetSpec()
    samples = load_training_pairs(dataset_dir, config)
    net = _torchops.build_fusion_net(spec, seed=config.seed)
    optimizer = torch.optim.AdamW(net.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)
    history = []
    for iteration in range(config.iterations):
        sample = samples[int(rng.integers(0, len(samples)))]
        optimizer.zero_grad()
        ilnr, rank = _sample_losses(net, sample, config, _torchops, torch)
        total = config.ilnr_weight * ilnr + config.rank_weight * rank
        value = float(total.detach())
        if not np.isfinite(value):
            raise TrainingError("non-finite training loss", iteration=iteration)
        total.backward()
        optimizer.step()
        history.append(
            {
                "iteration": iteration,
                "ilnr": float(ilnr.detach()),
                "rank": float(rank.detach()),
                "total": value,
            }
        )
    weights = _torchops.module_to_weights(net)
    if weights_path is not None:
        from .weights import save_weights

        save_weights(weights_path, weights)
    if log_path is not None:
        with open(log_path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["iteration", "ilnr", "rank", "total"])
            for row in history:
                writer.writerow(
                    [row["iteration"], row["ilnr"], row["rank"], row["total"]]
                )
    return weights, history


def evaluate_lfm(dataset_dir, config=None, spec=None, weights=None):
    """Mean (ilnr, rank, total) of a weight snapshot over a dataset."""
    import torch

    from . import _torchops

    config = config or LfmTrainConfig()
    spec = spec or FusionNetSpec()
    samples = load_training_pairs(dataset_dir, config)
    net = _torchops.build_fusion_net(spec, seed=config.seed)
    if weights is not None:
        _torchops.load_module_weights(net, weights)
    net.eval()
    ilnr_total = 0.0
    rank_total = 0.0
    with torch.no_grad():
        for sample in samples:
            ilnr, rank = _sample_losses(net, sample, config, _torchops, torch)
            ilnr_total += float(ilnr)
            rank_total += float(rank)
    n = len(samples)
    ilnr_mean = ilnr_total / n
    rank_mean = rank_total / n
    total = config.ilnr_weight * ilnr_mean + config.rank_weight * rank_mean
    return ilnr_mean, rank_mean, total
