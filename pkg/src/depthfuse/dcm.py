"""Residual refinement that reconciles depth across inference scales.

A scale group holds the depth maps a monocular estimator produced for
the same picture at five increasing resolutions, resampled onto one
working grid. The residual network sees two maps at a time and predicts
a bounded correction; at inference the final output is
D_out = D_fuse + DCM(D_fuse, D). During training the group is updated
sequentially (each scale against its already-updated predecessor) and
supervised with an occlusion-weighted cross-scale consistency loss plus
a scale/shift-invariant anchor loss against the coarsest map.
"""

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from . import fileio
from .errors import ArgumentError, LossError, ProviderError, TrainingError
from .flow import FlowProviderConfig, estimate_flow
from .metrics import align_lsq
from .ops import colorize, resize_bilinear, warp_backward
from .types import DepthMap

SCALE_COUNT = 5
SSI_TRIM = 0.2
DEFAULT_SCALES = (384, 544, 704, 864, 1024)


@dataclass
class DcmNetSpec:
    """Architecture of the residual network: two stride-2 encoder convs,
    ``res_blocks`` residual blocks, two transposed convs with encoder
    skips, instance normalization everywhere except the zero-initialized
    tanh output layer."""

    base_channels: int = 32
    down_stages: int = 2
    res_blocks: int = 5
    up_stages: int = 2

    def __post_init__(self):
        if self.base_channels < 1 or self.res_blocks < 1:
            raise ArgumentError("base_channels and res_blocks must be >= 1")
        if self.down_stages != 2 or self.up_stages != 2:
            raise ArgumentError("the residual network is fixed at 2 down and 2 up stages")


@dataclass
class DcmTrainConfig:
    """Training hyperparameters for the residual network."""

    learning_rate: float = 1e-4
    iterations: int = 50000
    batch: int = 4
    crop: int = 192
    alpha: float = 50.0
    residual_scale: float = 0.2
    consistency_weight: float = 1.0
    depth_weight: float = 1.0
    seed: int = 0
    flow: FlowProviderConfig = field(default_factory=FlowProviderConfig)

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ArgumentError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.iterations < 0:
            raise ArgumentError(f"iterations must be >= 0, got {self.iterations}")
        if self.batch < 1:
            raise ArgumentError(f"batch must be >= 1, got {self.batch}")
        if self.crop < 8:
            raise ArgumentError(f"crop must be >= 8, got {self.crop}")
        if self.alpha <= 0:
            raise ArgumentError(f"alpha must be > 0, got {self.alpha}")
        if not 0 < self.residual_scale:
            raise ArgumentError(f"residual_scale must be > 0, got {self.residual_scale}")


@dataclass
class ScaleGroup:
    """Five depth maps of one scene on a common grid.

    ``visualized`` holds the colorized renderings used for flow
    estimation and occlusion weighting (computed on construction when
    omitted); ``flows`` holds, for each scale s in 2..5, the flow from
    scale s onto s-1, and stays None until a flow provider fills it.
    """

    depths: list
    visualized: list = None
    flows: list = None

    def __post_init__(self):
        if len(self.depths) != SCALE_COUNT:
            raise ArgumentError(f"a scale group needs {SCALE_COUNT} depth maps")
        shape = self.depths[0].data.shape
        for d in self.depths:
            if d.data.shape != shape:
                raise ArgumentError("scale group depths must share one shape")
        if self.visualized is None:
            self.visualized = [colorize(d) for d in self.depths]
        elif len(self.visualized) != SCALE_COUNT:
            raise ArgumentError(f"expected {SCALE_COUNT} visualized maps")
        if self.flows is not None and len(self.flows) != SCALE_COUNT - 1:
            raise ArgumentError(f"expected {SCALE_COUNT - 1} flows")

    @property
    def height(self):
        return self.depths[0].height

    @property
    def width(self):
        return self.depths[0].width


def make_scale_group(image, depth_provider, scales=DEFAULT_SCALES, working_resolution=None):
    """Run a depth provider at several image scales and build a group.

    The image is resized to each square scale, the provider maps it to a
    DepthMap, and all maps are resampled to the square working
    resolution (the smallest scale by default). Flows stay unset; use
    ``ensure_flows``.
    """
    if len(scales) != SCALE_COUNT:
        raise ArgumentError(f"expected {SCALE_COUNT} scales, got {len(scales)}")
    if any(a >= b for a, b in zip(scales, scales[1:])):
        raise ArgumentError("scales must be strictly increasing")
    working = int(working_resolution or min(scales))
    depths = []
    for index, scale in enumerate(scales):
        scaled = resize_bilinear(image, int(scale), int(scale))
        try:
            depth = depth_provider(scaled)
        except Exception as exc:
            raise ProviderError(f"depth provider failed at scale {index + 1}: {exc}") from exc
        if not isinstance(depth, DepthMap):
            raise ProviderError(
                f"depth provider returned {type(depth).__name__} at scale {index + 1}, "
                "expected DepthMap"
            )
        depths.append(resize_bilinear(depth, working, working))
    return ScaleGroup(depths=depths)


def ensure_flows(group, config=None):
    """Fill in the group's cross-scale flows with a provider."""
    if group.flows is not None:
        return group
    config = config or FlowProviderConfig()
    flows = [
        estimate_flow(group.visualized[s], group.visualized[s - 1], config)
        for s in range(1, SCALE_COUNT)
    ]
    return ScaleGroup(depths=group.depths, visualized=group.visualized, flows=flows)


def occlusion_weights(v_s, v_prev_warped, alpha=50.0):
    """Per-pixel consistency weights M = exp(-alpha * ||V_s - V_hat||^2).

    The squared Euclidean color distance is summed over the channels, so
    a constant difference of 0.1 in one channel gives exp(-alpha * 0.01).
    """
    if v_s.data.shape != v_prev_warped.data.shape:
        raise ArgumentError("visualized maps must share one shape")
    if alpha <= 0:
        raise ArgumentError(f"alpha must be > 0, got {alpha}")
    dist2 = ((v_s.data - v_prev_warped.data) ** 2).sum(axis=2)
    return np.exp(-alpha * dist2)


def _group_weights(group, alpha):
    """Occlusion weights M_s for s = 2..5 from the fixed visualizations."""
    weights = []
    for s in range(1, SCALE_COUNT):
        v_hat = warp_backward(group.visualized[s - 1], group.flows[s - 1])
        weights.append(occlusion_weights(group.visualized[s], v_hat, alpha))
    return weights


def consistency_loss(group, flow=None, alpha=50.0):
    """Occlusion-weighted cross-scale consistency loss of a group.

    Each term s in 2..5 warps D_{s-1} onto scale s's grid and takes the
    mean of M_s * |D_s - warp(D_{s-1})|; the loss is the sum of the four
    terms. Flows come from the group, or are estimated with the given
    provider config when the group has none.
    """
    if group.flows is None:
        if flow is None:
            raise ArgumentError("group has no flows and no flow provider was given")
        group = ensure_flows(group, flow)
    weights = _group_weights(group, alpha)
    total = 0.0
    for s in range(1, SCALE_COUNT):
        warped = warp_backward(group.depths[s - 1], group.flows[s - 1])
        diff = np.abs(group.depths[s].data - warped.data)
        total += float((weights[s - 1] * diff).mean())
    return total


def _residual_fn_for(weights, spec, residual_scale):
    """Closure computing the network residual for a pair of depth maps.

    weights=None yields a function that returns exact zeros without
    touching torch; otherwise the network is built and loaded once and
    reused across calls.
    """
    if weights is None:
        def zero_residual(d_a, d_b):
            if d_a.data.shape != d_b.data.shape:
                raise ArgumentError(
                    f"shape mismatch: {d_a.data.shape} vs {d_b.data.shape}"
                )
            return np.zeros_like(d_a.data)

        return zero_residual

    import torch

    from . import _torchops

    net = _torchops.build_residual_net(spec or DcmNetSpec())
    _torchops.load_module_weights(net, weights)
    net.eval()

    def net_residual(d_a, d_b):
        if d_a.data.shape != d_b.data.shape:
            raise ArgumentError(f"shape mismatch: {d_a.data.shape} vs {d_b.data.shape}")
        a_norm, _, _ = _torchops.normalize_unit(d_a.data)
        b_norm, _, _ = _torchops.normalize_unit(d_b.data)
        stacked = np.stack([a_norm, b_norm])[None]
        with torch.no_grad():
            out = net(torch.from_numpy(stacked).float())
        return residual_scale * out[0, 0].numpy().astype(np.float64)

    return net_residual


def dcm_forward(d_a, d_b, weights=None, spec=None, residual_scale=0.2):
    """Residual the network predicts for a pair of depth maps.

    Both maps are min-max normalized before entering the network; the
    output is residual_scale * tanh(...), so its magnitude never exceeds
    residual_scale. weights=None (and any all-zero weight set) yields an
    exactly zero residual.
    """
    return _residual_fn_for(weights, spec, residual_scale)(d_a, d_b)


def refine(d_fuse, d_original, weights=None, spec=None, residual_scale=0.2):
    """Inference-time refinement: D_out = D_fuse + DCM(D_fuse, D).

    |D_out - D_fuse| never exceeds residual_scale, pixel for pixel.
    """
    residual = dcm_forward(d_fuse, d_original, weights, spec, residual_scale)
    out = d_fuse.data + residual
    # When tanh saturates the residual to exactly +-residual_scale, the
    # sum can round one ulp past the bound; walk those pixels back to
    # the nearest representable value inside it.
    diff = out - d_fuse.data
    over = np.abs(diff) > residual_scale
    while over.any():
        out[over] = np.nextafter(out[over], d_fuse.data[over])
        diff = out - d_fuse.data
        over = np.abs(diff) > residual_scale
    return DepthMap(out)


def sequential_update(group, weights=None, spec=None, residual_scale=0.2, residual_fn=None):
    """Update a group scale by scale against updated predecessors.

    D_1 stays unchanged; for s = 2..5 (in order) the residual of
    (D_s, updated D_{s-1}) is added to D_s. ``residual_fn`` overrides the
    network for instrumentation; it receives two DepthMaps and must
    return an array. Visualizations are recomputed for the new maps;
    flows carry over unchanged.
    """
    if residual_fn is None:
        residual_fn = _residual_fn_for(weights, spec, residual_scale)

    updated = [group.depths[0]]
    for s in range(1, SCALE_COUNT):
        residual = residual_fn(group.depths[s], updated[s - 1])
        updated.append(DepthMap(group.depths[s].data + residual))
    return ScaleGroup(depths=updated, flows=group.flows)


def loss_ssi_trim(pred, gt, trim_fraction=SSI_TRIM):
    """Scale/shift-invariant trimmed mean absolute error.

    Aligns pred onto gt by least squares, then averages the absolute
    residuals after dropping the largest ``trim_fraction`` of them. Any
    pred = a * gt + b with a > 0 scores (numerically) zero.
    """
    if not 0.0 <= trim_fraction < 0.5:
        raise ArgumentError(f"trim_fraction must lie in [0, 0.5), got {trim_fraction}")
    pred_map = pred if isinstance(pred, DepthMap) else DepthMap(pred)
    gt_map = gt if isinstance(gt, DepthMap) else DepthMap(gt)
    try:
        _, _, aligned = align_lsq(pred_map, gt_map)
    except Exception as exc:
        raise LossError(f"alignment failed: {exc}") from exc
    residual = np.sort(np.abs(aligned.data - gt_map.data), axis=None)
    n = residual.size
    keep = n - int(trim_fraction * n)
    if keep < 1:
        raise LossError("trim fraction leaves no residuals")
    return float(residual[:keep].mean())


class _TrainingGroup:
    """One loaded scale group with its fixed flows and occlusion maps."""

    def __init__(self, name, group, occlusion):
        self.name = name
        self.group = group
        self.occlusion = occlusion


def load_training_groups(dataset_dir, config=None):
    """Load scale groups from ``<group>/d1.pfm..d5.pfm`` directories.

    Optional f2.flo..f5.flo files supply the cross-scale flows; missing
    flows are estimated from the colorized maps with the configured
    provider. Occlusion weights are computed once per group and held
    fixed during training.
    """
    config = config or DcmTrainConfig()
    entries = sorted(
        d
        for d in os.listdir(dataset_dir)
        if os.path.isdir(os.path.join(dataset_dir, d))
    )
    if not entries:
        raise ArgumentError(f"no scale group directories under {dataset_dir}")
    groups = []
    for name in entries:
        base = os.path.join(dataset_dir, name)
        depths = [
            fileio.load_depth(os.path.join(base, f"d{s}.pfm"))
            for s in range(1, SCALE_COUNT + 1)
        ]
        flows = None
        flo_paths = [os.path.join(base, f"f{s}.flo") for s in range(2, SCALE_COUNT + 1)]
        if all(os.path.exists(p) for p in flo_paths):
            flows = [fileio.read_flo(p) for p in flo_paths]
        group = ScaleGroup(depths=depths, flows=flows)
        group = ensure_flows(group, config.flow)
        occlusion = _group_weights(group, config.alpha)
        groups.append(_TrainingGroup(name, group, occlusion))
    return groups


def _crop_origin(rng, height, width, crop):
    ch = min(crop, height)
    cw = min(crop, width)
    y0 = int(rng.integers(0, height - ch + 1))
    x0 = int(rng.integers(0, width - cw + 1))
    return y0, x0, ch, cw


def _training_loss(sample, origin, config, net, torchops, torch):
    y0, x0, ch, cw = origin
    sl = (slice(y0, y0 + ch), slice(x0, x0 + cw))
    group = sample.group
    depths = []
    for s in range(SCALE_COUNT):
        arr = group.depths[s].data[sl]
        norm, _, _ = torchops.normalize_unit(arr)
        depths.append(
            (
                torch.from_numpy(arr).float(),
                torch.from_numpy(norm).float(),
            )
        )
    flows = [
        (
            torch.from_numpy(np.ascontiguousarray(group.flows[s].dx[sl])).float(),
            torch.from_numpy(np.ascontiguousarray(group.flows[s].dy[sl])).float(),
        )
        for s in range(SCALE_COUNT - 1)
    ]
    occl = [
        torch.from_numpy(np.ascontiguousarray(sample.occlusion[s][sl])).float()
        for s in range(SCALE_COUNT - 1)
    ]

    updated = [depths[0][0]]
    for s in range(1, SCALE_COUNT):
        prev = updated[s - 1]
        prev_norm, _, _ = torchops.t_normalize_unit(prev)
        cur, cur_norm = depths[s]
        stacked = torch.stack([cur_norm, prev_norm]).unsqueeze(0)
        residual = config.residual_scale * net(stacked)[0, 0]
        updated.append(cur + residual)

    consistency = torchops.t_consistency(updated, flows, occl)
    depth_term = None
    for s in range(1, SCALE_COUNT):
        term = torchops.t_ssi_trim(updated[s], updated[0], SSI_TRIM)
        depth_term = term if depth_term is None else depth_term + term
    total = config.consistency_weight * consistency + config.depth_weight * depth_term
    return consistency, depth_term, total


def train_dcm(dataset_dir, config=None, spec=None, weights_path=None, log_path=None):
    """Train the residual network on scale-group datasets.

    Every iteration samples ``batch`` groups (seeded), crops them, runs
    the sequential update with gradients and steps Adam on the weighted
    consistency + anchor loss. Returns (weights, history); the CSV log
    columns are iteration,consistency,depth,total. A non-finite loss
    aborts with TrainingError naming the iteration.
    """
    import torch

    from . import _torchops

    config = config or DcmTrainConfig()
    spec = spec or DcmNetSpec()
    groups = load_training_groups(dataset_dir, config)
    net = _torchops.build_residual_net(spec, seed=config.seed)
    optimizer = torch.optim.Adam(net.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed)
    history = []
    for iteration in range(config.iterations):
        optimizer.zero_grad()
        cons_sum = None
        depth_sum = None
        total_sum = None
        for _ in range(config.batch):
            sample = groups[int(rng.integers(0, len(groups)))]
            origin = _crop_origin(
                rng, sample.group.height, sample.group.width, config.crop
            )
            cons, depth_term, total = _training_loss(
                sample, origin, config, net, _torchops, torch
            )
            cons_sum = cons if cons_sum is None else cons_sum + cons
            depth_sum = depth_term if depth_sum is None else depth_sum + depth_term
            total_sum = total if total_sum is None else total_sum + total
        total_mean = total_sum / config.batch
        value = float(total_mean.detach())
        if not np.isfinite(value):
            raise TrainingError("non-finite training loss", iteration=iteration)
        total_mean.backward()
        optimizer.step()
        history.append(
            {
                "iteration": iteration,
                "consistency": float(cons_sum.detach()) / config.batch,
                "depth": float(depth_sum.detach()) / config.batch,
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
            writer.writerow(["iteration", "consistency", "depth", "total"])
            for row in history:
                writer.writerow(
                    [row["iteration"], row["consistency"], row["depth"], row["total"]]
                )
    return weights, history


def evaluate_dcm(dataset_dir, config=None, spec=None, weights=None):
    """Mean consistency loss of a weight snapshot over a dataset.

    Runs the (numpy) sequential update on every full group and averages
    ``consistency_loss``; used to compare snapshots against the fresh
    zero-residual network.
    """
    config = config or DcmTrainConfig()
    spec = spec or DcmNetSpec()
    groups = load_training_groups(dataset_dir, config)
    total = 0.0
    for sample in groups:
        updated = sequential_update(
            sample.group, weights, spec, config.residual_scale
        )
        updated = ScaleGroup(
            depths=updated.depths,
            visualized=sample.group.visualized,
            flows=sample.group.flows,
        )
        total += consistency_loss(updated, alpha=config.alpha)
    return total / len(groups)
