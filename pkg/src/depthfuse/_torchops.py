"""Torch-backed networks and differentiable loss twins.

Everything torch lives here so the rest of the package imports numpy
only. The numpy losses in ``lfm``/``dcm`` are the reference
implementations; the tensor versions below must match them and are used
inside the training loops, where gradients are needed.
"""

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .errors import ArgumentError, ConfigurationError, LossError

_RANGE_EPS = 1e-12


def normalize_unit(arr):
    """Min-max normalize to [0, 1]; constant maps normalize to zeros."""
    lo = float(np.min(arr))
    hi = float(np.max(arr))
    span = hi - lo
    if span < _RANGE_EPS:
        return np.zeros_like(arr), lo, 1.0
    return (arr - lo) / span, lo, span


def t_normalize_unit(t):
    """Tensor variant of normalize_unit; stats are detached."""
    lo = t.min().detach()
    hi = t.max().detach()
    span = hi - lo
    if float(span) < _RANGE_EPS:
        return torch.zeros_like(t), lo, span.new_tensor(1.0)
    return (t - lo) / span, lo, span


def _group_norm(channels, groups):
    if channels % groups != 0:
        raise ConfigurationError(
            f"channel count {channels} is not divisible by {groups} norm groups"
        )
    return nn.GroupNorm(groups, channels)


class _FusionStream(nn.Module):
    """Single encoder stream: one stride-1 conv then stride-2 convs."""

    def __init__(self, spec):
        super().__init__()
        self.layers = nn.ModuleList()
        in_ch = 1
        for level in range(spec.depth_levels):
            out_ch = spec.base_channels * (2 ** min(level, 2))
            stride = 1 if level == 0 else 2
            self.layers.append(
                nn.Sequential(
                    nn.Conv2d(in_ch, out_ch, 3, stride=stride, padding=1),
                    _group_norm(out_ch, spec.norm_groups),
                    nn.LeakyReLU(spec.leaky_slope),
                )
            )
            in_ch = out_ch

    def forward(self, x):
        features = []
        for layer in self.layers:
            x = layer(x)
            features.append(x)
        return features


class FusionNet(nn.Module):
    """Two-stream encoder/decoder that predicts a fusion delta.

    The two inputs are min-max normalized maps; the output is a delta in
    normalized units, added to the first stream by the caller. The final
    convolution is zero-initialized, so a fresh network is the identity
    on its first input.
    """

    def __init__(self, spec):
        super().__init__()
        self.spec = spec
        self.stream_a = _FusionStream(spec)
        self.stream_b = _FusionStream(spec)
        c = spec.base_channels
        bottleneck_ch = 2 * c * (2 ** min(spec.depth_levels - 1, 2))
        self.bottleneck = nn.Sequential(
            nn.Conv2d(bottleneck_ch, c, 3, padding=1),
            _group_norm(c, spec.norm_groups),
            nn.LeakyReLU(spec.leaky_slope),
        )
        self.head = nn.Conv2d(3 * c, 1, 3, padding=1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, a, b):
        multiple = 2 ** (self.spec.depth_levels - 1)
        h, w = a.shape[-2:]
        pad_h = (-h) % multiple
        pad_w = (-w) % multiple
        if pad_h >= h or pad_w >= w:
            raise ArgumentError(
                f"map {w}x{h} too small for {self.spec.depth_levels} encoder levels"
            )
        if pad_h or pad_w:
            a = F.pad(a, (0, pad_w, 0, pad_h), mode="replicate")
            b = F.pad(b, (0, pad_w, 0, pad_h), mode="replicate")
        feats_a = self.stream_a(a)
        feats_b = self.stream_b(b)
        fused = self.bottleneck(torch.cat([feats_a[-1], feats_b[-1]], dim=1))
        up = F.interpolate(
            fused, size=a.shape[-2:], mode="bilinear", align_corners=False
        )
        delta = self.head(torch.cat([up, feats_a[0], feats_b[0]], dim=1))
        return delta[..., :h, :w]


class _ResBlock(nn.Module):
    def __init__(self, channels):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.InstanceNorm2d(channels, affine=True),
            nn.ReLU(),
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.InstanceNorm2d(channels, affine=True),
        )

    def forward(self, x):
        return x + self.body(x)


class ResidualDepthNet(nn.Module):
    """Residual predictor: strided encoder, residual blocks, deconvs.

    Takes two normalized depth maps stacked as channels and emits a
    bounded correction via a final tanh. Instance normalization is used
    everywhere except the output layer, which is zero-initialized so a
    fresh network predicts a zero residual.
    """

    def __init__(self, spec):
        super().__init__()
        c = spec.base_channels
        self.enc1 = nn.Sequential(
            nn.Conv2d(2, c, 3, stride=2, padding=1),
            nn.InstanceNorm2d(c, affine=True),
            nn.ReLU(),
        )
        self.enc2 = nn.Sequential(
            nn.Conv2d(c, 2 * c, 3, stride=2, padding=1),
            nn.InstanceNorm2d(2 * c, affine=True),
            nn.ReLU(),
        )
        self.blocks = nn.Sequential(*[_ResBlock(2 * c) for _ in range(spec.res_blocks)])
        self.dec1 = nn.Sequential(
            nn.ConvTranspose2d(2 * c, c, 4, stride=2, padding=1),
            nn.InstanceNorm2d(c, affine=True),
            nn.ReLU(),
        )
        self.dec2 = nn.Sequential(
            nn.ConvTranspose2d(2 * c, c, 4, stride=2, padding=1),
            nn.InstanceNorm2d(c, affine=True),
            nn.ReLU(),
        )
        self.head = nn.Conv2d(c + 2, 1, 3, padding=1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, x):
        h, w = x.shape[-2:]
        pad_h = (-h) % 4
        pad_w = (-w) % 4
        if pad_h >= h or pad_w >= w:
            raise ArgumentError(f"map {w}x{h} too small for the residual network")
        if pad_h or pad_w:
            x = F.pad(x, (0, pad_w, 0, pad_h), mode="reflect")
        e1 = self.enc1(x)
        e2 = self.enc2(e1)
        mid = self.blocks(e2)
        d1 = self.dec1(mid)
        d2 = self.dec2(torch.cat([d1, e1], dim=1))
        out = torch.tanh(self.head(torch.cat([d2, x], dim=1)))
        return out[..., :h, :w]


def build_fusion_net(spec, seed=0):
    torch.manual_seed(seed)
    return FusionNet(spec)


def build_residual_net(spec, seed=0):
    torch.manual_seed(seed)
    return ResidualDepthNet(spec)


def module_to_weights(module):
    """Snapshot a module's state dict as {name: float32 numpy array}."""
    return {
        name: tensor.detach().cpu().numpy().astype(np.float32)
        for name, tensor in module.state_dict().items()
    }


def load_module_weights(module, tensors):
    """Load a {name: array} mapping into a module, strictly."""
    state = {}
    for name, value in tensors.items():
        state[name] = torch.from_numpy(np.ascontiguousarray(value, dtype=np.float32))
    try:
        module.load_state_dict(state, strict=True)
    except RuntimeError as exc:
        raise ConfigurationError(f"weights do not match the network: {exc}") from None
    return module


def t_ilnr(pred, gt, trim_fraction=0.1):
    """Image-level normalized regression loss (tensor twin).

    gt is trimmed of its lowest and highest ``trim_fraction`` values
    before computing the normalization statistics; the normalized gt is
    the regression target for every pixel.
    """
    flat_gt = gt.reshape(-1)
    n = flat_gt.numel()
    k = int(trim_fraction * n)
    core = torch.sort(flat_gt).values
    core = core[k : n - k]
    if core.numel() < 2:
        raise LossError("too few gt values left after trimming")
    mu = core.mean()
    sigma = torch.sqrt(((core - mu) ** 2).mean())
    if float(sigma) <= 0.0:
        raise LossError("gt variance is zero after trimming")
    target = (gt - mu) / sigma
    main = (pred - target).abs().mean()
    soft = (torch.tanh(pred / 100.0) - torch.tanh(target / 100.0)).abs().mean()
    return main + soft


def t_ranking(pred, index0, index1, labels):
    """Ranking loss twin over precomputed flat pair indices."""
    flat = pred.reshape(-1)
    diff = flat[index0] - flat[index1]
    ordered = labels != 0
    loss = torch.where(
        ordered, F.softplus(-labels.to(diff.dtype) * diff), diff * diff
    )
    return loss.mean()


def t_ssi_trim(pred, gt, trim_fraction=0.2):
    """Scale/shift-invariant trimmed MAE (tensor twin)."""
    p = pred.reshape(-1)
    g = gt.reshape(-1)
    n = p.numel()
    if n < 2:
        raise LossError("ssi loss needs at least 2 pixels")
    sum_p = p.sum()
    sum_g = g.sum()
    sum_pp = (p * p).sum()
    sum_pg = (p * g).sum()
    det = n * sum_pp - sum_p * sum_p
    if bool(p.max() == p.min()) or float(det.detach()) <= 0.0:
        raise LossError("prediction is constant; alignment is undefined")
    scale = (n * sum_pg - sum_p * sum_g) / det
    shift = (sum_g - scale * sum_p) / n
    residual = (scale * p + shift - g).abs()
    keep = n - int(trim_fraction * n)
    if keep < 1:
        raise LossError("trim fraction leaves no residuals")
    kept = torch.sort(residual).values[:keep]
    return kept.mean()


def t_warp_backward(t, flow_x, flow_y):
    """Differentiable backward warp of a (H, W) tensor, border-clamped."""
    h, w = t.shape
    if h < 2 or w < 2:
        raise ArgumentError("warp needs maps of at least 2x2")
    ys = torch.arange(h, dtype=t.dtype).view(h, 1).expand(h, w)
    xs = torch.arange(w, dtype=t.dtype).view(1, w).expand(h, w)
    gx = (xs + flow_x) * (2.0 / (w - 1)) - 1.0
    gy = (ys + flow_y) * (2.0 / (h - 1)) - 1.0
    grid = torch.stack([gx, gy], dim=-1).unsqueeze(0)
    sampled = F.grid_sample(
        t.view(1, 1, h, w),
        grid,
        mode="bilinear",
        padding_mode="border",
        align_corners=True,
    )
    return sampled.view(h, w)


def t_consistency(depths, flows, occlusion):
    """Cross-scale consistency loss over updated depth tensors.

    ``depths`` is the list [D_1..D_S]; ``flows`` and ``occlusion`` hold,
    for each s >= 2, the flow (x, y) tensors mapping scale s onto s-1 and
    the precomputed occlusion weight map M_s. Each term is the mean of
    M_s * |D_s - warp(D_{s-1})|.
    """
    total = None
    for s in range(1, len(depths)):
        fx, fy = flows[s - 1]
        warped = t_warp_backward(depths[s - 1], fx, fy)
        term = (occlusion[s - 1] * (depths[s] - warped).abs()).mean()
        total = term if total is None else total + term
    return total


def t_sobel_magnitude(t):
    """Sobel gradient magnitude of a (H, W) tensor, replicated borders."""
    kx = t.new_tensor([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
    ky = kx.t()
    padded = F.pad(t.view(1, 1, *t.shape), (1, 1, 1, 1), mode="replicate")
    gx = F.conv2d(padded, kx.view(1, 1, 3, 3))
    gy = F.conv2d(padded, ky.view(1, 1, 3, 3))
    return torch.sqrt(gx * gx + gy * gy + 1e-20).view(*t.shape)
