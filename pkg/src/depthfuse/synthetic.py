"""Seeded synthetic scenes and estimator stand-ins.

Everything here is deterministic given a seed. The scenes carry sharp
ground-truth depth with one clean vertical boundary whose column is
recorded, so edge sharpness can be measured as a 10-90% rise distance
across that boundary. The stand-ins mimic the failure modes of real
monocular estimators at desk scale: blurred depth for the plain image,
sharp-but-distorted depth for edge-derived inputs. Toy dataset writers
materialize fusion pairs and scale groups in the on-disk layouts the
trainers consume.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import fileio
from .edges import luminance
from .errors import ArgumentError
from .ops import edge_to_image, gaussian_blur
from .types import BinaryMask, DepthMap, EdgeMap, FlowField, Image

DEFAULT_NEAR = 2.0
DEFAULT_FAR = 8.0


@dataclass
class SyntheticScene:
    """A rendered scene with sharp ground-truth depth.

    ``step_column`` is the column index of the vertical depth boundary:
    the step lies between columns step_column - 1 and step_column on
    every row, with a guaranteed depth contrast.
    """

    image: Image
    depth: DepthMap
    boundaries: BinaryMask
    step_column: int


def _smooth_field(rng, height, width, amplitude):
    """Low-frequency sinusoid field in [-amplitude, amplitude]."""
    fy = rng.uniform(0.5, 2.5)
    fx = rng.uniform(0.5, 2.5)
    py = rng.uniform(0.0, 2.0 * np.pi)
    px = rng.uniform(0.0, 2.0 * np.pi)
    ys = np.arange(height)[:, None] / height
    xs = np.arange(width)[None, :] / width
    return amplitude * np.sin(2.0 * np.pi * fy * ys + py) * np.cos(
        2.0 * np.pi * fx * xs + px
    )


def _band_cuts(rng, extent, bands):
    """Sorted interior cut positions splitting [0, extent) into bands."""
    if bands <= 1:
        return []
    cuts = set()
    while len(cuts) < bands - 1:
        cuts.add(int(rng.integers(extent // (bands * 2) + 1, extent - 1)))
    return sorted(cuts)


def _fill_bands(rng, target, column_slice, cuts, lo, hi):
    """Assign one random depth from [lo, hi] per horizontal band."""
    height = target.shape[0]
    edges = [0] + cuts + [height]
    for y0, y1 in zip(edges[:-1], edges[1:]):
        target[y0:y1, column_slice] = rng.uniform(lo, hi)


def make_scene(
    seed=0,
    height=96,
    width=128,
    bands=3,
    d_near=DEFAULT_NEAR,
    d_far=DEFAULT_FAR,
    texture=0.02,
):
    """Build a seeded scene: banded sharp depth plus a shaded image.

    The depth map splits at a vertical boundary (all left bands strictly
    nearer than all right bands, so every row crossing the boundary sees
    a large step) and each side into horizontal bands. The image shades
    nearer surfaces brighter and adds a faint smooth texture, so image
    gradients align with depth boundaries.
    """
    if height < 16 or width < 32:
        raise ArgumentError("scenes need at least 16x32 pixels")
    if not d_near < d_far:
        raise ArgumentError(f"need d_near < d_far, got {d_near} >= {d_far}")
    rng = np.random.default_rng(seed)
    span = d_far - d_near
    jitter = width // 8
    step_column = int(width // 2 + rng.integers(-jitter, jitter + 1))

    depth = np.empty((height, width), dtype=np.float64)
    left_cuts = _band_cuts(rng, height, bands)
    right_cuts = _band_cuts(rng, height, bands)
    _fill_bands(rng, depth, slice(0, step_column), left_cuts, d_near, d_near + 0.3 * span)
    _fill_bands(rng, depth, slice(step_column, width), right_cuts, d_far - 0.3 * span, d_far)

    boundary = np.zeros((height, width), dtype=bool)
    boundary[:, 1:] |= depth[:, 1:] != depth[:, :-1]
    boundary[1:, :] |= depth[1:, :] != depth[:-1, :]

    shade = 1.0 - (depth - d_near) / span
    lum = 0.2 + 0.6 * shade + _smooth_field(rng, height, width, texture)
    lum = np.clip(lum, 0.0, 1.0)
    image = np.stack(
        [
            np.clip(lum * 1.02, 0.0, 1.0),
            lum,
            np.clip(lum * 0.98, 0.0, 1.0),
        ],
        axis=2,
    )
    return SyntheticScene(
        image=Image(image),
        depth=DepthMap(depth),
        boundaries=BinaryMask(boundary),
        step_column=step_column,
    )


def _crossing(q, level):
    """Interpolated position where a profile first reaches ``level``."""
    above = np.nonzero(q >= level)[0]
    if above.size == 0:
        return None
    i = int(above[0])
    if i == 0:
        return 0.0
    q0, q1 = q[i - 1], q[i]
    if q1 == q0:
        return float(i)
    return (i - 1) + (level - q0) / (q1 - q0)


def step_rise_distance(depth, column, window=12, lo=0.1, hi=0.9):
    """Mean 10-90% rise distance (pixels) across a vertical boundary.

    For each row, the profile around ``column`` is normalized by its end
    plateaus and the distance between the interpolated ``lo`` and ``hi``
    crossings is measured. Rows whose plateau contrast is too small are
    skipped; at least one row must survive.
    """
    data = depth.data
    x0 = max(window, min(int(column), data.shape[1] - window))
    profile = data[:, x0 - window : x0 + window]
    left = profile[:, :2].mean(axis=1)
    right = profile[:, -2:].mean(axis=1)
    amp = right - left
    floor = 0.05 * max(abs(float(data.max() - data.min())), 1e-12)
    distances = []
    for r in range(data.shape[0]):
        if abs(amp[r]) < floor:
            continue
        q = (profile[r] - left[r]) / amp[r]
        x_lo = _crossing(q, lo)
        x_hi = _crossing(q, hi)
        if x_lo is None or x_hi is None or x_hi < x_lo:
            continue
        distances.append(x_hi - x_lo)
    if not distances:
        raise ArgumentError("no usable rows crossing the boundary")
    return float(np.mean(distances))


def blurred_depth(depth, sigma):
    """Gaussian-blurred copy of a depth map (estimator smoothing)."""
    return DepthMap(gaussian_blur(depth.data, sigma))


def distorted_sharp_depth(depth, seed=0, gain_range=(0.75, 1.25), bump=0.1):
    """Sharp-edged but globally distorted copy of a depth map.

    Applies a random positive affine rescale plus a smooth additive
    field: discontinuities stay pixel-sharp while absolute values drift,
    mimicking depth inferred from an edge rendering. Output stays >= 0.
    """
    rng = np.random.default_rng(seed)
    values = depth.data
    span = float(values.max() - values.min())
    gain = rng.uniform(*gain_range)
    offset = rng.uniform(0.0, 0.3 * span)
    field = _smooth_field(rng, values.shape[0], values.shape[1], bump * span)
    out = offset + gain * (values - values.min()) + (field - field.min())
    return DepthMap(out)


def pseudo_depth(image, sigma=2.0, d_near=DEFAULT_NEAR, d_far=DEFAULT_FAR):
    """Depth stand-in from an image: blurred inverse luminance.

    Brighter pixels come out nearer. The blur models the soft boundaries
    of a real estimator, so sharper input structure yields sharper
    output depth. Values stay within [d_near, d_far].
    """
    if not d_near < d_far:
        raise ArgumentError(f"need d_near < d_far, got {d_near} >= {d_far}")
    t = gaussian_blur(1.0 - luminance(image), sigma)
    return DepthMap(d_near + (d_far - d_near) * np.clip(t, 0.0, 1.0))


def depth_from_edge_map(edge, sigma=1.0, d_near=DEFAULT_NEAR, d_far=DEFAULT_FAR):
    """Depth stand-in for an estimator fed an edge rendering.

    Edge pixels come out near, flat regions far; sharper and cleaner
    edge maps therefore yield sharper and cleaner depth.
    """
    return pseudo_depth(edge_to_image(edge), sigma=sigma, d_near=d_near, d_far=d_far)


def boundary_edge_map(scene, sigma=1.0):
    """Soft edge map derived from a scene's true region boundaries.

    Stands in for a robust learned detector: it depends only on the
    scene geometry, not on image noise.
    """
    soft = gaussian_blur(scene.boundaries.data.astype(np.float64), sigma)
    peak = soft.max()
    if peak > 0:
        soft = soft / peak
    return EdgeMap(np.clip(soft, 0.0, 1.0))


def write_fusion_pairs(root, count=8, seed=0, height=64, width=64):
    """Materialize fusion training pairs under ``root``.

    Each pair directory holds lo.pfm (blurred, structure-true) and
    hi.pfm (sharp, globally distorted), the two inputs the fusion
    trainer pairs with a guided-filter pseudo label.
    """
    os.makedirs(root, exist_ok=True)
    for i in range(count):
        scene = make_scene(seed=seed * 1000 + i, height=height, width=width)
        lo = blurred_depth(scene.depth, sigma=2.0)
        hi = distorted_sharp_depth(scene.depth, seed=seed * 1000 + i + 1)
        pair_dir = os.path.join(root, f"pair_{i:03d}")
        os.makedirs(pair_dir, exist_ok=True)
        fileio.save_depth(os.path.join(pair_dir, "lo.pfm"), lo)
        fileio.save_depth(os.path.join(pair_dir, "hi.pfm"), hi)
    return root


def write_scale_groups(root, count=8, seed=0, size=96, scale_jitter=0.08):
    """Materialize toy scale-group datasets under ``root``.

    Each group holds d1.pfm..d5.pfm: the same normalized scene depth
    blurred with a per-scale sigma and offset by a per-scale smooth
    field, plus zero flows f2.flo..f5.flo (the maps are co-registered).
    The inter-scale discrepancies stay well inside the default residual
    bound so a trained network can cancel them.
    """
    os.makedirs(root, exist_ok=True)
    for i in range(count):
        rng = np.random.default_rng(seed * 1000 + i)
        scene = make_scene(seed=seed * 1000 + i, height=size, width=size)
        base = scene.depth.data
        base = 0.2 + 0.8 * (base - base.min()) / (base.max() - base.min())
        group_dir = os.path.join(root, f"group_{i:03d}")
        os.makedirs(group_dir, exist_ok=True)
        zero_flow = np.zeros((size, size, 2), dtype=np.float64)
        for s in range(1, 6):
            sigma = 2.0 - 0.35 * (s - 1)
            bump = _smooth_field(rng, size, size, scale_jitter) if s > 1 else 0.0
            d_s = np.clip(gaussian_blur(base, sigma) + bump, 0.0, None)
            fileio.save_depth(os.path.join(group_dir, f"d{s}.pfm"), DepthMap(d_s))
            if s >= 2:
                fileio.write_flo(
                    os.path.join(group_dir, f"f{s}.flo"), FlowField(zero_flow)
                )
    return root


def _main(argv=None):
    import argparse

    parser = argparse.ArgumentParser(
        prog="python -m depthfuse.synthetic",
        description="Write a synthetic toy dataset for the trainers.",
    )
    parser.add_argument("kind", choices=("fusion-pairs", "scale-groups"))
    parser.add_argument("out", help="output dataset directory")
    parser.add_argument("--count", type=int, default=8)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--size", type=int, default=None)
    args = parser.parse_args(argv)
    if args.kind == "fusion-pairs":
        size = args.size or 64
        write_fusion_pairs(args.out, count=args.count, seed=args.seed, height=size, width=size)
    else:
        write_scale_groups(args.out, count=args.count, seed=args.seed, size=args.size or 96)
    return 0


if __name__ == "__main__":
    raise SystemExit(_main())
