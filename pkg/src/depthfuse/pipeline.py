"""End-to-end single-image refinement pipeline.

Takes an RGB image plus three pre-exported depth maps (from the plain
image, from its edge rendering, and from its edge-highlighted variant)
and produces a fused, refined depth map. The fusion variant is selected
by a one-letter mode:

  d  the edge-derived map unchanged
  e  the edge-highlighted map unchanged
  f  guided filter of the original map, guided by the edge-highlighted map
  g  guided filter of the original map, guided by the edge-derived map
  h  stage-1 fusion only (edge-highlighted filtered, guided by edge-derived)
  i  stage-1, then guided filter of the original map guided by stage-1
  j  stage-1, then the fusion network on (original, stage-1)
  n  mode j followed by residual depth refinement

Every run also computes the edge map and edge-highlighted image, and
all exported depth maps are clamped at zero (guided filtering may
overshoot slightly below zero near strong edges).
"""

import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from . import fileio
from .dcm import DcmNetSpec, refine
from .edges import (
    HybridEdgeConfig,
    binarize,
    edge_highlight,
    hybrid_fuse,
    sobel_magnitude,
)
from .errors import ArgumentError
from .guided import GuidedFilterParams, guided_filter
from .lfm import FusionNetSpec, fuse_stage1, fuse_stage2
from .ops import colorize, edge_to_image
from .types import BinaryMask, DepthMap, EdgeMap, Image

MODES = ("d", "e", "f", "g", "h", "i", "j", "n")
EDGE_SOURCES = ("sobel", "file", "hybrid")

_VERSION = "0.1.0"


def parse_edge_source(source):
    """Split an edge-source string into (kind, path).

    Accepted forms: "sobel", "file:PATH", "hybrid:PATH". The path names
    a single-channel PFM holding an externally computed edge map.
    """
    if source == "sobel":
        return "sobel", None
    for kind in ("file", "hybrid"):
        prefix = kind + ":"
        if source.startswith(prefix):
            path = source[len(prefix) :]
            if not path:
                raise ArgumentError(f"edge source {source!r} is missing a path")
            return kind, path
    raise ArgumentError(
        f"unknown edge source {source!r}; expected sobel, file:PATH or hybrid:PATH"
    )


@dataclass
class PipelineOptions:
    """Everything that determines a pipeline run besides the inputs."""

    mode: str = "i"
    edge_source: str = "sobel"
    edge_config: HybridEdgeConfig = field(default_factory=HybridEdgeConfig)
    gf_params: GuidedFilterParams | None = None
    fusion_spec: FusionNetSpec | None = None
    dcm_spec: DcmNetSpec | None = None
    lfm_weights: dict | None = None
    dcm_weights: dict | None = None
    residual_scale: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ArgumentError(
                f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}"
            )
        parse_edge_source(self.edge_source)
        if self.residual_scale <= 0:
            raise ArgumentError(
                f"residual_scale must be > 0, got {self.residual_scale}"
            )


@dataclass
class PipelineResult:
    edge: EdgeMap
    edge_mask: BinaryMask
    image_eh: Image
    d_fuse: DepthMap
    d_out: DepthMap
    warnings: list


def compute_edge_map(image, source="sobel", config=None):
    """Edge map for an image from the configured source.

    "sobel" computes the normalized gradient magnitude; "file:PATH"
    loads an external map; "hybrid:PATH" fuses the external map with the
    Sobel response via the configured root.
    """
    config = config or HybridEdgeConfig()
    kind, path = parse_edge_source(source)
    if kind == "sobel":
        return sobel_magnitude(image)
    external = fileio.load_edge(path)
    if external.data.shape != (image.height, image.width):
        raise ArgumentError(
            f"edge map {path} is {external.data.shape[1]}x{external.data.shape[0]}, "
            f"image is {image.width}x{image.height}"
        )
    if kind == "file":
        return external
    return hybrid_fuse(external, sobel_magnitude(image), config)


def fuse_depths(mode, d, d_e, d_eh, params=None, lfm_weights=None, fusion_spec=None):
    """Fused depth map for a mode; returns (map, warnings).

    The guided-filter pairings follow one rule: the more edge-detailed
    member guides, the more structure-true member is filtered.
    """
    if mode not in MODES:
        raise ArgumentError(f"unknown mode {mode!r}")
    for name, m in (("edge depth", d_e), ("edge-highlighted depth", d_eh)):
        if m.data.shape != d.data.shape:
            raise ArgumentError(f"{name} shape {m.data.shape} != depth shape {d.data.shape}")
    params = params or GuidedFilterParams.for_width(d.width)
    warnings = []
    if mode == "d":
        return DepthMap(d_e.data.copy()), warnings
    if mode == "e":
        return DepthMap(d_eh.data.copy()), warnings
    if mode == "f":
        return guided_filter(d_eh, d, params), warnings
    if mode == "g":
        return guided_filter(d_e, d, params), warnings
    stage1 = fuse_stage1(d_e, d_eh, params)
    if mode == "h":
        return stage1, warnings
    if mode == "i":
        return fuse_stage2(d, stage1, mode="guided", params=params), warnings
    if lfm_weights is None:
        warnings.append(
            "fusion network has no weights; stage 2 is the identity on the original depth"
        )
    fused = fuse_stage2(d, stage1, weights=lfm_weights, spec=fusion_spec, mode="network")
    return fused, warnings


def _clamped(depth):
    if depth.data.min() >= 0.0:
        return depth
    return DepthMap(np.maximum(depth.data, 0.0))


def run_pipeline(image, d, d_e, d_eh, options=None):
    """Run the full pipeline on loaded inputs.

    The depth maps must share one shape equal to the image's. Modes
    other than "n" return d_out == d_fuse; mode "n" adds the residual
    refinement (with a warning and a zero residual when no refinement
    weights are configured).
    """
    options = options or PipelineOptions()
    if d.data.shape != (image.height, image.width):
        raise ArgumentError(
            f"depth is {d.width}x{d.height}, image is {image.width}x{image.height}"
        )
    edge = compute_edge_map(image, options.edge_source, options.edge_config)
    mask = binarize(edge, options.edge_config.binarize_threshold)
    image_eh = edge_highlight(image, mask)
    d_fuse, warnings = fuse_depths(
        options.mode,
        d,
        d_e,
        d_eh,
        params=options.gf_params,
        lfm_weights=options.lfm_weights,
        fusion_spec=options.fusion_spec,
    )
    d_fuse = _clamped(d_fuse)
    if options.mode == "n":
        if options.dcm_weights is None:
            warnings.append("refinement network has no weights; residual is zero")
        d_out = refine(
            d_fuse,
            d,
            weights=options.dcm_weights,
            spec=options.dcm_spec,
            residual_scale=options.residual_scale,
        )
        d_out = _clamped(d_out)
    else:
        d_out = d_fuse
    return PipelineResult(
        edge=edge,
        edge_mask=mask,
        image_eh=image_eh,
        d_fuse=d_fuse,
        d_out=d_out,
        warnings=warnings,
    )


OUTPUT_FILES = (
    "edge.pfm",
    "edge.png",
    "image_eh.png",
    "d_fuse.pfm",
    "d_fuse.png",
    "d_out.pfm",
    "d_out.png",
    "manifest.txt",
)


def file_sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _manifest_text(options, inputs, params, output_dir, extra_hashes=None):
    """key=value manifest; informational hash lines are comments.

    The non-comment lines form a config-file replay of the run: feeding
    the manifest back as the config reproduces byte-identical floats.
    ``extra_hashes`` maps labels to paths that are hashed but not listed
    as config keys (the external edge file already appears inside the
    edge-source value).
    """
    lines = ["# pipeline run manifest"]
    lines.append(f"version={_VERSION}")
    lines.append(f"mode={options.mode}")
    lines.append(f"edge-source={options.edge_source}")
    lines.append(f"n-root={options.edge_config.n_root}")
    lines.append(f"binarize-threshold={options.edge_config.binarize_threshold!r}")
    lines.append(f"gf-radius={params.radius}")
    lines.append(f"gf-eps={params.eps!r}")
    lines.append(f"residual-scale={options.residual_scale!r}")
    lines.append(f"seed={options.seed}")
    lines.append(f"out={output_dir}")
    for key, path in inputs.items():
        lines.append(f"{key}={path}")
    for key, path in inputs.items():
        lines.append(f"# sha256 {key}={file_sha256(path)}")
    for key, path in (extra_hashes or {}).items():
        lines.append(f"# sha256 {key}={file_sha256(path)}")
    return "\n".join(lines) + "\n"


def write_outputs(result, output_dir, options, inputs, extra_hashes=None):
    """Write every pipeline artifact atomically into ``output_dir``.

    ``inputs`` maps manifest keys (image, depth, depth-edge, depth-eh,
    and optionally lfm-weights / dcm-weights) to the paths that were
    loaded. Returns {filename: absolute path}.
    """
    os.makedirs(output_dir, exist_ok=True)
    params = options.gf_params or GuidedFilterParams.for_width(result.d_out.width)
    paths = {name: os.path.join(output_dir, name) for name in OUTPUT_FILES}
    fileio.save_edge(paths["edge.pfm"], result.edge)
    fileio.save_image(paths["edge.png"], edge_to_image(result.edge))
    fileio.save_image(paths["image_eh.png"], result.image_eh)
    fileio.save_depth(paths["d_fuse.pfm"], result.d_fuse)
    fileio.save_image(paths["d_fuse.png"], colorize(result.d_fuse))
    fileio.save_depth(paths["d_out.pfm"], result.d_out)
    fileio.save_image(paths["d_out.png"], colorize(result.d_out))
    manifest = _manifest_text(options, inputs, params, output_dir, extra_hashes)
    fileio.write_text(paths["manifest.txt"], manifest)
    return paths
