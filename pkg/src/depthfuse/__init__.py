"""Edge-guided fusion and refinement of monocular depth maps.

The package turns initial depth estimates into edge-sharp, structurally
consistent maps in three stages: hybrid edge extraction, layered fusion
of edge-informed depth predictions, and residual refinement driven by a
multi-scale consistency objective. Heavy dependencies are imported
lazily, so ``import depthfuse`` stays light.
"""

from .dcm import (
    DcmNetSpec,
    DcmTrainConfig,
    ScaleGroup,
    consistency_loss,
    dcm_forward,
    evaluate_dcm,
    loss_ssi_trim,
    make_scale_group,
    occlusion_weights,
    refine,
    sequential_update,
    train_dcm,
)
from .edges import (
    HybridEdgeConfig,
    binarize,
    edge_highlight,
    hybrid_fuse,
    patched_edges,
    sobel_magnitude,
)
from .errors import (
    AlignmentError,
    ArgumentError,
    CodecError,
    ConfigurationError,
    DepthFuseError,
    LossError,
    ProviderError,
    TrainingError,
)
from .flow import FlowProviderConfig, estimate_flow
from .guided import GuidedFilterParams, box_filter, guided_filter
from .lfm import (
    FusionNetSpec,
    LfmTrainConfig,
    evaluate_lfm,
    fuse_stage1,
    fuse_stage2,
    loss_ilnr,
    make_pseudo_pair,
    train_lfm,
)
from .metrics import MetricReport, OrdConfig, align_lsq, canny, compute_metrics
from .ops import colorize, degrade, gaussian_blur, resize_bilinear, warp_backward
from .pipeline import (
    MODES,
    PipelineOptions,
    PipelineResult,
    compute_edge_map,
    fuse_depths,
    run_pipeline,
    write_outputs,
)
from .ranking import loss_ranking, ordinal_label, sample_pairs_edge_guided
from .types import BinaryMask, DepthMap, EdgeMap, FlowField, Image
from .weights import load_weights, save_weights

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "ArgumentError",
    "BinaryMask",
    "CodecError",
    "ConfigurationError",
    "DcmNetSpec",
    "DcmTrainConfig",
    "DepthFuseError",
    "DepthMap",
    "EdgeMap",
    "FlowField",
    "FlowProviderConfig",
    "FusionNetSpec",
    "GuidedFilterParams",
    "HybridEdgeConfig",
    "Image",
    "LfmTrainConfig",
    "LossError",
    "MetricReport",
    "MODES",
    "OrdConfig",
    "PipelineOptions",
    "PipelineResult",
    "ProviderError",
    "ScaleGroup",
    "TrainingError",
    "align_lsq",
    "binarize",
    "box_filter",
    "canny",
    "colorize",
    "compute_edge_map",
    "compute_metrics",
    "consistency_loss",
    "dcm_forward",
    "degrade",
    "edge_highlight",
    "estimate_flow",
    "evaluate_dcm",
    "evaluate_lfm",
    "fuse_depths",
    "fuse_stage1",
    "fuse_stage2",
    "gaussian_blur",
    "guided_filter",
    "hybrid_fuse",
    "load_weights",
    "loss_ilnr",
    "loss_ranking",
    "loss_ssi_trim",
    "make_pseudo_pair",
    "make_scale_group",
    "occlusion_weights",
    "ordinal_label",
    "patched_edges",
    "refine",
    "resize_bilinear",
    "run_pipeline",
    "sample_pairs_edge_guided",
    "save_weights",
    "sequential_update",
    "sobel_magnitude",
    "train_dcm",
    "train_lfm",
    "warp_backward",
    "write_outputs",
]
