"""Command-line interface.

Subcommands: edges, pipeline, eval, degrade, train-lfm, train-dcm.
Every subcommand accepts ``--config FILE`` holding plain ``key=value``
lines (blank lines and ``#`` comments ignored); explicit flags override
config values. A pipeline run's manifest is itself a valid config file,
so ``depthfuse pipeline --config <out>/manifest.txt`` replays the run.

Exit codes: 0 success, 2 usage error, 3 missing input, 4 runtime error.
"""

import argparse
import os
import subprocess
import sys

import numpy as np

from . import fileio
from .dcm import DcmTrainConfig, train_dcm
from .edges import HybridEdgeConfig, binarize, edge_highlight
from .errors import ArgumentError, DepthFuseError
from .flow import FlowProviderConfig
from .guided import GuidedFilterParams
from .lfm import LfmTrainConfig, train_lfm
from .metrics import MetricReport, OrdConfig, canny, compute_metrics
from .ops import DEGRADE_KINDS, degrade, edge_to_image
from .pipeline import (
    MODES,
    PipelineOptions,
    compute_edge_map,
    file_sha256,
    parse_edge_source,
    run_pipeline,
    write_outputs,
)
from .types import BinaryMask, Image
from .weights import load_weights

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_RUNTIME = 4


class MissingInputError(Exception):
    """An input path named by the user does not exist."""


def _load_config(path):
    if not os.path.exists(path):
        raise MissingInputError(path)
    values = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ArgumentError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def _parse_bool(value):
    lowered = str(value).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ArgumentError(f"expected a boolean, got {value!r}")


class _Options:
    """Merged view of flags and config values for one subcommand."""

    def __init__(self, args, allowed):
        self.args = args
        self.config = _load_config(args.config) if args.config else {}
        unknown = set(self.config) - set(allowed) - {"version"}
        if unknown:
            raise ArgumentError(
                f"unknown config keys: {', '.join(sorted(unknown))}"
            )

    def get(self, key, default=None, cast=str):
        flag = getattr(self.args, key.replace("-", "_"))
        if flag is not None:
            return flag
        if key in self.config:
            value = self.config[key]
            try:
                return cast(value) if cast is not _parse_bool else _parse_bool(value)
            except (TypeError, ValueError) as exc:
                raise ArgumentError(f"config key {key}: bad value {value!r}") from exc
        return default


def _require(path, what):
    if path is None:
        raise ArgumentError(f"{what} is required")
    if not os.path.exists(path):
        raise MissingInputError(path)
    return path


def _manifest_lines(title, entries, hashes=()):
    lines = [f"# {title}"]
    for key, value in entries:
        lines.append(f"{key}={value}")
    for key, path in hashes:
        lines.append(f"# sha256 {key}={file_sha256(path)}")
    return "\n".join(lines) + "\n"


def _print_written(paths):
    for path in paths:
        print(f"wrote {path}")


# ---------------------------------------------------------------- edges

_EDGES_KEYS = ("image", "out", "edge-source", "n-root", "binarize-threshold")


def cmd_edges(args):
    opt = _Options(args, _EDGES_KEYS)
    image_path = _require(opt.get("image"), "--image")
    out_dir = opt.get("out")
    if out_dir is None:
        raise ArgumentError("--out is required")
    source = opt.get("edge-source", "sobel")
    config = HybridEdgeConfig(
        n_root=opt.get("n-root", 2, int),
        binarize_threshold=opt.get("binarize-threshold", 0.3, float),
    )
    kind, edge_path = parse_edge_source(source)
    if edge_path is not None:
        _require(edge_path, "edge source file")

    image = fileio.load_image(image_path)
    edge = compute_edge_map(image, source, config)
    mask = binarize(edge, config.binarize_threshold)
    highlighted = edge_highlight(image, mask)

    os.makedirs(out_dir, exist_ok=True)
    paths = {
        name: os.path.join(out_dir, name)
        for name in ("edge.pfm", "edge.png", "mask.png", "image_eh.png", "manifest.txt")
    }
    fileio.save_edge(paths["edge.pfm"], edge)
    fileio.save_image(paths["edge.png"], edge_to_image(edge))
    fileio.save_image(
        paths["mask.png"],
        Image(np.repeat(mask.data[:, :, None].astype(np.float64), 3, axis=2)),
    )
    fileio.save_image(paths["image_eh.png"], highlighted)
    hashes = [("image", image_path)]
    if edge_path is not None:
        hashes.append(("edge-source-file", edge_path))
    fileio.write_text(
        paths["manifest.txt"],
        _manifest_lines(
            "edge extraction manifest",
            [
                ("edge-source", source),
                ("n-root", config.n_root),
                ("binarize-threshold", repr(config.binarize_threshold)),
                ("image", image_path),
                ("out", out_dir),
            ],
            hashes,
        ),
    )
    _print_written(paths.values())
    return EXIT_OK


# ------------------------------------------------------------- pipeline

_PIPELINE_KEYS = (
    "image",
    "depth",
    "depth-edge",
    "depth-eh",
    "out",
    "mode",
    "edge-source",
    "n-root",
    "binarize-threshold",
    "gf-radius",
    "gf-eps",
    "residual-scale",
    "seed",
    "lfm-weights",
    "dcm-weights",
    "provider-cmd",
)


def cmd_pipeline(args):
    opt = _Options(args, _PIPELINE_KEYS)
    image_path = opt.get("image")
    depth_path = opt.get("depth")
    d_e_path = opt.get("depth-edge")
    d_eh_path = opt.get("depth-eh")
    out_dir = opt.get("out")
    for value, name in (
        (image_path, "--image"),
        (depth_path, "--depth"),
        (d_e_path, "--depth-edge"),
        (d_eh_path, "--depth-eh"),
        (out_dir, "--out"),
    ):
        if value is None:
            raise ArgumentError(f"{name} is required")

    provider_cmd = opt.get("provider-cmd")
    depth_paths = (depth_path, d_e_path, d_eh_path)
    if provider_cmd and not all(os.path.exists(p) for p in depth_paths):
        command = provider_cmd.format(
            image=image_path,
            depth=depth_path,
            depth_edge=d_e_path,
            depth_eh=d_eh_path,
            out=out_dir,
        )
        proc = subprocess.run(command, shell=True)
        if proc.returncode != 0:
            raise DepthFuseError(
                f"provider command failed with exit code {proc.returncode}"
            )

    _require(image_path, "--image")
    for path in depth_paths:
        _require(path, "depth input")

    source = opt.get("edge-source", "sobel")
    _, edge_file = parse_edge_source(source)
    if edge_file is not None:
        _require(edge_file, "edge source file")

    lfm_path = opt.get("lfm-weights")
    dcm_path = opt.get("dcm-weights")
    lfm_weights = load_weights(_require(lfm_path, "--lfm-weights")) if lfm_path else None
    dcm_weights = load_weights(_require(dcm_path, "--dcm-weights")) if dcm_path else None

    image = fileio.load_image(image_path)
    d = fileio.load_depth(depth_path)
    d_e = fileio.load_depth(d_e_path)
    d_eh = fileio.load_depth(d_eh_path)

    gf_radius = opt.get("gf-radius", None, int)
    gf_eps = opt.get("gf-eps", None, float)
    if gf_radius is None:
        params = GuidedFilterParams.for_width(d.width, eps=gf_eps or 1e-12)
    else:
        params = GuidedFilterParams(radius=gf_radius, eps=gf_eps or 1e-12)

    options = PipelineOptions(
        mode=opt.get("mode", "i"),
        edge_source=source,
        edge_config=HybridEdgeConfig(
            n_root=opt.get("n-root", 2, int),
            binarize_threshold=opt.get("binarize-threshold", 0.3, float),
        ),
        gf_params=params,
        lfm_weights=lfm_weights,
        dcm_weights=dcm_weights,
        residual_scale=opt.get("residual-scale", 0.2, float),
        seed=opt.get("seed", 0, int),
    )
    result = run_pipeline(image, d, d_e, d_eh, options)
    for line in result.warnings:
        print(f"warning: {line}", file=sys.stderr)

    inputs = {
        "image": image_path,
        "depth": depth_path,
        "depth-edge": d_e_path,
        "depth-eh": d_eh_path,
    }
    if lfm_path:
        inputs["lfm-weights"] = lfm_path
    if dcm_path:
        inputs["dcm-weights"] = dcm_path
    extra_hashes = {"edge-source-file": edge_file} if edge_file else None
    paths = write_outputs(result, out_dir, options, inputs, extra_hashes)
    _print_written(paths.values())
    return EXIT_OK


# ----------------------------------------------------------------- eval

_EVAL_KEYS = (
    "pred-dir",
    "gt-dir",
    "image-dir",
    "edge-mask-dir",
    "align",
    "pair-count",
    "ratio-threshold",
    "ord-seed",
    "canny-low",
    "canny-high",
    "metrics-out",
)


_METRIC_FIELDS = tuple(MetricReport.csv_header().split(","))


def _metric_values(report):
    return [float(getattr(report, name)) for name in _METRIC_FIELDS]


def cmd_eval(args):
    opt = _Options(args, _EVAL_KEYS)
    pred_dir = _require(opt.get("pred-dir"), "--pred-dir")
    gt_dir = _require(opt.get("gt-dir"), "--gt-dir")
    image_dir = opt.get("image-dir")
    mask_dir = opt.get("edge-mask-dir")
    if image_dir:
        _require(image_dir, "--image-dir")
    if mask_dir:
        _require(mask_dir, "--edge-mask-dir")
    align = opt.get("align", True, _parse_bool)
    ord_config = OrdConfig(
        pair_count=opt.get("pair-count", 5000, int),
        ratio_threshold=opt.get("ratio-threshold", 1.03, float),
        seed=opt.get("ord-seed", 0, int),
    )
    canny_low = opt.get("canny-low", 100.0, float)
    canny_high = opt.get("canny-high", 200.0, float)

    names = sorted(f for f in os.listdir(pred_dir) if f.endswith(".pfm"))
    if not names:
        print(f"error: no .pfm files in {pred_dir}", file=sys.stderr)
        return EXIT_MISSING

    lines = ["image," + MetricReport.csv_header()]
    rows = []
    for name in names:
        stem = name[: -len(".pfm")]
        gt_path = os.path.join(gt_dir, name)
        if not os.path.exists(gt_path):
            print(f"warning: {name} has no ground-truth pair, skipped", file=sys.stderr)
            continue
        try:
            pred = fileio.load_depth(os.path.join(pred_dir, name))
            gt = fileio.load_depth(gt_path)
            edge_mask = None
            if mask_dir:
                mask_path = os.path.join(mask_dir, name)
                if os.path.exists(mask_path):
                    edge_mask = BinaryMask(fileio.read_pfm(mask_path) >= 0.5)
            canny_mask = None
            if image_dir:
                image_path = os.path.join(image_dir, stem + ".png")
                if os.path.exists(image_path):
                    canny_mask = canny(
                        fileio.load_image(image_path), low=canny_low, high=canny_high
                    )
            report = compute_metrics(
                pred,
                gt,
                edge_mask=edge_mask,
                canny_mask=canny_mask,
                ord_config=ord_config,
                align=align,
            )
        except (DepthFuseError, OSError) as exc:
            print(f"warning: skipping {name}: {exc}", file=sys.stderr)
            continue
        rows.append(_metric_values(report))
        lines.append(f"{stem},{report.csv_row()}")

    if not rows:
        print("error: every prediction/ground-truth pair failed", file=sys.stderr)
        return EXIT_RUNTIME
    means = np.asarray(rows, dtype=np.float64).mean(axis=0)
    lines.append("mean," + ",".join(format(v, ".12g") for v in means))
    table = "\n".join(lines) + "\n"
    print(table, end="")
    out_path = opt.get("metrics-out")
    if out_path:
        fileio.write_text(out_path, table)
    return EXIT_OK


# -------------------------------------------------------------- degrade

_DEGRADE_KEYS = ("image", "out", "kind", "sigma", "seed")


def cmd_degrade(args):
    opt = _Options(args, _DEGRADE_KEYS)
    image_path = _require(opt.get("image"), "--image")
    out_dir = opt.get("out")
    if out_dir is None:
        raise ArgumentError("--out is required")
    kind = opt.get("kind", "gaussian-noise")
    sigma = opt.get("sigma", 0.0, float)
    seed = opt.get("seed", 0, int)

    if os.path.isdir(image_path):
        names = sorted(f for f in os.listdir(image_path) if f.endswith(".png"))
        if not names:
            raise MissingInputError(f"{image_path} contains no .png files")
        sources = [os.path.join(image_path, n) for n in names]
    else:
        sources = [image_path]

    os.makedirs(out_dir, exist_ok=True)
    written = []
    for index, src in enumerate(sources):
        image = fileio.load_image(src)
        result = degrade(image, kind, sigma, seed=seed + index)
        dst = os.path.join(out_dir, os.path.basename(src))
        fileio.save_image(dst, result)
        written.append(dst)
    manifest = os.path.join(out_dir, "manifest.txt")
    fileio.write_text(
        manifest,
        _manifest_lines(
            "degradation manifest",
            [
                ("kind", kind),
                ("sigma", repr(sigma)),
                ("seed", seed),
                ("image", image_path),
                ("out", out_dir),
            ],
            [(os.path.basename(p), p) for p in sources],
        ),
    )
    written.append(manifest)
    _print_written(written)
    return EXIT_OK


# ------------------------------------------------------------- training

_TRAIN_LFM_KEYS = (
    "dataset",
    "weights-out",
    "log-out",
    "iterations",
    "learning-rate",
    "pair-count",
    "pair-sample-count",
    "seed",
    "ratio-threshold",
    "edge-fraction",
    "ilnr-weight",
    "rank-weight",
    "rank-domain",
)


def cmd_train_lfm(args):
    opt = _Options(args, _TRAIN_LFM_KEYS)
    dataset = _require(opt.get("dataset"), "--dataset")
    weights_out = opt.get("weights-out")
    if weights_out is None:
        raise ArgumentError("--weights-out is required")
    config = LfmTrainConfig(
        learning_rate=opt.get("learning-rate", 1e-4, float),
        iterations=opt.get("iterations", 9000, int),
        pair_count=opt.get("pair-count", 3000, int),
        pair_sample_count=opt.get("pair-sample-count", 512, int),
        seed=opt.get("seed", 0, int),
        ratio_threshold=opt.get("ratio-threshold", 1.03, float),
        edge_fraction=opt.get("edge-fraction", 0.5, float),
        ilnr_weight=opt.get("ilnr-weight", 1.0, float),
        rank_weight=opt.get("rank-weight", 1.0, float),
        rank_domain=opt.get("rank-domain", "value"),
    )
    log_out = opt.get("log-out")
    _, history = train_lfm(
        dataset, config, weights_path=weights_out, log_path=log_out
    )
    if history:
        first = history[0]["total"]
        last = history[-1]["total"]
        print(f"trained {len(history)} iterations: total {first:.6g} -> {last:.6g}")
    else:
        print("trained 0 iterations: wrote initialization weights")
    written = [weights_out] + ([log_out] if log_out else [])
    _print_written(written)
    return EXIT_OK


_TRAIN_DCM_KEYS = (
    "dataset",
    "weights-out",
    "log-out",
    "iterations",
    "learning-rate",
    "batch",
    "crop",
    "alpha",
    "residual-scale",
    "consistency-weight",
    "depth-weight",
    "seed",
    "flow-kind",
    "flow-levels",
    "flow-block",
    "flow-search",
)


def cmd_train_dcm(args):
    opt = _Options(args, _TRAIN_DCM_KEYS)
    dataset = _require(opt.get("dataset"), "--dataset")
    weights_out = opt.get("weights-out")
    if weights_out is None:
        raise ArgumentError("--weights-out is required")
    flow = FlowProviderConfig(
        kind=opt.get("flow-kind", "block"),
        levels=opt.get("flow-levels", 2, int),
        block=opt.get("flow-block", 7, int),
        search=opt.get("flow-search", 4, int),
    )
    config = DcmTrainConfig(
        learning_rate=opt.get("learning-rate", 1e-4, float),
        iterations=opt.get("iterations", 50000, int),
        batch=opt.get("batch", 4, int),
        crop=opt.get("crop", 192, int),
        alpha=opt.get("alpha", 50.0, float),
        residual_scale=opt.get("residual-scale", 0.2, float),
        consistency_weight=opt.get("consistency-weight", 1.0, float),
        depth_weight=opt.get("depth-weight", 1.0, float),
        seed=opt.get("seed", 0, int),
        flow=flow,
    )
    log_out = opt.get("log-out")
    _, history = train_dcm(
        dataset, config, weights_path=weights_out, log_path=log_out
    )
    if history:
        first = history[0]["total"]
        last = history[-1]["total"]
        print(f"trained {len(history)} iterations: total {first:.6g} -> {last:.6g}")
    else:
        print("trained 0 iterations: wrote initialization weights")
    written = [weights_out] + ([log_out] if log_out else [])
    _print_written(written)
    return EXIT_OK


# ----------------------------------------------------------------- main


def _add_config_flag(parser):
    parser.add_argument("--config", help="key=value config file; flags override it")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="depthfuse",
        description="Edge-guided fusion and refinement of monocular depth maps.",
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("edges", help="compute an edge map and edge-highlighted image")
    _add_config_flag(p)
    p.add_argument("--image")
    p.add_argument("--out")
    p.add_argument("--edge-source", help="sobel, file:PATH or hybrid:PATH")
    p.add_argument("--n-root", type=int)
    p.add_argument("--binarize-threshold", type=float)
    p.set_defaults(func=cmd_edges)

    p = sub.add_parser("pipeline", help="fuse and refine one image's depth maps")
    _add_config_flag(p)
    p.add_argument("--image")
    p.add_argument("--depth")
    p.add_argument("--depth-edge")
    p.add_argument("--depth-eh")
    p.add_argument("--out")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--edge-source")
    p.add_argument("--n-root", type=int)
    p.add_argument("--binarize-threshold", type=float)
    p.add_argument("--gf-radius", type=int)
    p.add_argument("--gf-eps", type=float)
    p.add_argument("--residual-scale", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--lfm-weights")
    p.add_argument("--dcm-weights")
    p.add_argument("--provider-cmd", help="shell command producing missing depth inputs")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("eval", help="evaluate predicted depth against ground truth")
    _add_config_flag(p)
    p.add_argument("--pred-dir")
    p.add_argument("--gt-dir")
    p.add_argument("--image-dir", help="PNG images for the Canny edge metric")
    p.add_argument("--edge-mask-dir", help="PFM edge masks for the edge metric")
    p.add_argument("--align", dest="align", action="store_const", const=True)
    p.add_argument("--no-align", dest="align", action="store_const", const=False)
    p.add_argument("--pair-count", type=int)
    p.add_argument("--ratio-threshold", type=float)
    p.add_argument("--ord-seed", type=int)
    p.add_argument("--canny-low", type=float)
    p.add_argument("--canny-high", type=float)
    p.add_argument("--metrics-out")
    p.set_defaults(func=cmd_eval, align=None)

    p = sub.add_parser("degrade", help="apply reproducible image degradations")
    _add_config_flag(p)
    p.add_argument("--image", help="input PNG file or directory of PNGs")
    p.add_argument("--out")
    p.add_argument("--kind", choices=DEGRADE_KINDS)
    p.add_argument("--sigma", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("train-lfm", help="train the stage-2 fusion network")
    _add_config_flag(p)
    p.add_argument("--dataset")
    p.add_argument("--weights-out")
    p.add_argument("--log-out")
    p.add_argument("--iterations", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--pair-count", type=int)
    p.add_argument("--pair-sample-count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ratio-threshold", type=float)
    p.add_argument("--edge-fraction", type=float)
    p.add_argument("--ilnr-weight", type=float)
    p.add_argument("--rank-weight", type=float)
    p.add_argument("--rank-domain", choices=("value", "gradient"))
    p.set_defaults(func=cmd_train_lfm)

    p = sub.add_parser("train-dcm", help="train the residual refinement network")
    _add_config_flag(p)
    p.add_argument("--dataset")
    p.add_argument("--weights-out")
    p.add_argument("--log-out")
    p.add_argument("--iterations", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--crop", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--residual-scale", type=float)
    p.add_argument("--consistency-weight", type=float)
    p.add_argument("--depth-weight", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--flow-kind", choices=("identity", "block"))
    p.add_argument("--flow-levels", type=int)
    p.add_argument("--flow-block", type=int)
    p.add_argument("--flow-search", type=int)
    p.set_defaults(func=cmd_train_dcm)

    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    if getattr(args, "func", None) is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        return args.func(args)
    except MissingInputError as exc:
        print(f"error: missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except FileNotFoundError as exc:
        print(f"error: missing input: {exc.filename or exc}", file=sys.stderr)
        return EXIT_MISSING
    except ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DepthFuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
