export { FLO_MAGIC, CodecError, readPfm, writePfm, readFlo, writeFlo, readPng, writePng } from "./codecs.js";
export type { Flow } from "./codecs.js";
export { CheckpointError, loadCheckpoint } from "./checkpoint.js";
export type { Checkpoint, ModelKind } from "./checkpoint.js";
export { ExporterError, MissingInputError, UsageError } from "./errors.js";
export {
  exportDepth,
  exportEdges,
  exportFlow,
  exportGroup,
} from "./exporter.js";
export type {
  DepthExportOptions,
  EdgeExportOptions,
  FlowExportOptions,
  GroupExportOptions,
  ExportResult,
} from "./exporter.js";
export { ManifestError, parseManifest, writeManifest } from "./manifest.js";
export type { Manifest } from "./manifest.js";
export { predictDisparity, predictEdges, predictFlow, toDepthSpace } from "./models.js";
export { ninePatch } from "./tiling.js";
export { gaussianBlur, luminance, makeGrid, resizeBilinear, sobelMagnitude } from "./grid.js";
export type { Grid, Rgb } from "./grid.js";
export { run } from "./cli.js";
