// Export orchestration: run a checkpointed model over a batch of inputs
// and write PFM/.flo/PNG files plus a manifest that pins the checkpoint.
// Batches run through a small promise pool, one model instance shared by
// every worker; per-image work stays sequential.

import fs from "fs";
import path from "path";
import { Flow, readPng, writeFlo, writePfm, writePng } from "./codecs.js";
import { Checkpoint } from "./checkpoint.js";
import { ExporterError, MissingInputError, UsageError } from "./errors.js";
import { Grid, Rgb, grayToRgb, gridMax, gridMin, resizeBilinear, resizeRgb } from "./grid.js";
import { Manifest, writeManifest } from "./manifest.js";
import { predictDisparity, predictEdges, predictFlow, toDepthSpace } from "./models.js";
import { ninePatch } from "./tiling.js";

export interface ExportResult {
  manifestPath: string;
  outputs: string[];
}

export const DEFAULT_JOBS = 4;

async function mapPool<T, R>(items: T[], jobs: number, fn: (item: T, index: number) => Promise<R>): Promise<R[]> {
  const results: R[] = new Array(items.length);
  let next = 0;
  const workers = Array.from({ length: Math.max(1, Math.min(jobs, items.length)) }, async () => {
    while (true) {
      const index = next++;
      if (index >= items.length) return;
      results[index] = await fn(items[index], index);
    }
  });
  await Promise.all(workers);
  return results;
}

function stem(filePath: string): string {
  const base = path.basename(filePath);
  const dot = base.lastIndexOf(".");
  return dot > 0 ? base.slice(0, dot) : base;
}

function uniqueStems(inputs: string[]): Map<string, string> {
  const stems = new Map<string, string>();
  for (const input of inputs) {
    const s = stem(input);
    const clash = stems.get(s);
    if (clash !== undefined && clash !== input) {
      throw new UsageError(`input stems collide: ${clash} and ${input}`);
    }
    stems.set(s, input);
  }
  return stems;
}

function requireInputs(paths: string[]): void {
  for (const p of paths) {
    if (!fs.existsSync(p)) throw new MissingInputError(`missing input: ${p}`);
  }
}

// A manifest must only ever list files that exist; refuse to write one
// when any output went missing.
function assertOutputs(outDir: string, outputs: string[]): void {
  for (const name of outputs) {
    if (!fs.existsSync(path.join(outDir, name))) {
      throw new ExporterError(`export did not produce ${name}`);
    }
  }
}

function grayPreview(grid: Grid): Rgb {
  const lo = gridMin(grid);
  const hi = gridMax(grid);
  const span = hi > lo ? hi - lo : 1;
  const norm = {
    height: grid.height,
    width: grid.width,
    data: Float64Array.from(grid.data, v => (v - lo) / span),
  };
  return grayToRgb(norm);
}

export interface DepthExportOptions {
  images: string[];
  checkpoint: Checkpoint;
  resolutions: Array<[number, number]>;
  outDir: string;
  jobs?: number;
}

export async function exportDepth(options: DepthExportOptions): Promise<ExportResult> {
  const { checkpoint, resolutions } = options;
  // Manifests record these paths, so they must survive a cwd change.
  const images = options.images.map(p => path.resolve(p));
  const outDir = path.resolve(options.outDir);
  if (images.length === 0) throw new UsageError("no input images");
  if (resolutions.length === 0) throw new UsageError("no output resolutions");
  requireInputs(images);
  uniqueStems(images);
  fs.mkdirSync(outDir, { recursive: true });

  const outputs: string[] = [];
  const tasks: Array<{ image: string; width: number; height: number; name: string }> = [];
  for (const image of images) {
    for (const [width, height] of resolutions) {
      tasks.push({ image, width, height, name: `${stem(image)}_${width}x${height}.pfm` });
      outputs.push(`${stem(image)}_${width}x${height}.pfm`);
    }
  }
  await mapPool(tasks, options.jobs ?? DEFAULT_JOBS, async task => {
    const image = resizeRgb(readPng(task.image), task.height, task.width);
    const raw = predictDisparity(image, checkpoint);
    const depth = checkpoint.emits === "disparity" ? toDepthSpace(raw, checkpoint) : raw;
    writePfm(path.join(outDir, task.name), depth);
  });

  const manifest: Manifest = {
    scalars: new Map([
      ["kind", "depth"],
      ["model", checkpoint.id],
      ["checkpoint", checkpoint.path],
      ["checkpoint-sha256", checkpoint.sha256],
      ["depth-space", checkpoint.emits === "disparity" ? "converted-from-disparity" : "native-depth"],
      ["resolutions", resolutions.map(([w, h]) => `${w}x${h}`).join(",")],
      ["out", outDir],
    ]),
    inputs: images,
    outputs,
  };
  assertOutputs(outDir, outputs);
  const manifestPath = path.join(outDir, "manifest.txt");
  writeManifest(manifestPath, manifest);
  return { manifestPath, outputs: outputs.map(o => path.join(outDir, o)) };
}

export interface EdgeExportOptions {
  images: string[];
  checkpoint: Checkpoint;
  outDir: string;
  ninePatch?: boolean;
  jobs?: number;
}

export async function exportEdges(options: EdgeExportOptions): Promise<ExportResult> {
  const { checkpoint } = options;
  const images = options.images.map(p => path.resolve(p));
  const outDir = path.resolve(options.outDir);
  if (images.length === 0) throw new UsageError("no input images");
  requireInputs(images);
  uniqueStems(images);
  fs.mkdirSync(outDir, { recursive: true });

  const outputs: string[] = [];
  for (const image of images) {
    outputs.push(`${stem(image)}_edge.pfm`, `${stem(image)}_edge.png`);
  }
  await mapPool(images, options.jobs ?? DEFAULT_JOBS, async image => {
    const rgb = readPng(image);
    const edge = options.ninePatch
      ? ninePatch(rgb, tile => predictEdges(tile, checkpoint))
      : predictEdges(rgb, checkpoint);
    // Feathered seams can nudge a pixel past 1.0 by rounding; the
    // consumer rejects anything outside [0, 1].
    for (let i = 0; i < edge.data.length; i++) {
      edge.data[i] = edge.data[i] < 0 ? 0 : edge.data[i] > 1 ? 1 : edge.data[i];
    }
    writePfm(path.join(outDir, `${stem(image)}_edge.pfm`), edge);
    writePng(path.join(outDir, `${stem(image)}_edge.png`), grayToRgb(edge));
  });

  const manifest: Manifest = {
    scalars: new Map([
      ["kind", "edges"],
      ["model", checkpoint.id],
      ["checkpoint", checkpoint.path],
      ["checkpoint-sha256", checkpoint.sha256],
      ["nine-patch", options.ninePatch ? "true" : "false"],
      ["out", outDir],
    ]),
    inputs: images,
    outputs,
  };
  assertOutputs(outDir, outputs);
  const manifestPath = path.join(outDir, "manifest.txt");
  writeManifest(manifestPath, manifest);
  return { manifestPath, outputs: outputs.map(o => path.join(outDir, o)) };
}

export interface FlowExportOptions {
  pairs: Array<[string, string]>;
  checkpoint: Checkpoint;
  outDir: string;
  jobs?: number;
}

export async function exportFlow(options: FlowExportOptions): Promise<ExportResult> {
  const { checkpoint } = options;
  const pairs = options.pairs.map(
    ([a, b]) => [path.resolve(a), path.resolve(b)] as [string, string],
  );
  const outDir = path.resolve(options.outDir);
  if (pairs.length === 0) throw new UsageError("no input pairs");
  requireInputs(pairs.flat());
  fs.mkdirSync(outDir, { recursive: true });

  const outputs: string[] = [];
  const names = new Set<string>();
  for (const [target, source] of pairs) {
    const name = `${stem(target)}_${stem(source)}.flo`;
    if (names.has(name)) throw new UsageError(`pair outputs collide on ${name}`);
    names.add(name);
    outputs.push(name);
  }
  await mapPool(pairs, options.jobs ?? DEFAULT_JOBS, async (pair, index) => {
    const flow = predictFlow(readPng(pair[0]), readPng(pair[1]), checkpoint);
    writeFlo(path.join(outDir, outputs[index]), flow);
  });

  const manifest: Manifest = {
    scalars: new Map([
      ["kind", "flow"],
      ["model", checkpoint.id],
      ["checkpoint", checkpoint.path],
      ["checkpoint-sha256", checkpoint.sha256],
      ["out", outDir],
    ]),
    inputs: pairs.map(([a, b]) => `${a}:${b}`),
    outputs,
  };
  assertOutputs(outDir, outputs);
  const manifestPath = path.join(outDir, "manifest.txt");
  writeManifest(manifestPath, manifest);
  return { manifestPath, outputs: outputs.map(o => path.join(outDir, o)) };
}

export interface GroupExportOptions {
  images: string[];
  depthCheckpoint: Checkpoint;
  flowCheckpoint: Checkpoint;
  scales: number[];
  outDir: string;
  jobs?: number;
}

// Multi-resolution depth groups in the consumer's training layout:
// group_NNN/d1.pfm..dS.pfm at the smallest scale plus f2.flo..fS.flo,
// where f_s maps scale s back to scale s-1.
export async function exportGroup(options: GroupExportOptions): Promise<ExportResult> {
  const { depthCheckpoint, flowCheckpoint, scales } = options;
  const images = options.images.map(p => path.resolve(p));
  const outDir = path.resolve(options.outDir);
  if (images.length === 0) throw new UsageError("no input images");
  if (scales.length < 2) throw new UsageError("need at least two scales");
  for (let i = 1; i < scales.length; i++) {
    if (scales[i] <= scales[i - 1]) throw new UsageError("scales must be strictly increasing");
  }
  requireInputs(images);
  fs.mkdirSync(outDir, { recursive: true });

  const working = scales[0];
  const outputs: string[] = [];
  for (let g = 0; g < images.length; g++) {
    const dir = `group_${String(g).padStart(3, "0")}`;
    for (let s = 1; s <= scales.length; s++) outputs.push(`${dir}/d${s}.pfm`);
    for (let s = 2; s <= scales.length; s++) outputs.push(`${dir}/f${s}.flo`);
  }

  await mapPool(images, options.jobs ?? DEFAULT_JOBS, async (image, index) => {
    const dir = path.join(outDir, `group_${String(index).padStart(3, "0")}`);
    fs.mkdirSync(dir, { recursive: true });
    const rgb = readPng(image);
    const depths: Grid[] = [];
    for (const scale of scales) {
      const scaled = resizeRgb(rgb, scale, scale);
      const raw = predictDisparity(scaled, depthCheckpoint);
      const depth = depthCheckpoint.emits === "disparity" ? toDepthSpace(raw, depthCheckpoint) : raw;
      depths.push(resizeSquare(depth, working));
    }
    depths.forEach((depth, s) => writePfm(path.join(dir, `d${s + 1}.pfm`), depth));
    for (let s = 1; s < depths.length; s++) {
      const flow: Flow = predictFlow(
        grayPreview(depths[s]),
        grayPreview(depths[s - 1]),
        flowCheckpoint,
      );
      writeFlo(path.join(dir, `f${s + 1}.flo`), flow);
    }
  });

  const manifest: Manifest = {
    scalars: new Map([
      ["kind", "group"],
      ["model", depthCheckpoint.id],
      ["checkpoint", depthCheckpoint.path],
      ["checkpoint-sha256", depthCheckpoint.sha256],
      ["flow-model", flowCheckpoint.id],
      ["flow-checkpoint", flowCheckpoint.path],
      ["flow-checkpoint-sha256", flowCheckpoint.sha256],
      ["depth-space", depthCheckpoint.emits === "disparity" ? "converted-from-disparity" : "native-depth"],
      ["scales", scales.join(",")],
      ["out", outDir],
    ]),
    inputs: images,
    outputs,
  };
  assertOutputs(outDir, outputs);
  const manifestPath = path.join(outDir, "manifest.txt");
  writeManifest(manifestPath, manifest);
  return { manifestPath, outputs: outputs.map(o => path.join(outDir, o)) };
}

function resizeSquare(grid: Grid, size: number): Grid {
  if (grid.height === size && grid.width === size) return grid;
  return resizeBilinear(grid, size, size);
}
