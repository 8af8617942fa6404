import fs from "fs";
import path from "path";
import { describe, expect, it } from "vitest";
import { readFlo, readPfm, readPng } from "../src/codecs.js";
import { loadCheckpoint } from "../src/checkpoint.js";
import { MissingInputError, UsageError } from "../src/errors.js";
import { exportDepth, exportEdges, exportFlow, exportGroup } from "../src/exporter.js";
import { parseManifest } from "../src/manifest.js";
import {
  DEPTH_CHECKPOINT,
  EDGE_CHECKPOINT,
  FLOW_CHECKPOINT,
  tmpDir,
  writeTestPng,
} from "./helpers.js";

const depthCk = loadCheckpoint(DEPTH_CHECKPOINT, "depth");
const edgeCk = loadCheckpoint(EDGE_CHECKPOINT, "edges");
const flowCk = loadCheckpoint(FLOW_CHECKPOINT, "flow");

function inputImages(dir: string, count: number, size = 40): string[] {
  const images: string[] = [];
  for (let i = 0; i < count; i++) {
    const p = path.join(dir, `scene${i}.png`);
    writeTestPng(p, 11 + i, size, size);
    images.push(p);
  }
  return images;
}

describe("depth export", () => {
  it("writes one PFM per image per resolution and pins the checkpoint", async () => {
    const dir = tmpDir();
    const images = inputImages(dir, 2);
    const out = path.join(dir, "out");
    const result = await exportDepth({
      images,
      checkpoint: depthCk,
      resolutions: [
        [20, 14],
        [32, 32],
      ],
      outDir: out,
    });
    expect(result.outputs).toHaveLength(4);
    for (const file of result.outputs) expect(fs.existsSync(file)).toBe(true);
    const small = readPfm(path.join(out, "scene0_20x14.pfm"));
    expect(small.width).toBe(20);
    expect(small.height).toBe(14);
    for (const v of small.data) expect(v).toBeGreaterThan(0);

    const manifest = parseManifest(result.manifestPath);
    expect(manifest.scalars.get("kind")).toBe("depth");
    expect(manifest.scalars.get("model")).toBe("ridge-depth-v1");
    expect(manifest.scalars.get("checkpoint-sha256")).toBe(depthCk.sha256);
    expect(manifest.scalars.get("depth-space")).toBe("converted-from-disparity");
    expect(manifest.scalars.get("resolutions")).toBe("20x14,32x32");
    expect(manifest.inputs).toEqual(images);
    expect(manifest.outputs).toEqual([
      "scene0_20x14.pfm",
      "scene0_32x32.pfm",
      "scene1_20x14.pfm",
      "scene1_32x32.pfm",
    ]);
  });

  it("re-exports bit-identically", async () => {
    const dir = tmpDir();
    const images = inputImages(dir, 2, 36);
    const runA = path.join(dir, "a");
    const runB = path.join(dir, "b");
    const a = await exportDepth({ images, checkpoint: depthCk, resolutions: [[24, 24]], outDir: runA, jobs: 1 });
    const b = await exportDepth({ images, checkpoint: depthCk, resolutions: [[24, 24]], outDir: runB, jobs: 3 });
    for (let i = 0; i < a.outputs.length; i++) {
      expect(fs.readFileSync(a.outputs[i]).equals(fs.readFileSync(b.outputs[i]))).toBe(true);
    }
  });

  it("rejects colliding stems and missing inputs", async () => {
    const dir = tmpDir();
    const sub = path.join(dir, "sub");
    fs.mkdirSync(sub);
    writeTestPng(path.join(dir, "scene.png"), 1, 16, 16);
    writeTestPng(path.join(sub, "scene.png"), 2, 16, 16);
    await expect(
      exportDepth({
        images: [path.join(dir, "scene.png"), path.join(sub, "scene.png")],
        checkpoint: depthCk,
        resolutions: [[16, 16]],
        outDir: path.join(dir, "out"),
      }),
    ).rejects.toThrow(UsageError);
    await expect(
      exportDepth({
        images: [path.join(dir, "nope.png")],
        checkpoint: depthCk,
        resolutions: [[16, 16]],
        outDir: path.join(dir, "out"),
      }),
    ).rejects.toThrow(MissingInputError);
  });
});

describe("edge export", () => {
  it("writes a normalized PFM and a PNG preview per image", async () => {
    const dir = tmpDir();
    const images = inputImages(dir, 1, 48);
    const out = path.join(dir, "out");
    const result = await exportEdges({ images, checkpoint: edgeCk, outDir: out });
    const edge = readPfm(path.join(out, "scene0_edge.pfm"));
    for (const v of edge.data) {
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThanOrEqual(1);
    }
    const preview = readPng(path.join(out, "scene0_edge.png"));
    expect(preview.height).toBe(48);
    expect(preview.width).toBe(48);
    const manifest = parseManifest(result.manifestPath);
    expect(manifest.scalars.get("nine-patch")).toBe("false");
    expect(manifest.outputs).toEqual(["scene0_edge.pfm", "scene0_edge.png"]);
  });

  it("records nine-patch mode and keeps values in range", async () => {
    const dir = tmpDir();
    const images = inputImages(dir, 1, 54);
    const out = path.join(dir, "out");
    const result = await exportEdges({ images, checkpoint: edgeCk, outDir: out, ninePatch: true });
    const manifest = parseManifest(result.manifestPath);
    expect(manifest.scalars.get("nine-patch")).toBe("true");
    const edge = readPfm(path.join(out, "scene0_edge.pfm"));
    expect(edge.height).toBe(54);
    for (const v of edge.data) {
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThanOrEqual(1);
    }
  });
});

describe("flow export", () => {
  it("maps an identical pair to sub-pixel flow everywhere", async () => {
    const dir = tmpDir();
    writeTestPng(path.join(dir, "frame_a.png"), 21, 32, 32);
    fs.copyFileSync(path.join(dir, "frame_a.png"), path.join(dir, "frame_b.png"));
    const out = path.join(dir, "out");
    const result = await exportFlow({
      pairs: [[path.join(dir, "frame_b.png"), path.join(dir, "frame_a.png")]],
      checkpoint: flowCk,
      outDir: out,
    });
    expect(result.outputs).toEqual([path.join(out, "frame_b_frame_a.flo")]);
    const flow = readFlo(result.outputs[0]);
    let small = 0;
    for (let i = 0; i < flow.dx.length; i++) {
      if (Math.hypot(flow.dx[i], flow.dy[i]) < 0.5) small++;
    }
    expect(small / flow.dx.length).toBeGreaterThanOrEqual(0.99);
    const manifest = parseManifest(result.manifestPath);
    expect(manifest.inputs).toEqual([`${path.join(dir, "frame_b.png")}:${path.join(dir, "frame_a.png")}`]);
  });

  it("rejects pairs whose outputs collide", async () => {
    const dir = tmpDir();
    writeTestPng(path.join(dir, "a.png"), 1, 16, 16);
    writeTestPng(path.join(dir, "b.png"), 2, 16, 16);
    await expect(
      exportFlow({
        pairs: [
          [path.join(dir, "a.png"), path.join(dir, "b.png")],
          [path.join(dir, "a.png"), path.join(dir, "b.png")],
        ],
        checkpoint: flowCk,
        outDir: path.join(dir, "out"),
      }),
    ).rejects.toThrow(/collide/);
  });
});

describe("group export", () => {
  it("writes the training layout at the working resolution", async () => {
    const dir = tmpDir();
    const images = inputImages(dir, 2, 48);
    const out = path.join(dir, "out");
    const result = await exportGroup({
      images,
      depthCheckpoint: depthCk,
      flowCheckpoint: flowCk,
      scales: [24, 32, 40],
      outDir: out,
    });
    for (let g = 0; g < 2; g++) {
      const group = path.join(out, `group_00${g}`);
      for (let s = 1; s <= 3; s++) {
        const depth = readPfm(path.join(group, `d${s}.pfm`));
        expect(depth.height).toBe(24);
        expect(depth.width).toBe(24);
      }
      for (let s = 2; s <= 3; s++) {
        const flow = readFlo(path.join(group, `f${s}.flo`));
        expect(flow.height).toBe(24);
        expect(flow.width).toBe(24);
      }
    }
    const manifest = parseManifest(result.manifestPath);
    expect(manifest.scalars.get("scales")).toBe("24,32,40");
    expect(manifest.scalars.get("flow-model")).toBe("block-flow-v1");
    expect(manifest.scalars.get("flow-checkpoint-sha256")).toBe(flowCk.sha256);
    expect(manifest.outputs).toContain("group_001/f3.flo");
  });

  it("requires at least two strictly increasing scales", async () => {
    const dir = tmpDir();
    const images = inputImages(dir, 1, 16);
    await expect(
      exportGroup({
        images,
        depthCheckpoint: depthCk,
        flowCheckpoint: flowCk,
        scales: [24],
        outDir: path.join(dir, "out"),
      }),
    ).rejects.toThrow(/two scales/);
    await expect(
      exportGroup({
        images,
        depthCheckpoint: depthCk,
        flowCheckpoint: flowCk,
        scales: [24, 24],
        outDir: path.join(dir, "out"),
      }),
    ).rejects.toThrow(/increasing/);
  });
});
