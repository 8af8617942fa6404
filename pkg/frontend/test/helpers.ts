import crypto from "crypto";
import fs from "fs";
import os from "os";
import path from "path";
import { spawnSync } from "child_process";
import { fileURLToPath } from "url";
import { writePng } from "../src/codecs.js";
import { Rgb } from "../src/grid.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));

export const CHECKPOINT_DIR = path.join(HERE, "..", "checkpoints");
export const DEPTH_CHECKPOINT = path.join(CHECKPOINT_DIR, "ridge-depth-v1.json");
export const EDGE_CHECKPOINT = path.join(CHECKPOINT_DIR, "sobel-edges-v1.json");
export const FLOW_CHECKPOINT = path.join(CHECKPOINT_DIR, "block-flow-v1.json");
export const CLI = path.join(HERE, "..", "dist", "cli.js");

export function tmpDir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), "dfx-"));
}

export function sha256(buf: Buffer | Uint8Array): string {
  return crypto.createHash("sha256").update(buf).digest("hex");
}

// Deterministic PRNG so test images are stable across runs and platforms.
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

// Blocky scene with a gradient wash: flat regions separated by hard edges.
export function testImage(seed: number, height: number, width: number): Rgb {
  const rand = mulberry32(seed);
  const data = new Float64Array(height * width * 3);
  const blocks = 4;
  const colors: number[][] = [];
  for (let i = 0; i < blocks * blocks; i++) {
    colors.push([rand(), rand(), rand()]);
  }
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const by = Math.min(blocks - 1, Math.floor((y / height) * blocks));
      const bx = Math.min(blocks - 1, Math.floor((x / width) * blocks));
      const color = colors[by * blocks + bx];
      const wash = 0.15 * (x / Math.max(1, width - 1));
      for (let c = 0; c < 3; c++) {
        const v = 0.7 * color[c] + 0.15 + wash * (c === 0 ? 1 : 0.5);
        data[(y * width + x) * 3 + c] = v > 1 ? 1 : v;
      }
    }
  }
  return { height, width, data };
}

export function uniformImage(value: number, height: number, width: number): Rgb {
  const data = new Float64Array(height * width * 3);
  data.fill(value);
  return { height, width, data };
}

export function writeTestPng(filePath: string, seed: number, height: number, width: number): void {
  writePng(filePath, testImage(seed, height, width));
}

export interface PyResult {
  status: number;
  stdout: string;
  stderr: string;
}

export function python(code: string): PyResult {
  const proc = spawnSync("python3", ["-c", code], { encoding: "utf-8", timeout: 240_000 });
  return { status: proc.status ?? -1, stdout: proc.stdout ?? "", stderr: proc.stderr ?? "" };
}

export function runCli(args: string[], timeout = 120_000): PyResult {
  const proc = spawnSync("node", [CLI, ...args], { encoding: "utf-8", timeout });
  return { status: proc.status ?? -1, stdout: proc.stdout ?? "", stderr: proc.stderr ?? "" };
}
