import fs from "fs";
import path from "path";
import { describe, expect, it } from "vitest";
import { readFlo, readPfm, readPng, writeFlo, writePfm, writePng } from "../src/codecs.js";
import { makeGrid } from "../src/grid.js";
import { python, sha256, testImage, tmpDir } from "./helpers.js";

function sampleGrid(height: number, width: number) {
  const grid = makeGrid(height, width);
  for (let i = 0; i < grid.data.length; i++) {
    grid.data[i] = Math.sin(i * 0.37) * 3 + 0.5;
  }
  return grid;
}

// Digest of the float32 values in row-major top-down order, the layout
// the consumer's reader returns.
function gridDigest(grid: { height: number; width: number; data: Float64Array }) {
  const f32 = new Float32Array(grid.data.length);
  for (let i = 0; i < grid.data.length; i++) f32[i] = Math.fround(grid.data[i]);
  return sha256(new Uint8Array(f32.buffer));
}

describe("pfm", () => {
  it("round-trips through its own reader", () => {
    const dir = tmpDir();
    const grid = sampleGrid(13, 7);
    writePfm(path.join(dir, "a.pfm"), grid);
    const back = readPfm(path.join(dir, "a.pfm"));
    expect(back.height).toBe(13);
    expect(back.width).toBe(7);
    for (let i = 0; i < grid.data.length; i++) {
      expect(back.data[i]).toBe(Math.fround(grid.data[i]));
    }
  });

  it("loads in the consumer toolkit bit-exact", () => {
    const dir = tmpDir();
    const grid = sampleGrid(11, 17);
    const file = path.join(dir, "a.pfm");
    writePfm(file, grid);
    const res = python(`
import hashlib
from depthfuse import fileio
arr = fileio.read_pfm(${JSON.stringify(file)})
print(arr.shape[0], arr.shape[1], hashlib.sha256(arr.tobytes()).hexdigest())
`);
    expect(res.status, res.stderr).toBe(0);
    const [h, w, digest] = res.stdout.trim().split(" ");
    expect([h, w]).toEqual(["11", "17"]);
    expect(digest).toBe(gridDigest(grid));
  });

  it("writes the same bytes as the consumer writer", () => {
    const dir = tmpDir();
    const grid = sampleGrid(9, 9);
    const ours = path.join(dir, "ours.pfm");
    const theirs = path.join(dir, "theirs.pfm");
    writePfm(ours, grid);
    const res = python(`
from depthfuse import fileio
fileio.write_pfm(${JSON.stringify(theirs)}, fileio.read_pfm(${JSON.stringify(ours)}))
`);
    expect(res.status, res.stderr).toBe(0);
    expect(fs.readFileSync(ours).equals(fs.readFileSync(theirs))).toBe(true);
  });

  it("rejects non-finite values and truncated files", () => {
    const dir = tmpDir();
    const grid = sampleGrid(4, 4);
    grid.data[5] = Infinity;
    expect(() => writePfm(path.join(dir, "bad.pfm"), grid)).toThrow(/non-finite/);
    fs.writeFileSync(path.join(dir, "trunc.pfm"), "Pf\n4 4\n-1.0\n123");
    expect(() => readPfm(path.join(dir, "trunc.pfm"))).toThrow(/size mismatch/);
  });
});

describe("flo", () => {
  function sampleFlow(height: number, width: number) {
    const dx = new Float64Array(height * width);
    const dy = new Float64Array(height * width);
    for (let i = 0; i < dx.length; i++) {
      dx[i] = Math.cos(i * 0.21) * 2;
      dy[i] = Math.sin(i * 0.13) * 2;
    }
    return { height, width, dx, dy };
  }

  it("round-trips through its own reader", () => {
    const dir = tmpDir();
    const flow = sampleFlow(6, 8);
    writeFlo(path.join(dir, "f.flo"), flow);
    const back = readFlo(path.join(dir, "f.flo"));
    expect(back.height).toBe(6);
    expect(back.width).toBe(8);
    for (let i = 0; i < flow.dx.length; i++) {
      expect(back.dx[i]).toBe(Math.fround(flow.dx[i]));
      expect(back.dy[i]).toBe(Math.fround(flow.dy[i]));
    }
  });

  it("loads in the consumer toolkit bit-exact", () => {
    const dir = tmpDir();
    const flow = sampleFlow(5, 12);
    const file = path.join(dir, "f.flo");
    writeFlo(file, flow);
    const res = python(`
import hashlib
import numpy as np
from depthfuse import fileio
flow = fileio.read_flo(${JSON.stringify(file)})
raw = np.asarray(flow.data, dtype="<f4")
print(raw.shape[0], raw.shape[1], hashlib.sha256(raw.tobytes()).hexdigest())
`);
    expect(res.status, res.stderr).toBe(0);
    const [h, w, digest] = res.stdout.trim().split(" ");
    expect([h, w]).toEqual(["5", "12"]);
    const interleaved = new Float32Array(flow.dx.length * 2);
    for (let i = 0; i < flow.dx.length; i++) {
      interleaved[i * 2] = Math.fround(flow.dx[i]);
      interleaved[i * 2 + 1] = Math.fround(flow.dy[i]);
    }
    expect(digest).toBe(sha256(new Uint8Array(interleaved.buffer)));
  });

  it("writes the same bytes as the consumer writer", () => {
    const dir = tmpDir();
    const ours = path.join(dir, "ours.flo");
    const theirs = path.join(dir, "theirs.flo");
    writeFlo(ours, sampleFlow(7, 7));
    const res = python(`
from depthfuse import fileio
fileio.write_flo(${JSON.stringify(theirs)}, fileio.read_flo(${JSON.stringify(ours)}))
`);
    expect(res.status, res.stderr).toBe(0);
    expect(fs.readFileSync(ours).equals(fs.readFileSync(theirs))).toBe(true);
  });

  it("rejects a bad magic number", () => {
    const dir = tmpDir();
    const buf = Buffer.alloc(12 + 8);
    buf.writeFloatLE(1.0, 0);
    buf.writeInt32LE(1, 4);
    buf.writeInt32LE(1, 8);
    fs.writeFileSync(path.join(dir, "bad.flo"), buf);
    expect(() => readFlo(path.join(dir, "bad.flo"))).toThrow(/magic/);
  });
});

describe("png", () => {
  it("loads in the consumer toolkit with identical pixels", () => {
    const dir = tmpDir();
    const image = testImage(3, 20, 24);
    const file = path.join(dir, "img.png");
    writePng(file, image);
    const res = python(`
import hashlib
import numpy as np
from PIL import Image
arr = np.asarray(Image.open(${JSON.stringify(file)}))
print(arr.shape, arr.dtype, hashlib.sha256(arr.tobytes()).hexdigest())
`);
    expect(res.status, res.stderr).toBe(0);
    const bytes = new Uint8Array(image.height * image.width * 3);
    for (let i = 0; i < bytes.length; i++) {
      const v = Math.round(image.data[i] * 255);
      bytes[i] = v < 0 ? 0 : v > 255 ? 255 : v;
    }
    expect(res.stdout.trim()).toBe(`(20, 24, 3) uint8 ${sha256(bytes)}`);
  });

  it("is accepted by the consumer image loader", () => {
    const dir = tmpDir();
    const file = path.join(dir, "img.png");
    writePng(file, testImage(4, 16, 16));
    const res = python(`
from depthfuse import fileio
img = fileio.load_image(${JSON.stringify(file)})
print(img.data.shape)
`);
    expect(res.status, res.stderr).toBe(0);
    expect(res.stdout.trim()).toBe("(16, 16, 3)");
  });

  it("reads PNGs the consumer wrote", () => {
    const dir = tmpDir();
    const file = path.join(dir, "from_py.png");
    const res = python(`
import numpy as np
from depthfuse import fileio
from depthfuse.types import Image
arr = np.linspace(0.0, 1.0, 12 * 10 * 3).reshape(12, 10, 3)
fileio.save_image(${JSON.stringify(file)}, Image(arr))
`);
    expect(res.status, res.stderr).toBe(0);
    const image = readPng(file);
    expect(image.height).toBe(12);
    expect(image.width).toBe(10);
    for (let i = 0; i < image.data.length; i++) {
      const expected = Math.round((i / (12 * 10 * 3 - 1)) * 255) / 255;
      expect(Math.abs(image.data[i] - expected)).toBeLessThan(1e-12);
    }
  });
});
