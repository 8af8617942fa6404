// File codecs matching the consumer toolkit byte for byte.
//
// PFM: grayscale "Pf", header "Pf\n{w} {h}\n-1.0\n", float32 little-endian
// raster with scanlines stored bottom-up. FLO: Middlebury layout, float32
// magic 202021.25, int32 width/height, interleaved (dx, dy) float32 pairs
// row-major top-down. PNG: 8-bit RGB only. Writes go through a temp file
// and an atomic rename.

import fs from "fs";
import path from "path";
import { PNG } from "pngjs";
import { ExporterError } from "./errors.js";
import { Grid, Rgb } from "./grid.js";

export const FLO_MAGIC = 202021.25;

export class CodecError extends ExporterError {}

export function atomicWrite(filePath: string, payload: Buffer): void {
  const dir = path.dirname(filePath) || ".";
  const tmp = path.join(dir, `.tmp-${process.pid}-${path.basename(filePath)}`);
  try {
    fs.writeFileSync(tmp, payload);
    fs.renameSync(tmp, filePath);
  } catch (err) {
    if (fs.existsSync(tmp)) fs.unlinkSync(tmp);
    throw err;
  }
}

export function writePfm(filePath: string, grid: Grid): void {
  const { height, width, data } = grid;
  if (height <= 0 || width <= 0 || data.length !== height * width) {
    throw new CodecError(`PFM payload must be non-empty 2-d, got ${height}x${width}`);
  }
  for (let i = 0; i < data.length; i++) {
    if (!Number.isFinite(data[i])) {
      throw new CodecError("refusing to write non-finite values to PFM");
    }
  }
  const header = Buffer.from(`Pf\n${width} ${height}\n-1.0\n`, "ascii");
  const raster = Buffer.alloc(height * width * 4);
  // Bottom-up scanline order.
  for (let y = 0; y < height; y++) {
    const srcRow = height - 1 - y;
    for (let x = 0; x < width; x++) {
      raster.writeFloatLE(Math.fround(data[srcRow * width + x]), (y * width + x) * 4);
    }
  }
  atomicWrite(filePath, Buffer.concat([header, raster]));
}

export function readPfm(filePath: string): Grid {
  const buf = fs.readFileSync(filePath);
  let pos = 0;
  const token = () => {
    while (pos < buf.length && /\s/.test(String.fromCharCode(buf[pos]))) pos++;
    const start = pos;
    while (pos < buf.length && !/\s/.test(String.fromCharCode(buf[pos]))) pos++;
    if (start === pos) throw new CodecError("unexpected end of PFM header");
    return buf.toString("ascii", start, pos);
  };
  const kind = token();
  if (kind !== "Pf") throw new CodecError(`bad PFM identifier ${JSON.stringify(kind)}`);
  const width = parseInt(token(), 10);
  const height = parseInt(token(), 10);
  const scale = parseFloat(token());
  if (!(width > 0) || !(height > 0)) throw new CodecError(`bad PFM dimensions ${width}x${height}`);
  if (!(scale < 0)) throw new CodecError("only little-endian PFM is supported");
  const offset = pos + 1;
  if (buf.length - offset !== width * height * 4) {
    throw new CodecError("PFM raster size mismatch");
  }
  const data = new Float64Array(height * width);
  for (let y = 0; y < height; y++) {
    const dstRow = height - 1 - y;
    for (let x = 0; x < width; x++) {
      data[dstRow * width + x] = buf.readFloatLE(offset + (y * width + x) * 4);
    }
  }
  return { height, width, data };
}

export interface Flow {
  height: number;
  width: number;
  dx: Float64Array;
  dy: Float64Array;
}

export function writeFlo(filePath: string, flow: Flow): void {
  const { height, width, dx, dy } = flow;
  if (height <= 0 || width <= 0 || dx.length !== height * width || dy.length !== height * width) {
    throw new CodecError(`FLO payload must have shape (H, W, 2), got ${height}x${width}`);
  }
  const buf = Buffer.alloc(12 + height * width * 8);
  buf.writeFloatLE(FLO_MAGIC, 0);
  buf.writeInt32LE(width, 4);
  buf.writeInt32LE(height, 8);
  for (let i = 0; i < height * width; i++) {
    if (!Number.isFinite(dx[i]) || !Number.isFinite(dy[i])) {
      throw new CodecError("refusing to write non-finite values to FLO");
    }
    buf.writeFloatLE(Math.fround(dx[i]), 12 + i * 8);
    buf.writeFloatLE(Math.fround(dy[i]), 12 + i * 8 + 4);
  }
  atomicWrite(filePath, buf);
}

export function readFlo(filePath: string): Flow {
  const buf = fs.readFileSync(filePath);
  if (buf.length < 12) throw new CodecError("FLO file too short for its header");
  if (Math.fround(buf.readFloatLE(0)) !== Math.fround(FLO_MAGIC)) {
    throw new CodecError("bad FLO magic");
  }
  const width = buf.readInt32LE(4);
  const height = buf.readInt32LE(8);
  if (width <= 0 || height <= 0) throw new CodecError(`bad FLO dimensions ${width}x${height}`);
  if (buf.length - 12 !== width * height * 8) throw new CodecError("FLO raster size mismatch");
  const dx = new Float64Array(height * width);
  const dy = new Float64Array(height * width);
  for (let i = 0; i < height * width; i++) {
    dx[i] = buf.readFloatLE(12 + i * 8);
    dy[i] = buf.readFloatLE(12 + i * 8 + 4);
  }
  return { height, width, dx, dy };
}

export function readPng(filePath: string): Rgb {
  const png = PNG.sync.read(fs.readFileSync(filePath));
  const data = new Float64Array(png.height * png.width * 3);
  for (let i = 0; i < png.height * png.width; i++) {
    data[i * 3] = png.data[i * 4] / 255;
    data[i * 3 + 1] = png.data[i * 4 + 1] / 255;
    data[i * 3 + 2] = png.data[i * 4 + 2] / 255;
  }
  return { height: png.height, width: png.width, data };
}

export function writePng(filePath: string, image: Rgb): void {
  const png = new PNG({ height: image.height, width: image.width, colorType: 2 });
  for (let i = 0; i < image.height * image.width; i++) {
    for (let c = 0; c < 3; c++) {
      const v = Math.round(image.data[i * 3 + c] * 255);
      png.data[i * 4 + c] = v < 0 ? 0 : v > 255 ? 255 : v;
    }
    png.data[i * 4 + 3] = 255;
  }
  atomicWrite(filePath, PNG.sync.write(png, { colorType: 2 }));
}
