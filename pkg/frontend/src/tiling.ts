// Nine-patch prediction: run a per-image model on a 3x3 grid of
// overlapping tiles and feather the seams so the merged map is aligned
// with the full frame. Patch edges ramp linearly across the overlap.

import { Grid, Rgb, makeGrid } from "./grid.js";

interface Tile {
  y0: number;
  y1: number;
  x0: number;
  x1: number;
}

function splitAxis(size: number, parts: number, overlap: number): Array<[number, number]> {
  const spans: Array<[number, number]> = [];
  const step = size / parts;
  for (let i = 0; i < parts; i++) {
    const lo = Math.max(0, Math.floor(i * step - overlap));
    const hi = Math.min(size, Math.ceil((i + 1) * step + overlap));
    spans.push([lo, hi]);
  }
  return spans;
}

function cropRgb(image: Rgb, tile: Tile): Rgb {
  const height = tile.y1 - tile.y0;
  const width = tile.x1 - tile.x0;
  const data = new Float64Array(height * width * 3);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      for (let c = 0; c < 3; c++) {
        data[(y * width + x) * 3 + c] =
          image.data[((y + tile.y0) * image.width + (x + tile.x0)) * 3 + c];
      }
    }
  }
  return { height, width, data };
}

function rampWeight(index: number, size: number, margin: number): number {
  if (margin <= 0) return 1;
  const fromLow = (index + 1) / margin;
  const fromHigh = (size - index) / margin;
  return Math.min(1, fromLow, fromHigh);
}

export function ninePatch(image: Rgb, predict: (tile: Rgb) => Grid): Grid {
  const overlap = Math.max(2, Math.round(Math.min(image.height, image.width) / 12));
  const rows = splitAxis(image.height, 3, overlap);
  const cols = splitAxis(image.width, 3, overlap);
  const acc = makeGrid(image.height, image.width);
  const weight = makeGrid(image.height, image.width);
  for (const [y0, y1] of rows) {
    for (const [x0, x1] of cols) {
      const tile: Tile = { y0, y1, x0, x1 };
      const out = predict(cropRgb(image, tile));
      for (let y = 0; y < out.height; y++) {
        const wy = rampWeight(y, out.height, overlap);
        for (let x = 0; x < out.width; x++) {
          const wgt = wy * rampWeight(x, out.width, overlap);
          acc.data[(y + y0) * image.width + (x + x0)] += wgt * out.data[y * out.width + x];
          weight.data[(y + y0) * image.width + (x + x0)] += wgt;
        }
      }
    }
  }
  for (let i = 0; i < acc.data.length; i++) {
    acc.data[i] /= weight.data[i];
  }
  return acc;
}
