// Reference prediction heads driven entirely by checkpoint parameters.
// They stand in for the heavyweight pretrained networks: the consumer
// contract is format-level, so any checkpoint that passes the sanity
// probes can sit behind these interfaces.

import { Flow } from "./codecs.js";
import { Checkpoint, CheckpointError, DepthParams, EdgeParams, FlowParams } from "./checkpoint.js";
import { Grid, Rgb, gaussianBlur, luminance, makeGrid, sobelMagnitude } from "./grid.js";

// Disparity from a brightness prior: nearer surfaces sit lower in the
// frame and brighter under even lighting. Smooth by construction.
export function predictDisparity(image: Rgb, checkpoint: Checkpoint): Grid {
  if (checkpoint.kind !== "depth") throw new CheckpointError("depth checkpoint required");
  const p = checkpoint.params as DepthParams;
  const lum = gaussianBlur(luminance(image), p.blurSigma);
  const out = makeGrid(image.height, image.width);
  for (let y = 0; y < image.height; y++) {
    const vertical = image.height > 1 ? 1 - y / (image.height - 1) : 0.5;
    for (let x = 0; x < image.width; x++) {
      out.data[y * image.width + x] =
        p.verticalWeight * vertical + p.luminanceWeight * lum.data[y * image.width + x] + p.bias;
    }
  }
  return out;
}

// Depth-space conversion for disparity-emitting checkpoints: D = dMax - v.
export function toDepthSpace(disparity: Grid, checkpoint: Checkpoint): Grid {
  const p = checkpoint.params as DepthParams;
  const out = makeGrid(disparity.height, disparity.width);
  for (let i = 0; i < out.data.length; i++) {
    out.data[i] = p.dMax - disparity.data[i];
  }
  return out;
}

export function predictEdges(image: Rgb, checkpoint: Checkpoint): Grid {
  if (checkpoint.kind !== "edges") throw new CheckpointError("edges checkpoint required");
  const p = checkpoint.params as EdgeParams;
  const mag = sobelMagnitude(gaussianBlur(luminance(image), p.blurSigma));
  // Fixed response scale rather than a per-image maximum keeps a uniform
  // image at zero and makes the output deterministic across batches.
  for (let i = 0; i < mag.data.length; i++) {
    const v = mag.data[i] / p.responseScale;
    mag.data[i] = v < 0 ? 0 : v > 1 ? 1 : v;
  }
  return mag;
}

// Integer block matching from `target` back to `source`: SSD over a square
// window, ties broken toward the smaller displacement so an identical pair
// maps to the zero flow exactly.
export function predictFlow(target: Rgb, source: Rgb, checkpoint: Checkpoint): Flow {
  if (checkpoint.kind !== "flow") throw new CheckpointError("flow checkpoint required");
  if (target.height !== source.height || target.width !== source.width) {
    throw new CheckpointError("flow inputs must share one shape");
  }
  const p = checkpoint.params as FlowParams;
  const block = Math.max(0, Math.round(p.blockRadius));
  const search = Math.max(0, Math.round(p.searchRadius));
  const h = target.height;
  const w = target.width;
  const a = luminance(target);
  const b = luminance(source);
  const at = (g: Grid, y: number, x: number) => {
    const yy = y < 0 ? 0 : y >= h ? h - 1 : y;
    const xx = x < 0 ? 0 : x >= w ? w - 1 : x;
    return g.data[yy * w + xx];
  };

  const displacements: Array<[number, number]> = [];
  for (let dy = -search; dy <= search; dy++) {
    for (let dx = -search; dx <= search; dx++) {
      displacements.push([dy, dx]);
    }
  }
  displacements.sort((u, v) => {
    const du = Math.abs(u[0]) + Math.abs(u[1]);
    const dv = Math.abs(v[0]) + Math.abs(v[1]);
    if (du !== dv) return du - dv;
    if (u[0] !== v[0]) return u[0] - v[0];
    return u[1] - v[1];
  });

  const dxOut = new Float64Array(h * w);
  const dyOut = new Float64Array(h * w);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      let bestCost = Infinity;
      let bestDy = 0;
      let bestDx = 0;
      for (const [dy, dx] of displacements) {
        let cost = 0;
        for (let ky = -block; ky <= block; ky++) {
          for (let kx = -block; kx <= block; kx++) {
            const diff = at(a, y + ky, x + kx) - at(b, y + dy + ky, x + dx + kx);
            cost += diff * diff;
          }
        }
        if (cost < bestCost) {
          bestCost = cost;
          bestDy = dy;
          bestDx = dx;
        }
      }
      dxOut[y * w + x] = bestDx;
      dyOut[y * w + x] = bestDy;
    }
  }
  return { height: h, width: w, dx: dxOut, dy: dyOut };
}
