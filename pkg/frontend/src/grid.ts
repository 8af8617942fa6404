// Small float64 raster type shared by the models and codecs. Values are
// row-major, top-down, one channel unless stated otherwise.

export interface Grid {
  height: number;
  width: number;
  data: Float64Array;
}

export function makeGrid(height: number, width: number, fill = 0): Grid {
  const data = new Float64Array(height * width);
  if (fill !== 0) data.fill(fill);
  return { height, width, data };
}

export function gridMax(grid: Grid): number {
  let best = -Infinity;
  for (let i = 0; i < grid.data.length; i++) {
    if (grid.data[i] > best) best = grid.data[i];
  }
  return best;
}

export function gridMin(grid: Grid): number {
  let best = Infinity;
  for (let i = 0; i < grid.data.length; i++) {
    if (grid.data[i] < best) best = grid.data[i];
  }
  return best;
}

// RGB image with channels interleaved, values in [0, 1].
export interface Rgb {
  height: number;
  width: number;
  data: Float64Array;
}

export function luminance(image: Rgb): Grid {
  const out = makeGrid(image.height, image.width);
  for (let i = 0; i < out.data.length; i++) {
    const r = image.data[i * 3];
    const g = image.data[i * 3 + 1];
    const b = image.data[i * 3 + 2];
    out.data[i] = 0.299 * r + 0.587 * g + 0.114 * b;
  }
  return out;
}

export function grayToRgb(grid: Grid): Rgb {
  const data = new Float64Array(grid.data.length * 3);
  for (let i = 0; i < grid.data.length; i++) {
    const v = grid.data[i];
    data[i * 3] = v;
    data[i * 3 + 1] = v;
    data[i * 3 + 2] = v;
  }
  return { height: grid.height, width: grid.width, data };
}

function clampIndex(value: number, limit: number): number {
  if (value < 0) return 0;
  if (value > limit) return limit;
  return value;
}

// Bilinear resize with half-pixel centers; a same-size call is the identity.
export function resizeBilinear(grid: Grid, height: number, width: number): Grid {
  if (height === grid.height && width === grid.width) {
    return { height, width, data: grid.data.slice() };
  }
  const out = makeGrid(height, width);
  const sy = grid.height / height;
  const sx = grid.width / width;
  for (let y = 0; y < height; y++) {
    const src = clampIndex((y + 0.5) * sy - 0.5, grid.height - 1);
    const y0 = Math.floor(src);
    const y1 = Math.min(y0 + 1, grid.height - 1);
    const fy = src - y0;
    for (let x = 0; x < width; x++) {
      const sxc = clampIndex((x + 0.5) * sx - 0.5, grid.width - 1);
      const x0 = Math.floor(sxc);
      const x1 = Math.min(x0 + 1, grid.width - 1);
      const fx = sxc - x0;
      const top = grid.data[y0 * grid.width + x0] * (1 - fx) + grid.data[y0 * grid.width + x1] * fx;
      const bot = grid.data[y1 * grid.width + x0] * (1 - fx) + grid.data[y1 * grid.width + x1] * fx;
      out.data[y * width + x] = top * (1 - fy) + bot * fy;
    }
  }
  return out;
}

export function resizeRgb(image: Rgb, height: number, width: number): Rgb {
  const channels: Grid[] = [];
  for (let c = 0; c < 3; c++) {
    const plane = makeGrid(image.height, image.width);
    for (let i = 0; i < plane.data.length; i++) plane.data[i] = image.data[i * 3 + c];
    channels.push(resizeBilinear(plane, height, width));
  }
  const data = new Float64Array(height * width * 3);
  for (let i = 0; i < height * width; i++) {
    data[i * 3] = channels[0].data[i];
    data[i * 3 + 1] = channels[1].data[i];
    data[i * 3 + 2] = channels[2].data[i];
  }
  return { height, width, data };
}

// Separable gaussian with reflected borders; sigma <= 0 is the identity.
export function gaussianBlur(grid: Grid, sigma: number): Grid {
  if (sigma <= 0) return { height: grid.height, width: grid.width, data: grid.data.slice() };
  const radius = Math.max(1, Math.ceil(3 * sigma));
  const kernel = new Float64Array(2 * radius + 1);
  let total = 0;
  for (let i = -radius; i <= radius; i++) {
    const w = Math.exp(-(i * i) / (2 * sigma * sigma));
    kernel[i + radius] = w;
    total += w;
  }
  for (let i = 0; i < kernel.length; i++) kernel[i] /= total;

  const reflect = (index: number, limit: number) => {
    // scipy-style "reflect" indexing: ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
    if (limit === 1) return 0;
    const period = 2 * limit;
    let i = ((index % period) + period) % period;
    if (i >= limit) i = period - 1 - i;
    return i;
  };

  const mid = makeGrid(grid.height, grid.width);
  for (let y = 0; y < grid.height; y++) {
    for (let x = 0; x < grid.width; x++) {
      let acc = 0;
      for (let k = -radius; k <= radius; k++) {
        acc += kernel[k + radius] * grid.data[y * grid.width + reflect(x + k, grid.width)];
      }
      mid.data[y * grid.width + x] = acc;
    }
  }
  const out = makeGrid(grid.height, grid.width);
  for (let y = 0; y < grid.height; y++) {
    for (let x = 0; x < grid.width; x++) {
      let acc = 0;
      for (let k = -radius; k <= radius; k++) {
        acc += kernel[k + radius] * mid.data[reflect(y + k, grid.height) * grid.width + x];
      }
      out.data[y * grid.width + x] = acc;
    }
  }
  return out;
}

// Sobel gradient magnitude with reflected borders, unnormalized.
export function sobelMagnitude(grid: Grid): Grid {
  const h = grid.height;
  const w = grid.width;
  const out = makeGrid(h, w);
  const at = (y: number, x: number) => {
    const yy = y < 0 ? 0 : y >= h ? h - 1 : y;
    const xx = x < 0 ? 0 : x >= w ? w - 1 : x;
    return grid.data[yy * w + xx];
  };
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      const gx =
        at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1) -
        at(y - 1, x - 1) - 2 * at(y, x - 1) - at(y + 1, x - 1);
      const gy =
        at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1) -
        at(y - 1, x - 1) - 2 * at(y - 1, x) - at(y - 1, x + 1);
      out.data[y * w + x] = Math.hypot(gx, gy);
    }
  }
  return out;
}
