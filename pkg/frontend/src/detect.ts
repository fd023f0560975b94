/**
 * Person detection over a luminance plane: threshold against the frame's
 * background level, then 4-connected components. People show up as bright
 * blobs against the darker floor in the fixed-camera footage this targets.
 *
 * Confidence is the blob's mean brightness on a 0..1 scale, so washed-out
 * or half-lit shapes land below the default 0.5 export filter.
 */

export const DETECTOR_NAME = "luma-blob";
export const DETECTOR_VERSION = "1.0.0";

export interface PersonBlob {
  /** x, y, w, h in pixels; w and h are at least 1. */
  bbox: [number, number, number, number];
  conf: number;
}

export interface DetectOptions {
  /** Absolute luminance cutoff; default is the frame median + 32. */
  threshold?: number;
  /** Components smaller than this many pixels are noise. */
  minArea?: number;
}

function medianLuma(y: Uint8Array): number {
  const hist = new Uint32Array(256);
  for (let i = 0; i < y.length; i++) hist[y[i]]++;
  const half = y.length / 2;
  let seen = 0;
  for (let v = 0; v < 256; v++) {
    seen += hist[v];
    if (seen >= half) return v;
  }
  return 255;
}

export function detectPersons(
  y: Uint8Array,
  width: number,
  height: number,
  opts: DetectOptions = {},
): PersonBlob[] {
  if (y.length !== width * height) {
    throw new Error(`plane is ${y.length} bytes, expected ${width}x${height}`);
  }
  const threshold = opts.threshold ?? Math.min(255, medianLuma(y) + 32);
  const minArea = opts.minArea ?? 9;

  const labels = new Int32Array(width * height); // 0 = unvisited
  const blobs: PersonBlob[] = [];
  const stack: number[] = [];
  let nextLabel = 1;

  for (let start = 0; start < y.length; start++) {
    if (labels[start] !== 0 || y[start] < threshold) continue;
    const label = nextLabel++;
    labels[start] = label;
    stack.push(start);
    let minX = width;
    let minY = height;
    let maxX = -1;
    let maxY = -1;
    let area = 0;
    let lumaSum = 0;
    while (stack.length > 0) {
      const idx = stack.pop()!;
      const px = idx % width;
      const py = (idx - px) / width;
      area++;
      lumaSum += y[idx];
      if (px < minX) minX = px;
      if (px > maxX) maxX = px;
      if (py < minY) minY = py;
      if (py > maxY) maxY = py;
      if (px > 0 && labels[idx - 1] === 0 && y[idx - 1] >= threshold) {
        labels[idx - 1] = label;
        stack.push(idx - 1);
      }
      if (px < width - 1 && labels[idx + 1] === 0 && y[idx + 1] >= threshold) {
        labels[idx + 1] = label;
        stack.push(idx + 1);
      }
      if (py > 0 && labels[idx - width] === 0 && y[idx - width] >= threshold) {
        labels[idx - width] = label;
        stack.push(idx - width);
      }
      if (py < height - 1 && labels[idx + width] === 0 && y[idx + width] >= threshold) {
        labels[idx + width] = label;
        stack.push(idx + width);
      }
    }
    if (area < minArea) continue;
    blobs.push({
      bbox: [minX, minY, maxX - minX + 1, maxY - minY + 1],
      conf: Math.min(1, lumaSum / area / 255),
    });
  }

  blobs.sort((a, b) => a.bbox[0] - b.bbox[0] || a.bbox[1] - b.bbox[1]);
  return blobs;
}
