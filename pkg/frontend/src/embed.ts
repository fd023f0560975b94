/**
 * Appearance embedding without a network: an L1-normalized 16-bin
 * luminance histogram of the detection's box. Identical-looking crops get
 * near-identical vectors, which is all the downstream blend needs.
 */

export const EMBEDDING_DIM = 16;

export function histogramEmbedding(
  y: Uint8Array,
  width: number,
  height: number,
  bbox: [number, number, number, number],
): number[] {
  const x0 = Math.max(0, Math.floor(bbox[0]));
  const y0 = Math.max(0, Math.floor(bbox[1]));
  const x1 = Math.min(width, Math.ceil(bbox[0] + bbox[2]));
  const y1 = Math.min(height, Math.ceil(bbox[1] + bbox[3]));

  const hist = new Array<number>(EMBEDDING_DIM).fill(0);
  let count = 0;
  for (let py = y0; py < y1; py++) {
    for (let px = x0; px < x1; px++) {
      hist[y[py * width + px] >> 4]++;
      count++;
    }
  }
  if (count === 0) return hist.map(() => 1 / EMBEDDING_DIM);
  return hist.map((v) => v / count);
}
