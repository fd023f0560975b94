/**
 * Minimal YUV4MPEG2 reader. Only the luminance plane is kept per frame;
 * chroma bytes are measured from the colorspace tag and skipped.
 */

export interface Y4mHeader {
  width: number;
  height: number;
  fpsNum: number;
  fpsDen: number;
  colorspace: string;
}

export interface Y4mFrame {
  index: number;
  /** Luminance plane, row-major, width * height bytes. */
  y: Uint8Array;
}

export interface Y4mVideo {
  header: Y4mHeader;
  frames: Y4mFrame[];
}

const MAGIC = "YUV4MPEG2";

function chromaBytes(colorspace: string, width: number, height: number): number {
  if (colorspace === "mono") return 0;
  if (colorspace.startsWith("420")) return 2 * Math.ceil(width / 2) * Math.ceil(height / 2);
  if (colorspace.startsWith("422")) return 2 * Math.ceil(width / 2) * height;
  if (colorspace.startsWith("444")) return 2 * width * height;
  throw new Error(`unsupported colorspace C${colorspace}`);
}

function readLine(data: Uint8Array, start: number): { text: string; next: number } {
  let end = start;
  while (end < data.length && data[end] !== 0x0a) end++;
  if (end === data.length) throw new Error("unterminated header line");
  return { text: Buffer.from(data.subarray(start, end)).toString("ascii"), next: end + 1 };
}

export function parseY4m(data: Uint8Array): Y4mVideo {
  const { text: headerLine, next } = readLine(data, 0);
  const tokens = headerLine.split(" ").filter((t) => t.length > 0);
  if (tokens[0] !== MAGIC) {
    throw new Error(`not a Y4M stream (expected ${MAGIC}, got ${JSON.stringify(tokens[0] ?? "")})`);
  }

  let width = 0;
  let height = 0;
  let fpsNum = 30;
  let fpsDen = 1;
  let colorspace = "420jpeg";
  for (const token of tokens.slice(1)) {
    const tag = token[0];
    const value = token.slice(1);
    if (tag === "W") width = parseInt(value, 10);
    else if (tag === "H") height = parseInt(value, 10);
    else if (tag === "F") {
      const [num, den] = value.split(":");
      fpsNum = parseInt(num, 10);
      fpsDen = parseInt(den, 10);
    } else if (tag === "C") colorspace = value;
    // I, A, X tags carry interlacing/aspect/comments; irrelevant here
  }
  if (!(width > 0) || !(height > 0)) {
    throw new Error(`header must carry positive W and H, got W${width} H${height}`);
  }
  if (!(fpsNum > 0) || !(fpsDen > 0)) {
    throw new Error(`bad frame rate F${fpsNum}:${fpsDen}`);
  }

  const ySize = width * height;
  const frameSize = ySize + chromaBytes(colorspace, width, height);
  const frames: Y4mFrame[] = [];
  let offset = next;
  while (offset < data.length) {
    const line = readLine(data, offset);
    if (!line.text.startsWith("FRAME")) {
      throw new Error(`expected FRAME marker at byte ${offset}, got ${JSON.stringify(line.text.slice(0, 16))}`);
    }
    offset = line.next;
    if (offset + frameSize > data.length) {
      throw new Error(`frame ${frames.length} truncated: needs ${frameSize} bytes, ${data.length - offset} left`);
    }
    frames.push({ index: frames.length, y: data.subarray(offset, offset + ySize) });
    offset += frameSize;
  }

  return { header: { width, height, fpsNum, fpsDen, colorspace }, frames };
}

export function frameRate(header: Y4mHeader): number {
  return header.fpsNum / header.fpsDen;
}
