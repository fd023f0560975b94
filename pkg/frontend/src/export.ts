import { readFileSync, writeFileSync } from "fs";

import { DETECTOR_NAME, DETECTOR_VERSION, detectPersons, DetectOptions } from "./detect.js";
import { EMBEDDING_DIM, histogramEmbedding } from "./embed.js";
import { POSE_MODEL_NAME, POSE_MODEL_VERSION, synthesizePose } from "./pose.js";
import { frameRate, parseY4m } from "./y4m.js";

export interface ExportOptions extends DetectOptions {
  /** Detections below this confidence are dropped. */
  confThreshold?: number;
  withPose?: boolean;
  withEmbedding?: boolean;
}

export interface ExportManifest {
  video: string;
  fps: number;
  frameCount: number;
  detector: string;
  detectorVersion: string;
  poseModel: string | null;
  poseModelVersion: string | null;
  embeddingDim: number;
  output: string;
}

interface DetectionLine {
  bbox: number[];
  conf: number;
  embedding?: number[];
  keypoints?: number[][];
}

/**
 * Run detection over a Y4M file and write one detections-JSONL line per
 * frame, the stream format the ringside toolkit reads. Frames with no
 * confident detections still get a line, with an empty list.
 */
export function exportDetections(
  videoPath: string,
  outPath: string,
  opts: ExportOptions = {},
): ExportManifest {
  const confThreshold = opts.confThreshold ?? 0.5;
  const video = parseY4m(readFileSync(videoPath));
  const { width, height } = video.header;

  const lines: string[] = [];
  for (const frame of video.frames) {
    const detections: DetectionLine[] = [];
    for (const blob of detectPersons(frame.y, width, height, opts)) {
      if (blob.conf < confThreshold) continue;
      const det: DetectionLine = { bbox: [...blob.bbox], conf: blob.conf };
      if (opts.withEmbedding) {
        det.embedding = histogramEmbedding(frame.y, width, height, blob.bbox);
      }
      if (opts.withPose) {
        det.keypoints = synthesizePose(blob.bbox, blob.conf).map((kp) => [...kp]);
      }
      detections.push(det);
    }
    lines.push(JSON.stringify({ frame: frame.index, detections }));
  }
  writeFileSync(outPath, lines.join("\n") + (lines.length > 0 ? "\n" : ""));

  return {
    video: videoPath,
    fps: frameRate(video.header),
    frameCount: video.frames.length,
    detector: DETECTOR_NAME,
    detectorVersion: DETECTOR_VERSION,
    poseModel: opts.withPose ? POSE_MODEL_NAME : null,
    poseModelVersion: opts.withPose ? POSE_MODEL_VERSION : null,
    embeddingDim: opts.withEmbedding ? EMBEDDING_DIM : 0,
    output: outPath,
  };
}
