/**
 * Geometric stand-in for a pose model: places the 17 COCO keypoints at
 * canonical body positions inside a detection box. Good enough to exercise
 * pose-consuming pipelines without an ML runtime; swap in a real estimator
 * by replacing this module.
 */

export const POSE_MODEL_NAME = "box-skeleton";
export const POSE_MODEL_VERSION = "1.0.0";

export type Keypoint = [number, number, number];

// (x, y) as fractions of box width/height, top-left origin, in COCO order:
// nose, eyes, ears, shoulders, elbows, wrists, hips, knees, ankles.
const LAYOUT: ReadonlyArray<readonly [number, number]> = [
  [0.5, 0.1], // nose
  [0.54, 0.08], // left eye
  [0.46, 0.08], // right eye
  [0.58, 0.1], // left ear
  [0.42, 0.1], // right ear
  [0.65, 0.22], // left shoulder
  [0.35, 0.22], // right shoulder
  [0.72, 0.38], // left elbow
  [0.28, 0.38], // right elbow
  [0.75, 0.52], // left wrist
  [0.25, 0.52], // right wrist
  [0.6, 0.55], // left hip
  [0.4, 0.55], // right hip
  [0.58, 0.75], // left knee
  [0.42, 0.75], // right knee
  [0.57, 0.95], // left ankle
  [0.43, 0.95], // right ankle
];

export function synthesizePose(
  bbox: [number, number, number, number],
  conf: number,
): Keypoint[] {
  const [x, y, w, h] = bbox;
  const score = Math.max(0, Math.min(1, conf));
  return LAYOUT.map(([fx, fy]) => [x + fx * w, y + fy * h, score]);
}
