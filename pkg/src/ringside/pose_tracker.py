"""In-bout re-identification by mini-bout pose tracking and stitching.

A bout is cut into fixed-length mini-bouts. Within one mini-bout, poses are
associated frame to frame by the mean distance over mutually valid shoulder
and hip landmarks, solved as an optimal matching; a pose that goes unmatched
ends its local track for good (no resurrection inside a mini-bout). Adjacent
mini-bouts are then stitched by optimally matching the poses that sit on the
shared boundary, so local IDs inherit global IDs left to right.
"""

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    DegeneratePoseError,
    IncomparablePoseError,
    OrderingError,
    ParseError,
    SchemaError,
)
from .descriptor_tracker import solve_assignment
from .model import COCO_KEYPOINT_COUNT, Detection, PipelineConfig
from .stream_io import FrameRecord, Source, TrackRow, _opened, _round6

NOSE = 0
LEFT_SHOULDER = 5
RIGHT_SHOULDER = 6
LEFT_HIP = 11
RIGHT_HIP = 12
INTEGRATION_LANDMARKS = (LEFT_SHOULDER, RIGHT_SHOULDER, LEFT_HIP, RIGHT_HIP)
VALID_SCORE = 0.05

_BOUNDARY_SEARCH_FRAMES = 10
_NO_GATE = 1e9


@dataclass(frozen=True)
class PoseSample:
    """One person's 17 COCO keypoints in one frame."""

    frame_index: int
    keypoints: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "keypoints", tuple(tuple(float(v) for v in kp) for kp in self.keypoints)
        )
        if len(self.keypoints) != COCO_KEYPOINT_COUNT:
            raise SchemaError(
                f"pose needs {COCO_KEYPOINT_COUNT} keypoints, got {len(self.keypoints)}"
            )
        for kp in self.keypoints:
            if len(kp) != 3:
                raise SchemaError(f"keypoint must be (x, y, score), got {kp}")
            if not 0.0 <= kp[2] <= 1.0:
                raise SchemaError(f"keypoint score must be in [0, 1], got {kp[2]}")

    def landmark_valid(self, idx: int) -> bool:
        return self.keypoints[idx][2] >= VALID_SCORE


@dataclass
class MiniBout:
    """One fixed-length slice of a bout with its local pose tracks."""

    frames: range
    tracks: dict[int, list[PoseSample]]


def pose_from_detection(d: Detection) -> Optional[PoseSample]:
    if d.keypoints is None:
        return None
    return PoseSample(frame_index=d.frame_index, keypoints=d.keypoints)


def landmark_mean_distance(a: PoseSample, b: PoseSample) -> float:
    """Mean distance over the shoulder/hip landmarks valid in both poses."""
    dists = []
    for idx in INTEGRATION_LANDMARKS:
        if a.landmark_valid(idx) and b.landmark_valid(idx):
            ax, ay, _ = a.keypoints[idx]
            bx, by, _ = b.keypoints[idx]
            dists.append(float(np.hypot(ax - bx, ay - by)))
    if not dists:
        raise IncomparablePoseError("poses share no valid shoulder or hip landmark")
    return sum(dists) / len(dists)


def partition_minibouts(bout_frames: range, length: int) -> list[range]:
    """Cut a frame range into consecutive length-sized pieces.

    A final remainder of at least 2 frames stands alone; a 1-frame remainder
    merges into the previous piece so no mini-bout is too short to track.
    """
    if length < 2:
        raise SchemaError(f"mini-bout length must be >= 2, got {length}")
    if bout_frames.step != 1:
        raise SchemaError("bout frame range must have step 1")
    if len(bout_frames) == 0:
        return []
    pieces = []
    pos = bout_frames.start
    while pos < bout_frames.stop:
        end = min(pos + length, bout_frames.stop)
        pieces.append(range(pos, end))
        pos = end
    if len(pieces) >= 2 and len(pieces[-1]) == 1:
        tail = pieces.pop()
        prev = pieces.pop()
        pieces.append(range(prev.start, tail.stop))
    return pieces


def _pose_cost_matrix(
    rows: Sequence[PoseSample], cols: Sequence[PoseSample]
) -> np.ndarray:
    cost = np.full((len(rows), len(cols)), np.inf)
    for i, a in enumerate(rows):
        for j, b in enumerate(cols):
            try:
                cost[i, j] = landmark_mean_distance(a, b)
            except IncomparablePoseError:
                pass  # stays inadmissible
    return cost


def track_minibout(
    frame_range: range, per_frame: Sequence[Sequence[PoseSample]], gate_px: float
) -> MiniBout:
    """Associate poses frame to frame within one mini-bout.

    per_frame must hold one (possibly empty) pose list per frame of
    frame_range. Matching is optimal per adjacent frame pair, gated at
    gate_px mean landmark distance; unmatched poses open new local tracks.
    """
    if len(per_frame) != len(frame_range):
        raise SchemaError(
            f"expected {len(frame_range)} frame slots, got {len(per_frame)}"
        )
    tracks: dict[int, list[PoseSample]] = {}
    active: dict[int, PoseSample] = {}
    next_local = 1
    for samples in per_frame:
        ids = list(active.keys())
        pairs: list[tuple[int, int]] = []
        if ids and samples:
            cost = _pose_cost_matrix([active[i] for i in ids], samples)
            pairs = solve_assignment(cost, gate_px)
        new_active: dict[int, PoseSample] = {}
        matched = set()
        for i, j in pairs:
            lid = ids[i]
            tracks[lid].append(samples[j])
            new_active[lid] = samples[j]
            matched.add(j)
        for j, s in enumerate(samples):
            if j not in matched:
                tracks[next_local] = [s]
                new_active[next_local] = s
                next_local += 1
        active = new_active
    return MiniBout(frames=frame_range, tracks=tracks)


def _boundary_sample(samples: Sequence[PoseSample], boundary: int) -> Optional[PoseSample]:
    """The track's sample nearest the boundary frame, if within the search window."""
    best = None
    for s in samples:
        gap = abs(s.frame_index - boundary)
        if gap <= _BOUNDARY_SEARCH_FRAMES and (best is None or gap < best[0]):
            best = (gap, s)
    return best[1] if best else None


def integrate_minibouts(
    prev: MiniBout,
    nxt: MiniBout,
    prev_ids: Optional[Mapping[int, int]] = None,
    fresh_start: Optional[int] = None,
) -> dict[int, int]:
    """Map the next mini-bout's local IDs onto the previous one's IDs.

    prev_ids translates prev's local IDs to global ones (identity when
    omitted). Matched next tracks inherit across the shared boundary;
    unmatched ones get fresh IDs counting up from fresh_start.
    """
    if prev_ids is None:
        prev_ids = {lid: lid for lid in prev.tracks}
    prev_boundary = prev.frames[-1]
    next_boundary = nxt.frames[0]

    prev_entries = []
    for lid, samples in prev.tracks.items():
        s = _boundary_sample(samples, prev_boundary)
        if s is not None:
            prev_entries.append((lid, s))
    next_entries = []
    for lid, samples in nxt.tracks.items():
        s = _boundary_sample(samples, next_boundary)
        if s is not None:
            next_entries.append((lid, s))

    pairs: list[tuple[int, int]] = []
    if prev_entries and next_entries:
        cost = _pose_cost_matrix([s for _, s in prev_entries], [s for _, s in next_entries])
        pairs = solve_assignment(cost, _NO_GATE)

    mapping: dict[int, int] = {}
    for i, j in pairs:
        mapping[next_entries[j][0]] = prev_ids[prev_entries[i][0]]
    if fresh_start is None:
        fresh_start = max(prev_ids.values(), default=0) + 1
    counter = fresh_start
    for lid in nxt.tracks:
        if lid not in mapping:
            mapping[lid] = counter
            counter += 1
    return mapping


def run_pose_tracking(
    stream: Sequence[FrameRecord], cfg: PipelineConfig
) -> list[tuple[int, int, PoseSample]]:
    """Pose-track one bout; returns (frame, global id, sample) rows.

    The first mini-bout's local IDs become global IDs 1..k in order of first
    appearance; later mini-bouts inherit through boundary integration.
    """
    frames = list(stream)
    if not frames:
        return []
    per_frame_map: dict[int, list[PoseSample]] = {}
    for rec in frames:
        poses = [p for p in (pose_from_detection(d) for d in rec.detections) if p is not None]
        per_frame_map[rec.frame_index] = poses
    bout_range = range(frames[0].frame_index, frames[-1].frame_index + 1)
    gate = 3.0 * cfg.proximity_threshold_px

    minibouts = [
        track_minibout(r, [per_frame_map.get(f, []) for f in r], gate)
        for r in partition_minibouts(bout_range, cfg.minibout_len_frames)
    ]

    table: list[tuple[int, int, PoseSample]] = []
    counter = 1
    prev_map: dict[int, int] = {}
    for k, mb in enumerate(minibouts):
        if k == 0:
            gmap = {}
            for lid in mb.tracks:  # insertion order is first-appearance order
                gmap[lid] = counter
                counter += 1
        else:
            gmap = integrate_minibouts(minibouts[k - 1], mb, prev_ids=prev_map,
                                       fresh_start=counter)
            if gmap:
                counter = max(counter, max(gmap.values()) + 1)
        prev_map = gmap
        for lid, samples in mb.tracks.items():
            for s in samples:
                table.append((s.frame_index, gmap[lid], s))
    table.sort(key=lambda row: (row[0], row[1]))
    return table


def pose_bbox(sample: PoseSample) -> tuple[float, float, float, float]:
    """Axis-aligned box over valid keypoints, floored at 1 px a side."""
    pts = [(x, y) for x, y, s in sample.keypoints if s >= VALID_SCORE]
    if not pts:
        raise DegeneratePoseError("no valid keypoint to bound")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return (min(xs), min(ys), max(max(xs) - min(xs), 1.0), max(max(ys) - min(ys), 1.0))


def to_track_rows(table: Sequence[tuple[int, int, PoseSample]]) -> list[TrackRow]:
    """MOT rows from a pose table; confidence is the mean valid-keypoint score."""
    rows = []
    for frame, gid, sample in table:
        try:
            bbox = pose_bbox(sample)
        except DegeneratePoseError:
            continue
        scores = [s for _, _, s in sample.keypoints if s >= VALID_SCORE]
        rows.append(
            TrackRow(
                frame_index=frame,
                track_id=gid,
                bbox=bbox,
                confidence=min(1.0, sum(scores) / len(scores)),
            )
        )
    return rows


# --- pose table files ---
#
# JSON Lines, one row per (frame, track): {"frame": N, "id": K, "keypoints":
# [[x, y, score] * 17]}, sorted strictly by (frame, id). This is the sidecar
# a pose-mode tracking run writes so line-of-sight analysis can reload the
# full keypoints later; the MOT CSV only keeps boxes.


def write_pose_table(
    table: Iterable[tuple[int, int, PoseSample]], sink: Source
) -> None:
    ordered = sorted(table, key=lambda row: (row[0], row[1]))
    with _opened(sink, "w") as fh:
        last: Optional[tuple[int, int]] = None
        for frame, gid, sample in ordered:
            if last is not None and (frame, gid) <= last:
                raise OrderingError(f"duplicate pose row for frame {frame}, id {gid}")
            last = (frame, gid)
            obj = {
                "frame": frame,
                "id": gid,
                "keypoints": [
                    [_round6(x), _round6(y), _round6(s)] for x, y, s in sample.keypoints
                ],
            }
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


def read_pose_table(source: Source) -> list[tuple[int, int, PoseSample]]:
    table: list[tuple[int, int, PoseSample]] = []
    with _opened(source, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(str(exc), line_number=lineno) from None
            if not isinstance(obj, dict) or not {"frame", "id", "keypoints"} <= set(obj):
                raise SchemaError(
                    f"line {lineno}: pose row needs 'frame', 'id' and 'keypoints'"
                )
            try:
                frame = int(obj["frame"])
                gid = int(obj["id"])
                sample = PoseSample(
                    frame_index=frame,
                    keypoints=tuple(tuple(kp) for kp in obj["keypoints"]),
                )
            except (SchemaError, TypeError, ValueError) as exc:
                raise SchemaError(f"line {lineno}: {exc}") from None
            if table and (frame, gid) <= (table[-1][0], table[-1][1]):
                raise OrderingError(
                    "rows must be sorted by (frame, id)", line_number=lineno
                )
            table.append((frame, gid, sample))
    return table
