"""Session-level orchestration over the per-bout trackers.

Trackers are scoped to a single bout: identity is not meant to survive a
rest period, so each bout segment gets a fresh tracker and the local IDs are
shifted to stay unique across the session. Rest-segment detections are never
tracked.
"""

from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .analytics import (
    Heatmap,
    IdMetrics,
    count_id_events,
    hotspot,
    line_of_sight_table,
    transition_accuracy,
)
from .descriptor_tracker import run_descriptor_tracking
from .errors import SchemaError
from .model import BOUT, BoutSegment, PipelineConfig, RingGeometry
from .pose_tracker import PoseSample, run_pose_tracking, to_track_rows
from .stream_io import FrameRecord, GroundTruthRecord, TrackRow, validate_segments

DESCRIPTOR_MODE = "descriptor"
POSE_MODE = "pose"
TRACKING_MODES = (DESCRIPTOR_MODE, POSE_MODE)


@dataclass(frozen=True)
class TrackingResult:
    """Session-wide track rows; pose mode also keeps the keypoint table."""

    rows: tuple[TrackRow, ...]
    pose_table: Optional[tuple[tuple[int, int, PoseSample], ...]] = None


def track_segments(
    frames: Sequence[FrameRecord],
    segments: Sequence[BoutSegment],
    cfg: PipelineConfig,
    mode: str = DESCRIPTOR_MODE,
) -> TrackingResult:
    """Track every bout segment independently with session-unique IDs.

    IDs restart at 1 inside each tracker, so each bout's IDs are shifted by
    the largest ID any earlier bout used.
    """
    if mode not in TRACKING_MODES:
        raise SchemaError(f"mode must be one of {TRACKING_MODES}, got {mode!r}")
    validate_segments(list(segments))

    rows: list[TrackRow] = []
    pose_table: list[tuple[int, int, PoseSample]] = []
    offset = 0
    for seg in segments:
        if seg.kind != BOUT:
            continue
        sub = [f for f in frames if seg.start_frame <= f.frame_index < seg.end_frame]
        if not sub:
            continue
        if mode == DESCRIPTOR_MODE:
            local = run_descriptor_tracking(sub, cfg)
            rows.extend(replace(r, track_id=r.track_id + offset) for r in local)
            local_ids = {r.track_id for r in local}
        else:
            table = run_pose_tracking(sub, cfg)
            shifted = [(f, gid + offset, s) for f, gid, s in table]
            pose_table.extend(shifted)
            rows.extend(to_track_rows(shifted))
            local_ids = {gid for _, gid, _ in table}
        offset += max(local_ids, default=0)

    rows.sort(key=lambda r: (r.frame_index, r.track_id))
    pose_table.sort(key=lambda row: (row[0], row[1]))
    return TrackingResult(
        rows=tuple(rows),
        pose_table=tuple(pose_table) if mode == POSE_MODE else None,
    )


def evaluate_tracks(
    rows: Sequence[TrackRow],
    gt: Sequence[GroundTruthRecord],
    gt_segments: Sequence[BoutSegment],
    cfg: PipelineConfig,
    pred_segments: Optional[Sequence[BoutSegment]] = None,
    tol_s: float = 2.0,
) -> tuple[IdMetrics, Optional[float]]:
    """Identity metrics, plus boundary accuracy when predictions are given.

    Identity is bout-scoped, so each bout is scored independently and the
    counts are summed; rest-period frames carry no identity at all. A person
    re-entering in a later bout under a new ID is not an event.
    """
    idu = ids = 0
    for seg in gt_segments:
        if seg.kind != BOUT:
            continue
        in_bout = [
            rec for rec in gt if seg.start_frame <= rec.frame_index < seg.end_frame
        ]
        per = count_id_events(rows, in_bout, cfg)
        idu += per.idu
        ids += per.ids
    metrics = IdMetrics(idu=idu, ids=ids)
    accuracy = None
    if pred_segments is not None:
        accuracy = transition_accuracy(pred_segments, gt_segments, tol_s, cfg.fps)
    return metrics, accuracy


def run_analysis(
    rows: Sequence[TrackRow],
    ring: RingGeometry,
    cfg: PipelineConfig,
    pose_table: Optional[Sequence[tuple[int, int, PoseSample]]] = None,
) -> tuple[Heatmap, list[tuple[int, int, float, float]]]:
    """Occupancy heatmap, and line-of-sight rows when poses are available."""
    hm = hotspot(rows, ring, cfg.hotspot_grid)
    los = line_of_sight_table(pose_table) if pose_table else []
    return hm, los
