"""Evaluation metrics and trait analytics over finished tracks.

Identity metrics distinguish two kinds of continuity error: an ID update
(a person's track replaced by a brand-new ID, or one from its own past) and
an ID switch (a person's track adopts an ID that previously belonged to
someone else). Trait analytics are the ring-occupancy hotspot grid and the
per-boxer line-of-sight direction.
"""

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DegeneratePoseError, MetricError, SchemaError
from .model import BOUT, BBox, BoutSegment, PipelineConfig, Point, RingGeometry, centroid, inside_ring
from .pose_tracker import (
    LEFT_SHOULDER,
    NOSE,
    RIGHT_SHOULDER,
    PoseSample,
    pose_bbox,
)
from .stream_io import GroundTruthRecord, Source, TrackRow, _fmt_coord, _opened, _round6


@dataclass(frozen=True)
class IdMetrics:
    idu: int
    ids: int

    def __post_init__(self):
        if self.idu < 0 or self.ids < 0:
            raise SchemaError(f"event counts must be non-negative, got {self}")


@dataclass(frozen=True)
class Heatmap:
    """Ring-occupancy grid; cells normalized so the densest cell is 1."""

    width: int
    height: int
    cells: tuple[tuple[float, ...], ...]  # rows, row-major
    counts: tuple[tuple[int, ...], ...]  # raw hits before normalization

    def __post_init__(self):
        for row in self.cells:
            for v in row:
                if not 0.0 <= v <= 1.0:
                    raise SchemaError(f"heatmap cell out of [0, 1]: {v}")


def bbox_iou(a: BBox, b: BBox) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    if inter == 0.0:
        return 0.0
    return inter / (aw * ah + bw * bh - inter)


def match_to_gt(
    pred_frame: Sequence[tuple[int, BBox]],
    gt_frame: GroundTruthRecord,
    iou_min: float,
) -> list[tuple[int, int]]:
    """Match predicted boxes to annotated people, maximizing total IoU.

    Only pairs with IoU >= iou_min are eligible; a prediction is left
    unmatched rather than forced onto a bad box.
    """
    if not 0.0 < iou_min <= 1.0:
        raise SchemaError(f"iou_min must be in (0, 1], got {iou_min}")
    if not pred_frame or not gt_frame.entries:
        return []
    iou = np.zeros((len(pred_frame), len(gt_frame.entries)))
    for i, (_, pbox) in enumerate(pred_frame):
        for j, (_, gbox) in enumerate(gt_frame.entries):
            v = bbox_iou(pbox, gbox)
            if v >= iou_min:
                iou[i, j] = v
    rows, cols = linear_sum_assignment(-iou)
    out = []
    for i, j in zip(rows, cols):
        if iou[i, j] > 0.0:
            out.append((pred_frame[i][0], gt_frame.entries[j][0]))
    return sorted(out)


def count_id_events(
    pred_rows: Sequence[TrackRow],
    gt: Sequence[GroundTruthRecord],
    cfg: PipelineConfig,
) -> IdMetrics:
    """Count identity-continuity errors against ground truth.

    For each person, frames where their matched predicted ID changes are
    events. The event is a switch when the incoming ID already belonged to a
    different person earlier in the bout, else an update. Ownership history
    updates only after a frame is fully classified, so a mutual swap between
    two people counts as two switches.
    """
    by_frame: dict[int, list[TrackRow]] = {}
    for r in pred_rows:
        by_frame.setdefault(r.frame_index, []).append(r)

    owners: dict[int, set[int]] = {}
    last_id: dict[int, int] = {}
    idu = ids = 0
    for rec in gt:
        preds = [(r.track_id, r.bbox) for r in by_frame.get(rec.frame_index, [])]
        pairs = match_to_gt(preds, rec, cfg.gt_iou_threshold)
        for tid, pid in pairs:
            prev = last_id.get(pid)
            if prev is not None and prev != tid:
                if any(owner != pid for owner in owners.get(tid, ())):
                    ids += 1
                else:
                    idu += 1
        for tid, pid in pairs:
            last_id[pid] = tid
            owners.setdefault(tid, set()).add(pid)
    return IdMetrics(idu=idu, ids=ids)


def transition_accuracy(
    pred: Sequence[BoutSegment], gt: Sequence[BoutSegment], tol_s: float, fps: float
) -> float:
    """Fraction of ground-truth bouts whose boundaries are both recovered.

    A ground-truth bout is recovered when a predicted bout (taken one-to-one,
    greedily in start order) has start and end within tol_s * fps frames.
    """
    if tol_s <= 0:
        raise SchemaError(f"tol_s must be positive, got {tol_s}")
    gt_bouts = sorted((s for s in gt if s.kind == BOUT), key=lambda s: s.start_frame)
    pred_bouts = sorted((s for s in pred if s.kind == BOUT), key=lambda s: s.start_frame)
    if not gt_bouts:
        raise MetricError("no ground-truth bouts to recover")
    tol = tol_s * fps
    consumed = [False] * len(pred_bouts)
    recovered = 0
    for g in gt_bouts:
        for k, p in enumerate(pred_bouts):
            if consumed[k]:
                continue
            if abs(p.start_frame - g.start_frame) <= tol and abs(p.end_frame - g.end_frame) <= tol:
                consumed[k] = True
                recovered += 1
                break
    return recovered / len(gt_bouts)


def hotspot(
    rows: Sequence[TrackRow], ring: RingGeometry, grid: tuple[int, int]
) -> Heatmap:
    """Accumulate in-ring track centroids into a gw x gh occupancy grid.

    Cells live under the affine map from the ring's bounding box; points on
    the far edges land in the last cell. Normalized by the densest cell.
    """
    gw, gh = int(grid[0]), int(grid[1])
    if gw < 1 or gh < 1:
        raise SchemaError(f"grid dims must be >= 1, got {grid}")
    bx, by, bw, bh = ring.bounding_box()
    counts = np.zeros((gh, gw), dtype=int)
    for r in rows:
        c = centroid(r.bbox)
        if not inside_ring(c, ring):
            continue
        gx = min(int((c[0] - bx) / bw * gw), gw - 1)
        gy = min(int((c[1] - by) / bh * gh), gh - 1)
        counts[gy, gx] += 1
    peak = counts.max()
    cells = counts / peak if peak > 0 else counts.astype(float)
    return Heatmap(
        width=gw,
        height=gh,
        cells=tuple(tuple(float(v) for v in row) for row in cells),
        counts=tuple(tuple(int(v) for v in row) for row in counts),
    )


def _unit(v: Point) -> Point:
    n = float(np.hypot(v[0], v[1]))
    return (v[0] / n, v[1] / n)


def line_of_sight(
    pose: PoseSample,
    prev_los: Optional[Point] = None,
    velocity: Optional[Point] = None,
) -> Point:
    """Top-view facing direction: the unit normal to the shoulder axis.

    The normal's sign is chosen by the first applicable rule: toward the
    nose, along the velocity, along the previous line of sight, then the
    positive-determinant convention.
    """
    if not (pose.landmark_valid(LEFT_SHOULDER) and pose.landmark_valid(RIGHT_SHOULDER)):
        raise DegeneratePoseError("shoulder landmark missing or below validity threshold")
    lx, ly, _ = pose.keypoints[LEFT_SHOULDER]
    rx, ry, _ = pose.keypoints[RIGHT_SHOULDER]
    ax, ay = rx - lx, ry - ly
    if ax == 0.0 and ay == 0.0:
        raise DegeneratePoseError("shoulders coincide")
    n = _unit((ay, -ax))
    candidates = (n, (-n[0], -n[1]))

    def toward(direction: Optional[Point]) -> Optional[Point]:
        if direction is None:
            return None
        for c in candidates:
            dot = c[0] * direction[0] + c[1] * direction[1]
            if dot > 0.0:
                return c
        return None

    if pose.landmark_valid(NOSE):
        nx, ny, _ = pose.keypoints[NOSE]
        mid = ((lx + rx) / 2.0, (ly + ry) / 2.0)
        pick = toward((nx - mid[0], ny - mid[1]))
        if pick is not None:
            return pick
    pick = toward(velocity)
    if pick is not None:
        return pick
    pick = toward(prev_los)
    if pick is not None:
        return pick
    # positive determinant of (shoulder axis, normal)
    return n if ax * n[1] - ay * n[0] > 0.0 else (-n[0], -n[1])


def line_of_sight_table(
    pose_table: Sequence[tuple[int, int, PoseSample]],
) -> list[tuple[int, int, float, float]]:
    """Per-row line of sight for a pose-tracking table.

    Velocity comes from the track's own box-centroid motion. When a pose is
    too degenerate to solve, the track's previous direction is reused; rows
    before a track's first solvable pose are dropped.
    """
    ordered = sorted(pose_table, key=lambda row: (row[0], row[1]))
    prev_los: dict[int, Point] = {}
    prev_pos: dict[int, Point] = {}
    out = []
    for frame, gid, sample in ordered:
        velocity = None
        try:
            pos = centroid(pose_bbox(sample))
        except DegeneratePoseError:
            pos = None
        if pos is not None and gid in prev_pos:
            dx, dy = pos[0] - prev_pos[gid][0], pos[1] - prev_pos[gid][1]
            if dx != 0.0 or dy != 0.0:
                velocity = (dx, dy)
        try:
            los = line_of_sight(sample, prev_los=prev_los.get(gid), velocity=velocity)
        except DegeneratePoseError:
            los = prev_los.get(gid)
        if pos is not None:
            prev_pos[gid] = pos
        if los is None:
            continue
        prev_los[gid] = los
        out.append((frame, gid, los[0], los[1]))
    return out


# --- file writers ---


def write_metrics(
    metrics: IdMetrics, accuracy: Optional[float], sink: Source
) -> None:
    obj: dict = {
        "idu": metrics.idu,
        "ids": metrics.ids,
        "transition_accuracy": None if accuracy is None else _round6(accuracy),
    }
    with _opened(sink, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_metrics(source: Source) -> dict:
    with _opened(source, "r") as fh:
        return json.load(fh)


def write_heatmap_pgm(hm: Heatmap, sink: Source) -> None:
    """Plain-text PGM (P2), cells scaled to 0-255, row-major."""
    with _opened(sink, "w") as fh:
        fh.write(f"P2\n{hm.width} {hm.height}\n255\n")
        for row in hm.cells:
            fh.write(" ".join(str(round(v * 255)) for v in row) + "\n")


def write_line_of_sight(
    rows: Iterable[tuple[int, int, float, float]], sink: Source
) -> None:
    with _opened(sink, "w") as fh:
        for frame, gid, ux, uy in rows:
            fh.write(f"{frame},{gid},{_fmt_coord(ux)},{_fmt_coord(uy)}\n")
