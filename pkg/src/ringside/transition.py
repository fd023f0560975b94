"""Bout boundary detection from three per-frame cues and a refractory time gate.

The cues are rope-line crossing, close proximity between in-ring people, and
the in-ring person count. Each is smoothed by a sliding-window majority, then
a frame becomes a boundary when at least vote_min cues agree and enough time
has passed since the previous boundary. Segments between boundaries are
classified bout or rest by their median in-ring count.
"""

import statistics
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import EmptyStreamError, SchemaError
from .model import (
    BOUT,
    REST,
    BoutSegment,
    Detection,
    PipelineConfig,
    Point,
    RingGeometry,
    centroid,
    crosses_line,
    inside_ring,
)
from .stream_io import FrameRecord


@dataclass(frozen=True)
class CueVector:
    """Smoothed per-window transition evidence, one flag per cue."""

    ring_crossing: bool
    close_proximity: bool
    person_count: bool

    @property
    def active(self) -> int:
        return int(self.ring_crossing) + int(self.close_proximity) + int(self.person_count)


@dataclass(frozen=True)
class TransitionEvent:
    frame_index: int
    cues_active: int

    def __post_init__(self):
        if not 0 <= self.cues_active <= 3:
            raise SchemaError(f"cues_active must be in [0, 3], got {self.cues_active}")


def _nearest_neighbor_pairs(
    prev: Sequence[Point], cur: Sequence[Point], max_dist: Optional[float]
) -> list[tuple[Point, Point]]:
    """Greedy closest-first pairing; pairs beyond max_dist stay unmatched."""
    candidates = []
    for i, p in enumerate(prev):
        for j, q in enumerate(cur):
            d = ((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2) ** 0.5
            if max_dist is None or d <= max_dist:
                candidates.append((d, i, j))
    candidates.sort()
    used_prev: set[int] = set()
    used_cur: set[int] = set()
    pairs = []
    for _, i, j in candidates:
        if i in used_prev or j in used_cur:
            continue
        used_prev.add(i)
        used_cur.add(j)
        pairs.append((prev[i], cur[j]))
    return pairs


def cue_ring_crossing(
    prev_centroids: Sequence[Point],
    cur_centroids: Sequence[Point],
    ring: RingGeometry,
    max_match_dist: Optional[float] = None,
) -> bool:
    """True when any nearest-neighbor motion segment touches a rope line.

    max_match_dist caps the pairing distance so a person disappearing on one
    side of the ring while another appears elsewhere is not read as motion.
    """
    for p_prev, p_cur in _nearest_neighbor_pairs(prev_centroids, cur_centroids, max_match_dist):
        for line in ring.virtual_lines:
            if crosses_line(p_prev, p_cur, line):
                return True
    return False


def cue_close_proximity(centroids: Sequence[Point], threshold_px: float) -> bool:
    """True when some pair of centroids sits within threshold_px (inclusive)."""
    for i in range(len(centroids)):
        for j in range(i + 1, len(centroids)):
            a, b = centroids[i], centroids[j]
            if ((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2) ** 0.5 <= threshold_px:
                return True
    return False


def cue_person_count(
    detections: Sequence[Detection], ring: RingGeometry, expected: int
) -> bool:
    """True when exactly `expected` detections have their centroid inside the ring."""
    count = sum(1 for d in detections if inside_ring(centroid(d.bbox), ring))
    return count == expected


def vote(cues: CueVector, vote_min: int) -> bool:
    return cues.active >= vote_min


def _majority_smooth(raw: Sequence[bool], window: int) -> list[bool]:
    """Trailing-window strict majority; the window is clipped at the stream start."""
    out = []
    true_count = 0
    for i, v in enumerate(raw):
        true_count += int(v)
        if i >= window:
            true_count -= int(raw[i - window])
        width = min(i + 1, window)
        out.append(2 * true_count > width)
    return out


def declare_events(
    frame_indices: Sequence[int], cues: Sequence[CueVector], cfg: PipelineConfig
) -> list[TransitionEvent]:
    """Boundary frames: vote passes and the refractory period has elapsed."""
    events: list[TransitionEvent] = []
    refractory = cfg.refractory_frames
    last: Optional[int] = None
    for f, cv in zip(frame_indices, cues):
        if not vote(cv, cfg.vote_min):
            continue
        if last is not None and f - last < refractory:
            continue
        events.append(TransitionEvent(frame_index=f, cues_active=cv.active))
        last = f
    return events


def segment_bouts(
    stream: Sequence[FrameRecord], ring: RingGeometry, cfg: PipelineConfig
) -> list[BoutSegment]:
    """Split a session into alternating bout/rest segments.

    The person-count cue enters the vote as departure from the expected
    in-ring count: a full ring is the steady bout state, so it is the count
    *changing away* from expected that testifies to a transition. The count
    equality itself still classifies segments afterwards.
    """
    frames = list(stream)
    if not frames:
        raise EmptyStreamError("cannot segment an empty stream")

    all_centroids: list[list[Point]] = []
    in_ring_counts: list[int] = []
    in_ring_centroids: list[list[Point]] = []
    for rec in frames:
        cents = [centroid(d.bbox) for d in rec.detections]
        inside = [c for c in cents if inside_ring(c, ring)]
        all_centroids.append(cents)
        in_ring_centroids.append(inside)
        in_ring_counts.append(len(inside))

    crossing_raw = [False]
    for i in range(1, len(frames)):
        crossing_raw.append(
            cue_ring_crossing(
                all_centroids[i - 1],
                all_centroids[i],
                ring,
                max_match_dist=cfg.proximity_threshold_px,
            )
        )
    proximity_raw = [
        cue_close_proximity(in_ring_centroids[i], cfg.proximity_threshold_px)
        for i in range(len(frames))
    ]
    count_raw = [c != cfg.expected_in_ring_count for c in in_ring_counts]

    w = cfg.cue_window_frames
    smoothed = [
        CueVector(ring_crossing=a, close_proximity=b, person_count=c)
        for a, b, c in zip(
            _majority_smooth(crossing_raw, w),
            _majority_smooth(proximity_raw, w),
            _majority_smooth(count_raw, w),
        )
    ]

    frame_indices = [rec.frame_index for rec in frames]
    events = declare_events(frame_indices, smoothed, cfg)

    first = frame_indices[0]
    last = frame_indices[-1]
    bounds = [first]
    for e in events:
        if first < e.frame_index <= last:
            bounds.append(e.frame_index)
    bounds.append(last + 1)

    segments: list[BoutSegment] = []
    for lo, hi in zip(bounds, bounds[1:]):
        counts = [
            c for f, c in zip(frame_indices, in_ring_counts) if lo <= f < hi
        ]
        kind = BOUT if counts and statistics.median(counts) == cfg.expected_in_ring_count else REST
        if segments and segments[-1].kind == kind:
            prev = segments.pop()
            segments.append(BoutSegment(prev.start_frame, hi, kind))
        else:
            segments.append(BoutSegment(lo, hi, kind))
    return segments
