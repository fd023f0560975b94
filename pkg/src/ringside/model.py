"""Domain types shared by the whole pipeline, plus the elementary geometry.

Coordinates are pixels in image space (y grows downward). Bounding boxes are
top-left anchored ``(x, y, w, h)``. All types here are immutable values and
all operations are pure functions.
"""

from dataclasses import dataclass, field
from typing import Optional

from .errors import GeometryError, SchemaError

Point = tuple[float, float]
BBox = tuple[float, float, float, float]

BOUT = "bout"
REST = "rest"

COCO_KEYPOINT_COUNT = 17


def _orient(a: Point, b: Point, c: Point) -> float:
    """Twice the signed area of triangle abc (positive = counterclockwise in math axes)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a: Point, b: Point, p: Point) -> bool:
    """Whether p, already known collinear with a-b, lies within the segment's extent."""
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


@dataclass(frozen=True)
class Detection:
    """One observed person in one frame.

    ``embedding`` is an optional appearance vector whose length must be the
    same for every detection of a stream. ``keypoints`` is an optional tuple
    of 17 ``(x, y, score)`` triples in COCO order.
    """

    frame_index: int
    bbox: BBox
    confidence: float
    embedding: Optional[tuple[float, ...]] = None
    keypoints: Optional[tuple[tuple[float, float, float], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))
        if self.embedding is not None:
            object.__setattr__(self, "embedding", tuple(float(v) for v in self.embedding))
        if self.keypoints is not None:
            object.__setattr__(
                self, "keypoints", tuple(tuple(float(v) for v in kp) for kp in self.keypoints)
            )
        if self.frame_index < 0:
            raise SchemaError(f"frame_index must be non-negative, got {self.frame_index}")
        if len(self.bbox) != 4:
            raise SchemaError(f"bbox must have 4 entries, got {len(self.bbox)}")
        if self.bbox[2] <= 0 or self.bbox[3] <= 0:
            raise SchemaError(f"bbox must have positive width and height, got {self.bbox}")
        if not 0.0 <= self.confidence <= 1.0:
            raise SchemaError(f"confidence must be in [0, 1], got {self.confidence}")
        if self.keypoints is not None:
            if len(self.keypoints) != COCO_KEYPOINT_COUNT:
                raise SchemaError(
                    f"keypoints must have {COCO_KEYPOINT_COUNT} triples, got {len(self.keypoints)}"
                )
            for kp in self.keypoints:
                if len(kp) != 3:
                    raise SchemaError(f"keypoint must be (x, y, score), got {kp}")
                if not 0.0 <= kp[2] <= 1.0:
                    raise SchemaError(f"keypoint score must be in [0, 1], got {kp[2]}")


@dataclass(frozen=True)
class RingGeometry:
    """The ring as a convex quadrilateral with one virtual line per rope edge."""

    corners: tuple[Point, Point, Point, Point]

    def __post_init__(self):
        object.__setattr__(
            self, "corners", tuple((float(x), float(y)) for x, y in self.corners)
        )
        if len(self.corners) != 4:
            raise GeometryError(f"ring needs exactly 4 corners, got {len(self.corners)}")
        c = self.corners
        signs = [_orient(c[i], c[(i + 1) % 4], c[(i + 2) % 4]) for i in range(4)]
        if any(s == 0 for s in signs):
            raise GeometryError("ring corners are degenerate (collinear or repeated)")
        if not (all(s > 0 for s in signs) or all(s < 0 for s in signs)):
            raise GeometryError("ring corners do not form a convex quadrilateral")

    @property
    def virtual_lines(self) -> tuple[tuple[Point, Point], ...]:
        """The four rope segments, each joining consecutive corners."""
        c = self.corners
        return tuple((c[i], c[(i + 1) % 4]) for i in range(4))

    def bounding_box(self) -> BBox:
        xs = [p[0] for p in self.corners]
        ys = [p[1] for p in self.corners]
        return (min(xs), min(ys), max(xs) - min(xs), max(ys) - min(ys))


@dataclass(frozen=True)
class BoutSegment:
    """A half-open frame interval [start_frame, end_frame) classified bout or rest."""

    start_frame: int
    end_frame: int
    kind: str

    def __post_init__(self):
        if self.start_frame < 0:
            raise SchemaError(f"start_frame must be non-negative, got {self.start_frame}")
        if self.start_frame >= self.end_frame:
            raise SchemaError(
                f"segment must satisfy start < end, got [{self.start_frame}, {self.end_frame})"
            )
        if self.kind not in (BOUT, REST):
            raise SchemaError(f"segment kind must be '{BOUT}' or '{REST}', got {self.kind!r}")

    def __len__(self) -> int:
        return self.end_frame - self.start_frame


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable parameters for the whole pipeline.

    Defaults reflect the nominal capture setup: 70 FPS sessions of 120 s
    bouts separated by 60 s rests, a 40 px proximity threshold, three people
    expected inside the ring, and a 0.8 blend weight favouring the positional
    cost matrix. Desk-scale test runs pass scaled-down values explicitly.
    """

    fps: float = 70.0
    bout_duration_s: float = 120.0
    rest_duration_s: float = 60.0
    proximity_threshold_px: float = 40.0
    expected_in_ring_count: int = 3
    position_weight: float = 0.8
    max_track_age_frames: int = 10000
    minibout_len_frames: int = 120
    vote_min: int = 2
    boundary_refractory_s: float = 60.0
    cue_window_frames: int = 70
    gate_threshold: float = 1.0
    gt_iou_threshold: float = 0.5
    hotspot_grid: tuple[int, int] = (32, 32)

    def __post_init__(self):
        object.__setattr__(self, "hotspot_grid", tuple(int(v) for v in self.hotspot_grid))
        positives = [
            ("fps", self.fps),
            ("bout_duration_s", self.bout_duration_s),
            ("rest_duration_s", self.rest_duration_s),
            ("proximity_threshold_px", self.proximity_threshold_px),
            ("expected_in_ring_count", self.expected_in_ring_count),
            ("max_track_age_frames", self.max_track_age_frames),
            ("minibout_len_frames", self.minibout_len_frames),
            ("boundary_refractory_s", self.boundary_refractory_s),
            ("cue_window_frames", self.cue_window_frames),
        ]
        for name, value in positives:
            if value <= 0:
                raise SchemaError(f"{name} must be strictly positive, got {value}")
        if not 0.0 <= self.position_weight <= 1.0:
            raise SchemaError(f"position_weight must be in [0, 1], got {self.position_weight}")
        if self.vote_min not in (1, 2, 3):
            raise SchemaError(f"vote_min must be 1, 2 or 3, got {self.vote_min}")
        if not 0.0 < self.gate_threshold <= 1.0:
            raise SchemaError(f"gate_threshold must be in (0, 1], got {self.gate_threshold}")
        if not 0.0 < self.gt_iou_threshold <= 1.0:
            raise SchemaError(f"gt_iou_threshold must be in (0, 1], got {self.gt_iou_threshold}")
        if len(self.hotspot_grid) != 2 or any(v < 1 for v in self.hotspot_grid):
            raise SchemaError(f"hotspot_grid dims must be >= 1, got {self.hotspot_grid}")

    @property
    def bout_frames(self) -> int:
        return round(self.bout_duration_s * self.fps)

    @property
    def rest_frames(self) -> int:
        return round(self.rest_duration_s * self.fps)

    @property
    def refractory_frames(self) -> int:
        return round(self.boundary_refractory_s * self.fps)


def centroid(bbox: BBox) -> Point:
    """Centre of a top-left anchored (x, y, w, h) box."""
    x, y, w, h = bbox
    if w <= 0 or h <= 0:
        raise GeometryError(f"bbox must have positive width and height, got {bbox}")
    return (x + w / 2.0, y + h / 2.0)


def inside_ring(p: Point, ring: RingGeometry) -> bool:
    """Whether p lies inside the ring quadrilateral, boundary inclusive.

    This is the geometric form of blacking out the periphery: detections
    whose centroid fails this test are ignored by in-ring statistics.
    """
    corners = ring.corners
    sign = 0.0
    for i in range(4):
        cr = _orient(corners[i], corners[(i + 1) % 4], p)
        if cr == 0.0:
            continue
        if sign == 0.0:
            sign = cr
        elif (cr > 0.0) != (sign > 0.0):
            return False
    return True


def crosses_line(p_prev: Point, p_cur: Point, line: tuple[Point, Point]) -> bool:
    """Whether the motion segment p_prev -> p_cur touches the virtual line.

    True when the two segments share any point: a proper crossing, an
    endpoint landing exactly on the line (a centroid sitting on the rope
    counts as a crossing), or a collinear overlap. Evaluating on the
    inter-frame motion segment rather than per-frame coordinates means a
    crossing that happens between two samples is still caught.
    """
    a, b = line
    if a == b:
        raise GeometryError(f"virtual line endpoints must be distinct, got {line}")
    d1 = _orient(a, b, p_prev)
    d2 = _orient(a, b, p_cur)
    d3 = _orient(p_prev, p_cur, a)
    d4 = _orient(p_prev, p_cur, b)
    if ((d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0) and (
        (d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0
    ):
        return True
    if d1 == 0 and _on_segment(a, b, p_prev):
        return True
    if d2 == 0 and _on_segment(a, b, p_cur):
        return True
    if d3 == 0 and _on_segment(p_prev, p_cur, a):
        return True
    if d4 == 0 and _on_segment(p_prev, p_cur, b):
        return True
    return False
