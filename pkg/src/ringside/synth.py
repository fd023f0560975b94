"""Deterministic synthetic session generator.

Every scenario is scripted from the same timeline: per bout, two boxers
circle the ring center in antipodal phase with a referee wandering a side
pocket; per rest, the pair climbs out over opposite ropes and the next pair
climbs in shortly before its bout starts. Climbing is modeled as a brief
straddle of the rope line (alternating inside/outside), which is what makes
entries and exits detectable from centroids alone. Optional flourishes layer
on top: clinches (the pair spirals together until closer than the proximity
threshold, then separates), a rope-touching bystander, detection dropout, and
bbox jitter. The ground truth is exact; detections are derived from it, so
generated sessions serve as their own oracle.

All randomness comes from counter-keyed generators seeded by (seed, channel,
agent), so output is byte-identical for identical specs regardless of which
features are enabled.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import SchemaError
from .model import (
    BOUT,
    REST,
    BoutSegment,
    Detection,
    PipelineConfig,
    Point,
    RingGeometry,
)
from .stream_io import FrameRecord, GroundTruthRecord

DEFAULT_RING = RingGeometry(
    corners=((100.0, 80.0), (540.0, 80.0), (540.0, 400.0), (100.0, 400.0))
)

REFEREE_PID = 1

# box drawn around every ground-truth centroid
_PERSON_BOX = 36.0
# keypoint skeleton offsets along heading (h) and its left normal (l)
_NOSE_AHEAD = 18.0
_SHOULDER_AHEAD, _SHOULDER_HALF = 6.0, 17.0
_HIP_BEHIND, _HIP_HALF = 8.0, 14.0
_KP_SCORE = 0.95
_CONFIDENCE = 0.95

_ORBIT_RADIUS = 70.0
_ENTRY_RADIUS = 155.0
_CLINCH_SCALE = 25.0 / 140.0  # hold separation over orbit separation
_STRADDLE = 5.0  # rope straddle amplitude while climbing

# choreography phase lengths, seconds
_CLIMB_S = 1.2
_STAGE_S = 1.5
_EASE_S = 2.0
_WALKAWAY_S = 1.0
_APPROACH_S = 1.5
_CLINCH_RAMP_S = 1.5
_CLINCH_HOLD_S = 0.6

# rng channels
_CH_WALK, _CH_JITTER, _CH_DROP, _CH_EMBED, _CH_MEAN = 1, 2, 3, 4, 5


@dataclass(frozen=True)
class ScenarioSpec:
    """Complete description of one synthetic session."""

    seed: int
    n_bouts: int = 3
    fps: float = 10.0
    bout_s: float = 12.0
    rest_s: float = 6.0
    ring: RingGeometry = DEFAULT_RING
    boxer_speed_px: float = 7.0
    clinch_events: int = 0
    dropout_prob: float = 0.0
    bbox_jitter_px: float = 0.0
    identical_attire: bool = False
    bystander_rope_touch: bool = False
    embedding_dim: int = 16
    emit_keypoints: bool = True
    # climb-in finishes this many seconds relative to the rest's end;
    # more negative means the next pair enters earlier
    entry_offset_s: float = -0.3

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise SchemaError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.n_bouts < 1:
            raise SchemaError(f"n_bouts must be >= 1, got {self.n_bouts}")
        if self.fps <= 0:
            raise SchemaError(f"fps must be positive, got {self.fps}")
        if self.bout_s < 6.0:
            raise SchemaError(f"bout_s must be >= 6, got {self.bout_s}")
        if self.rest_s < 3.0:
            raise SchemaError(f"rest_s must be >= 3, got {self.rest_s}")
        if not 0.0 <= self.dropout_prob < 1.0:
            raise SchemaError(f"dropout_prob must be in [0, 1), got {self.dropout_prob}")
        if self.bbox_jitter_px < 0:
            raise SchemaError(f"bbox_jitter_px must be >= 0, got {self.bbox_jitter_px}")
        if self.boxer_speed_px <= 0:
            raise SchemaError(f"boxer_speed_px must be positive, got {self.boxer_speed_px}")
        if self.embedding_dim < 1:
            raise SchemaError(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        if self.clinch_events < 0:
            raise SchemaError(f"clinch_events must be >= 0, got {self.clinch_events}")
        if self.entry_offset_s > 0:
            raise SchemaError(
                f"entry_offset_s must be <= 0 (entry must finish by the bout), "
                f"got {self.entry_offset_s}"
            )
        window = 2 * _CLINCH_RAMP_S + _CLINCH_HOLD_S
        if self.clinch_events and self.bout_s / (self.clinch_events + 1) < window + 0.2:
            raise SchemaError(
                f"{self.clinch_events} clinches do not fit in a {self.bout_s} s bout"
            )
        if self.rest_s * self.fps < round(_CLIMB_S * self.fps) - self.entry_offset_s * self.fps + 2:
            raise SchemaError("rest too short for the exit/entry choreography")

    def bystander_pid(self) -> int:
        return 2 * self.n_bouts + 2


def scenario_presets() -> list[tuple[str, ScenarioSpec]]:
    """Named scenarios covering each failure mode; seed 0 placeholder."""
    return [
        ("clean", ScenarioSpec(seed=0)),
        ("clinch", ScenarioSpec(seed=0, clinch_events=2)),
        ("identical-attire", ScenarioSpec(seed=0, clinch_events=2, identical_attire=True)),
        ("dropout", ScenarioSpec(seed=0, dropout_prob=0.15, bbox_jitter_px=1.0)),
        ("rope-toucher", ScenarioSpec(seed=0, bystander_rope_touch=True)),
        ("early-entry", ScenarioSpec(seed=0, entry_offset_s=-1.0)),
    ]


def preset_spec(
    name: str,
    seed: int,
    n_bouts: Optional[int] = None,
    fps: Optional[float] = None,
) -> ScenarioSpec:
    for preset_name, spec in scenario_presets():
        if preset_name == name:
            out = replace(spec, seed=seed)
            if n_bouts is not None:
                out = replace(out, n_bouts=n_bouts)
            if fps is not None:
                out = replace(out, fps=fps)
            return out
    known = ", ".join(n for n, _ in scenario_presets())
    raise SchemaError(f"unknown preset {name!r}; expected one of: {known}")


def suggested_config(spec: ScenarioSpec) -> PipelineConfig:
    """Detector/tracker configuration matched to the scenario's time scale."""
    return PipelineConfig(
        fps=spec.fps,
        bout_duration_s=spec.bout_s,
        rest_duration_s=spec.rest_s,
        cue_window_frames=max(2, round(1.0 * spec.fps)),
        boundary_refractory_s=0.5 * spec.rest_s,
        minibout_len_frames=max(2, round(4.0 * spec.fps)),
    )


def _unit(x: float, y: float) -> Point:
    n = math.hypot(x, y)
    return (x / n, y / n)


class _Wiggle:
    """Per-agent bounded random drift (an Ornstein-Uhlenbeck walk)."""

    def __init__(self, rng, sigma=0.6, decay=0.9, clip=3.0):
        self.rng, self.sigma, self.decay, self.clip = rng, sigma, decay, clip
        self.x = self.y = 0.0

    def step(self) -> Point:
        nx, ny = self.rng.standard_normal(2)
        self.x = float(np.clip(self.decay * self.x + self.sigma * nx, -self.clip, self.clip))
        self.y = float(np.clip(self.decay * self.y + self.sigma * ny, -self.clip, self.clip))
        return (self.x, self.y)


@dataclass
class _BoutPlan:
    start: int
    end: int
    pid_a: int  # enters/exits over the top rope
    pid_b: int  # bottom rope
    climb_in: Optional[range]  # None for the opening bout
    settle_end: int
    stage_start: int
    climb_out: range
    gone: int
    clinches: list[tuple[int, int, int, int]] = field(default_factory=list)


def _plan_bouts(spec: ScenarioSpec) -> list[_BoutPlan]:
    f = spec.fps
    bout_f, rest_f = round(spec.bout_s * f), round(spec.rest_s * f)
    climb_f = round(_CLIMB_S * f)
    off_f = round(spec.entry_offset_s * f)
    ramp_f, hold_f = round(_CLINCH_RAMP_S * f), round(_CLINCH_HOLD_S * f)
    plans = []
    for b in range(spec.n_bouts):
        ts = b * (bout_f + rest_f)
        te = ts + bout_f
        clinches = []
        for i in range(spec.clinch_events):
            center = ts + round(bout_f * (i + 1) / (spec.clinch_events + 1))
            grip = center - hold_f // 2
            clinches.append((grip - ramp_f, grip, grip + hold_f, grip + hold_f + ramp_f))
        plans.append(
            _BoutPlan(
                start=ts,
                end=te,
                pid_a=2 * b + 2,
                pid_b=2 * b + 3,
                climb_in=None if b == 0 else range(ts + off_f - climb_f, ts + off_f),
                settle_end=ts,
                stage_start=te - round(_STAGE_S * f),
                climb_out=range(te, te + climb_f),
                gone=te + climb_f + round(_WALKAWAY_S * f),
                clinches=clinches,
            )
        )
    return plans


def _clinch_scale(plan: _BoutPlan, t: int) -> float:
    for a0, a1, h1, r1 in plan.clinches:
        if a0 <= t < a1:
            u = (t - a0) / (a1 - a0)
            return 1.0 + (_CLINCH_SCALE - 1.0) * u
        if a1 <= t < h1:
            return _CLINCH_SCALE
        if h1 <= t < r1:
            u = (t - h1) / (r1 - h1)
            return _CLINCH_SCALE + (1.0 - _CLINCH_SCALE) * u
    return 1.0


def _lerp(a: Point, b: Point, u: float) -> Point:
    return (a[0] + (b[0] - a[0]) * u, a[1] + (b[1] - a[1]) * u)


class _BoxerPair:
    """Positions of one bout's pair over its whole visible lifetime."""

    def __init__(self, spec: ScenarioSpec, plan: _BoutPlan, wiggles: tuple[_Wiggle, _Wiggle]):
        self.spec, self.plan, self.wiggles = spec, plan, wiggles
        bx, by, bw, bh = spec.ring.bounding_box()
        self.center = (bx + bw / 2.0, by + bh / 2.0)
        self.top_y, self.bottom_y = by, by + bh
        self.cx = self.center[0]
        self.omega = spec.boxer_speed_px / _ORBIT_RADIUS
        self.ease_f = round(_EASE_S * spec.fps)
        self.approach_f = round(_APPROACH_S * spec.fps)
        self.walk_from: Optional[tuple[Point, Point]] = None
        self.exit_top_first: Optional[bool] = None

    def visible(self, t: int) -> bool:
        p = self.plan
        first = 0 if p.climb_in is None else p.climb_in.start - self.approach_f
        return first <= t < p.gone

    def _orbit(self, t: int, radius: float) -> tuple[Point, Point]:
        theta = -math.pi / 2.0 + self.omega * (t - self.plan.start)
        ux, uy = math.cos(theta), math.sin(theta)
        r = radius * _clinch_scale(self.plan, t)
        cx, cy = self.center
        return (cx + r * ux, cy + r * uy), (cx - r * ux, cy - r * uy)

    def _radius(self, t: int) -> float:
        if self.plan.climb_in is None or t >= self.plan.start + self.ease_f:
            return _ORBIT_RADIUS
        u = (t - self.plan.start) / self.ease_f
        u = u * u * (3 - 2 * u)
        return _ENTRY_RADIUS + (_ORBIT_RADIUS - _ENTRY_RADIUS) * u

    def positions(self, t: int) -> tuple[Point, Point, bool]:
        """(pos_a, pos_b, exact) at frame t; exact poses skip the wiggle."""
        p = self.plan
        stage_a = (self.cx, self.top_y - 10.0)
        stage_b = (self.cx, self.bottom_y + 10.0)
        if p.climb_in is not None and t < p.climb_in.start:
            u = 1.0 - (p.climb_in.start - t) / self.approach_f
            spawn_a = (self.cx, self.top_y - 50.0)
            spawn_b = (self.cx, self.bottom_y + 50.0)
            return _lerp(spawn_a, stage_a, u), _lerp(spawn_b, stage_b, u), True
        if p.climb_in is not None and t < p.climb_in.stop:
            k = t - p.climb_in.start
            a_y = self.top_y - _STRADDLE if k % 2 == 0 else self.top_y + _STRADDLE
            b_y = self.bottom_y - _STRADDLE if k % 2 == 0 else self.bottom_y + _STRADDLE
            return (self.cx, a_y), (self.cx, b_y), True
        if p.climb_in is not None and t < p.settle_end:
            return (self.cx, self.top_y + _STRADDLE), (self.cx, self.bottom_y - _STRADDLE), True
        if t < p.stage_start:
            a, b = self._orbit(t, self._radius(t))
            wa, wb = self.wiggles[0].step(), self.wiggles[1].step()
            return (a[0] + wa[0], a[1] + wa[1]), (b[0] + wb[0], b[1] + wb[1]), False
        if t < p.climb_out.start:
            if self.walk_from is None:
                a, b = self._orbit(p.stage_start, self._radius(p.stage_start))
                self.walk_from = (a, b)
                self.exit_top_first = a[1] <= b[1]
            exit_top = (self.cx - 20.0, self.top_y + _STRADDLE)
            exit_bottom = (self.cx + 20.0, self.bottom_y - _STRADDLE)
            u = (t - p.stage_start + 1) / (p.climb_out.start - p.stage_start)
            a0, b0 = self.walk_from
            if self.exit_top_first:
                return _lerp(a0, exit_top, u), _lerp(b0, exit_bottom, u), True
            return _lerp(a0, exit_bottom, u), _lerp(b0, exit_top, u), True
        top_x, bottom_x = self.cx - 20.0, self.cx + 20.0
        if t < p.climb_out.stop:
            k = t - p.climb_out.start
            top_y = self.top_y - _STRADDLE if k % 2 == 0 else self.top_y + _STRADDLE
            bottom_y = self.bottom_y + _STRADDLE if k % 2 == 0 else self.bottom_y - _STRADDLE
            a_pos, b_pos = (top_x, top_y), (bottom_x, bottom_y)
        else:
            u = (t - p.climb_out.stop + 1) / max(1, p.gone - p.climb_out.stop)
            a_pos = _lerp((top_x, self.top_y - 10.0), (top_x, self.top_y - 50.0), u)
            b_pos = _lerp((bottom_x, self.bottom_y + 10.0), (bottom_x, self.bottom_y + 50.0), u)
        if self.exit_top_first is False:
            return b_pos, a_pos, True
        return a_pos, b_pos, True


def generate_session(
    spec: ScenarioSpec,
) -> tuple[list[FrameRecord], list[GroundTruthRecord], list[BoutSegment]]:
    """Simulate one session; returns (detections, ground truth, gt segments)."""
    f = spec.fps
    bout_f, rest_f = round(spec.bout_s * f), round(spec.rest_s * f)
    total = spec.n_bouts * (bout_f + rest_f)
    plans = _plan_bouts(spec)

    bx, by, bw, bh = spec.ring.bounding_box()
    ref_center = (bx + 0.84 * bw, by + 0.75 * bh)
    ref_radius = min(25.0, 0.05 * bw)

    def rng(channel: int, pid: int):
        return np.random.default_rng([spec.seed, channel, pid])

    all_pids = [REFEREE_PID] + [p for plan in plans for p in (plan.pid_a, plan.pid_b)]
    if spec.bystander_rope_touch:
        all_pids.append(spec.bystander_pid())

    means: dict[int, np.ndarray] = {}
    for pid in all_pids:
        key = 0 if spec.identical_attire and pid >= 2 and pid != spec.bystander_pid() else pid
        means[pid] = rng(_CH_MEAN, key).standard_normal(spec.embedding_dim)
    jitter_rng = {pid: rng(_CH_JITTER, pid) for pid in all_pids}
    drop_rng = {pid: rng(_CH_DROP, pid) for pid in all_pids}
    embed_rng = {pid: rng(_CH_EMBED, pid) for pid in all_pids}

    pairs = [
        _BoxerPair(
            spec, plan, (_Wiggle(rng(_CH_WALK, plan.pid_a)), _Wiggle(rng(_CH_WALK, plan.pid_b)))
        )
        for plan in plans
    ]
    ref_wiggle = _Wiggle(rng(_CH_WALK, REFEREE_PID), sigma=0.4, clip=2.0)
    bys_wiggle = _Wiggle(rng(_CH_WALK, spec.bystander_pid()), sigma=0.3, clip=2.0)

    headings: dict[int, Point] = {}
    last_pos: dict[int, Point] = {}

    def keypoints_for(pid: int, pos: Point):
        prev = last_pos.get(pid)
        if prev is not None:
            dx, dy = pos[0] - prev[0], pos[1] - prev[1]
            if math.hypot(dx, dy) >= 0.5:
                headings[pid] = _unit(dx, dy)
        h = headings.setdefault(pid, (1.0, 0.0))
        l = (-h[1], h[0])
        pts = [(0.0, 0.0, 0.0)] * 17
        pts[0] = (pos[0] + _NOSE_AHEAD * h[0], pos[1] + _NOSE_AHEAD * h[1], _KP_SCORE)
        for idx, (ahead, side) in (
            (5, (_SHOULDER_AHEAD, _SHOULDER_HALF)),
            (6, (_SHOULDER_AHEAD, -_SHOULDER_HALF)),
            (11, (-_HIP_BEHIND, _HIP_HALF)),
            (12, (-_HIP_BEHIND, -_HIP_HALF)),
        ):
            pts[idx] = (
                pos[0] + ahead * h[0] + side * l[0],
                pos[1] + ahead * h[1] + side * l[1],
                _KP_SCORE,
            )
        return tuple(pts)

    detections: list[FrameRecord] = []
    ground_truth: list[GroundTruthRecord] = []
    half = _PERSON_BOX / 2.0

    for t in range(total):
        people: list[tuple[int, Point]] = []
        rw = ref_wiggle.step()
        theta = 0.05 * t
        people.append(
            (
                REFEREE_PID,
                (
                    ref_center[0] + ref_radius * math.cos(theta) + rw[0],
                    ref_center[1] + ref_radius * math.sin(theta) + rw[1],
                ),
            )
        )
        for pair in pairs:
            if not pair.visible(t):
                continue
            pos_a, pos_b, _ = pair.positions(t)
            people.append((pair.plan.pid_a, pos_a))
            people.append((pair.plan.pid_b, pos_b))
        if spec.bystander_rope_touch:
            bys_x = bx + bw + _STRADDLE
            plan = next((p for p in plans if p.start <= t < p.end), None)
            if plan is not None:
                lean_start = plan.start + round(bout_f / 3)
                lean_end = plan.start + round(2 * bout_f / 3)
                if lean_start <= t < lean_end and (t - lean_start) % 3 == 0:
                    bys_x = bx + bw - _STRADDLE
            wy = bys_wiggle.step()[1]
            people.append((spec.bystander_pid(), (bys_x, by + 0.5 * bh + wy)))

        people.sort()
        entries = []
        dets = []
        for pid, pos in people:
            gt_box = (pos[0] - half, pos[1] - half, _PERSON_BOX, _PERSON_BOX)
            entries.append((pid, gt_box))
            kps = keypoints_for(pid, pos) if spec.emit_keypoints else None
            last_pos[pid] = pos

            jn = jitter_rng[pid].standard_normal(4)
            dropped = drop_rng[pid].uniform() < spec.dropout_prob
            noise = embed_rng[pid].standard_normal(spec.embedding_dim)
            if dropped:
                continue
            j = spec.bbox_jitter_px
            det_box = (
                gt_box[0] + jn[0] * j,
                gt_box[1] + jn[1] * j,
                max(4.0, gt_box[2] + jn[2] * j * 0.5),
                max(4.0, gt_box[3] + jn[3] * j * 0.5),
            )
            embedding = tuple(float(v) for v in means[pid] + 0.05 * noise)
            dets.append(
                Detection(
                    frame_index=t,
                    bbox=det_box,
                    confidence=_CONFIDENCE,
                    embedding=embedding,
                    keypoints=kps,
                )
            )
        ground_truth.append(GroundTruthRecord(frame_index=t, entries=tuple(entries)))
        detections.append(FrameRecord(frame_index=t, detections=tuple(dets)))

    segments = []
    for plan in plans:
        segments.append(BoutSegment(start_frame=plan.start, end_frame=plan.end, kind=BOUT))
        segments.append(
            BoutSegment(start_frame=plan.end, end_frame=plan.end + rest_f, kind=REST)
        )
    return detections, ground_truth, segments
