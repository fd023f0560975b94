"""In-bout re-identification by tracking-by-detection.

Per frame: predict every live track one frame ahead, build a positional cost
matrix (and an appearance one when embeddings are present on both sides),
min-max normalize each, blend them with the position weight, and solve the
assignment optimally. Matched tracks update their state; unmatched detections
spawn tentative tracks that must hit 3 frames in a row before they emit.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import OrderingError, SchemaError
from .model import Detection, PipelineConfig, Point, centroid
from .stream_io import FrameRecord, TrackRow

TENTATIVE = "tentative"
CONFIRMED = "confirmed"
LOST = "lost"

_CONFIRM_HITS = 3
_VELOCITY_SMOOTHING = 0.8
_INADMISSIBLE = 1e6
_TIE_TOL = 1e-9


@dataclass
class Track:
    """One tracked person. Mutable, owned by a single TrackerState."""

    id: int
    position: Point
    last_seen: int
    velocity: tuple[float, float] = (0.0, 0.0)
    state: str = TENTATIVE
    appearance: Optional[np.ndarray] = None
    appearance_count: int = 0
    age_since_seen: int = 0
    hits: int = 1


@dataclass
class TrackerState:
    tracks: list[Track] = field(default_factory=list)
    next_id: int = 1
    last_frame: Optional[int] = None


def predict(track: Track) -> Point:
    """Constant-velocity extrapolation, one frame ahead of the last update."""
    return (track.position[0] + track.velocity[0], track.position[1] + track.velocity[1])


def positional_cost(tracks: Sequence[Track], detections: Sequence[Detection]) -> np.ndarray:
    m = np.zeros((len(tracks), len(detections)))
    for i, t in enumerate(tracks):
        px, py = predict(t)
        for j, d in enumerate(detections):
            cx, cy = centroid(d.bbox)
            m[i, j] = float(np.hypot(px - cx, py - cy))
    return m


def appearance_cost(tracks: Sequence[Track], detections: Sequence[Detection]) -> np.ndarray:
    m = np.zeros((len(tracks), len(detections)))
    for i, t in enumerate(tracks):
        if t.appearance is None:
            raise SchemaError(f"track {t.id} has no appearance mean")
        for j, d in enumerate(detections):
            if d.embedding is None:
                raise SchemaError(f"detection {j} has no embedding")
            if len(d.embedding) != t.appearance.shape[0]:
                raise SchemaError(
                    f"embedding length {len(d.embedding)} != track dimension "
                    f"{t.appearance.shape[0]}"
                )
            m[i, j] = float(np.linalg.norm(t.appearance - np.asarray(d.embedding)))
    return m


def minmax_normalize(m: np.ndarray) -> np.ndarray:
    """Map entries to [0, 1] by the global min and max; a constant matrix maps to zeros."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return m.copy()
    lo, hi = float(m.min()), float(m.max())
    if hi == lo:
        return np.zeros_like(m)
    return (m - lo) / (hi - lo)


def blend(pos_n: np.ndarray, app_n: np.ndarray, position_weight: float) -> np.ndarray:
    if pos_n.shape != app_n.shape:
        raise SchemaError(f"cost matrix shapes differ: {pos_n.shape} vs {app_n.shape}")
    return position_weight * pos_n + (1.0 - position_weight) * app_n


def _lap(cost: np.ndarray, admissible: np.ndarray) -> tuple[int, float]:
    """Cardinality and total cost of a max-cardinality min-cost assignment."""
    if cost.size == 0:
        return 0, 0.0
    big = np.where(admissible, cost, _INADMISSIBLE)
    rows, cols = linear_sum_assignment(big)
    pairs = [(i, j) for i, j in zip(rows, cols) if admissible[i, j]]
    return len(pairs), float(sum(cost[i, j] for i, j in pairs))


def _completion(cost, admissible, forced) -> tuple[int, float]:
    """Best achievable (cardinality, total) when the forced pairs are kept."""
    f_rows = {i for i, _ in forced}
    f_cols = {j for _, j in forced}
    rest_rows = [i for i in range(cost.shape[0]) if i not in f_rows]
    rest_cols = [j for j in range(cost.shape[1]) if j not in f_cols]
    base = float(sum(cost[i, j] for i, j in forced))
    if rest_rows and rest_cols:
        k, t = _lap(cost[np.ix_(rest_rows, rest_cols)], admissible[np.ix_(rest_rows, rest_cols)])
        return len(forced) + k, base + t
    return len(forced), base


def solve_assignment(cost, gate: float) -> list[tuple[int, int]]:
    """Optimal one-to-one matching of rows to columns.

    Among matchings restricted to entries with cost <= gate, returns one of
    maximum cardinality and, within that, minimum total cost. Ties are broken
    toward the lowest (row, col) index pairs, which is enforced by fixing one
    row at a time and checking that an optimal completion still exists.
    """
    m = np.atleast_2d(np.asarray(cost, dtype=float))
    if m.size == 0:
        return []
    admissible = m <= gate
    if not admissible.any():
        return []
    best_k, best_t = _lap(m, admissible)
    chosen: list[tuple[int, int]] = []
    used_cols: set[int] = set()
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            if j in used_cols or not admissible[i, j]:
                continue
            k, t = _completion(m, admissible, chosen + [(i, j)])
            if k == best_k and t <= best_t + _TIE_TOL:
                chosen.append((i, j))
                used_cols.add(j)
                break
    return chosen


def step(state: TrackerState, frame: FrameRecord, cfg: PipelineConfig) -> list[TrackRow]:
    """Advance the tracker by one frame; returns confirmed (id, bbox) rows.

    Mutates state in place. Position is snapped to the matched observation;
    only velocity is exponentially smoothed. Unmatched tracks keep their last
    position, so someone occluded for under max_track_age_frames resumes the
    same ID when they reappear where they vanished.
    """
    if state.last_frame is not None and frame.frame_index <= state.last_frame:
        raise OrderingError(
            f"frame {frame.frame_index} does not increase past {state.last_frame}"
        )
    dets = frame.detections
    tracks = state.tracks
    matches: list[tuple[int, int]] = []
    if tracks and dets:
        pos_n = minmax_normalize(positional_cost(tracks, dets))
        use_appearance = all(d.embedding is not None for d in dets) and all(
            t.appearance is not None for t in tracks
        )
        if use_appearance:
            app_n = minmax_normalize(appearance_cost(tracks, dets))
            cost = blend(pos_n, app_n, cfg.position_weight)
        else:
            cost = pos_n
        matches = solve_assignment(cost, cfg.gate_threshold)

    matched_tracks = {i for i, _ in matches}
    matched_dets = {j for _, j in matches}
    outputs: list[TrackRow] = []

    for i, j in matches:
        t, d = tracks[i], dets[j]
        obs = centroid(d.bbox)
        gap = frame.frame_index - t.last_seen
        measured = ((obs[0] - t.position[0]) / gap, (obs[1] - t.position[1]) / gap)
        t.velocity = (
            _VELOCITY_SMOOTHING * t.velocity[0] + (1 - _VELOCITY_SMOOTHING) * measured[0],
            _VELOCITY_SMOOTHING * t.velocity[1] + (1 - _VELOCITY_SMOOTHING) * measured[1],
        )
        t.position = obs
        t.last_seen = frame.frame_index
        t.age_since_seen = 0
        t.hits += 1
        if d.embedding is not None:
            emb = np.asarray(d.embedding, dtype=float)
            if t.appearance is None:
                t.appearance = emb.copy()
                t.appearance_count = 1
            else:
                t.appearance_count += 1
                t.appearance = t.appearance + (emb - t.appearance) / t.appearance_count
        if t.state == TENTATIVE and t.hits >= _CONFIRM_HITS:
            t.state = CONFIRMED
        elif t.state == LOST:
            t.state = CONFIRMED
        if t.state == CONFIRMED:
            outputs.append(
                TrackRow(
                    frame_index=frame.frame_index,
                    track_id=t.id,
                    bbox=d.bbox,
                    confidence=d.confidence,
                )
            )

    survivors: list[Track] = []
    for i, t in enumerate(tracks):
        if i in matched_tracks:
            survivors.append(t)
            continue
        if t.state == TENTATIVE:
            continue  # one miss kills an unconfirmed track
        t.state = LOST
        t.age_since_seen = frame.frame_index - t.last_seen
        if t.age_since_seen <= cfg.max_track_age_frames:
            survivors.append(t)
    state.tracks = survivors

    for j, d in enumerate(dets):
        if j in matched_dets:
            continue
        emb = np.asarray(d.embedding, dtype=float) if d.embedding is not None else None
        state.tracks.append(
            Track(
                id=state.next_id,
                position=centroid(d.bbox),
                last_seen=frame.frame_index,
                appearance=emb,
                appearance_count=0 if emb is None else 1,
            )
        )
        state.next_id += 1

    state.last_frame = frame.frame_index
    return outputs


def run_descriptor_tracking(
    bout: Sequence[FrameRecord], cfg: PipelineConfig
) -> list[TrackRow]:
    """Fold step() over one bout's frames. Deterministic for a fixed input."""
    state = TrackerState()
    rows: list[TrackRow] = []
    for frame in bout:
        rows.extend(step(state, frame, cfg))
    return rows
