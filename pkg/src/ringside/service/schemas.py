"""Wire models for the HTTP service.

Request and response bodies mirror the on-disk formats field for field: a
detection stream travels as a JSON array whose elements are exactly the
stream's JSONL lines, so a client can ship a file through unchanged. The
models check shape only; domain invariants (frame ordering, embedding
dimensions, segment alternation) stay with the core constructors so there is
a single authority for what is valid.
"""

from typing import Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict

from ..errors import OrderingError, SchemaError
from ..model import BoutSegment, Detection, PipelineConfig, RingGeometry
from ..pose_tracker import PoseSample
from ..stream_io import FrameRecord, GroundTruthRecord, TrackRow, validate_segments

Corner = tuple[float, float]
Keypoint = tuple[float, float, float]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# --- stream payloads ---


class DetectionModel(StrictModel):
    bbox: tuple[float, float, float, float]
    conf: float
    embedding: Optional[list[float]] = None
    keypoints: Optional[list[Keypoint]] = None


class FrameModel(StrictModel):
    frame: int
    detections: list[DetectionModel]


class GroundTruthEntryModel(StrictModel):
    pid: int
    bbox: tuple[float, float, float, float]


class GroundTruthFrameModel(StrictModel):
    frame: int
    entries: list[GroundTruthEntryModel]


class SegmentModel(StrictModel):
    start: int
    end: int
    kind: Literal["bout", "rest"]


class RingModel(StrictModel):
    corners: tuple[Corner, Corner, Corner, Corner]


class TrackRowModel(StrictModel):
    frame: int
    id: int
    bbox: tuple[float, float, float, float]
    conf: float = 1.0


class PoseRowModel(StrictModel):
    frame: int
    id: int
    keypoints: list[Keypoint]


class ConfigModel(StrictModel):
    """Partial pipeline config; absent fields keep the core defaults."""

    fps: Optional[float] = None
    bout_duration_s: Optional[float] = None
    rest_duration_s: Optional[float] = None
    proximity_threshold_px: Optional[float] = None
    expected_in_ring_count: Optional[int] = None
    position_weight: Optional[float] = None
    max_track_age_frames: Optional[int] = None
    minibout_len_frames: Optional[int] = None
    vote_min: Optional[int] = None
    boundary_refractory_s: Optional[float] = None
    cue_window_frames: Optional[int] = None
    gate_threshold: Optional[float] = None
    gt_iou_threshold: Optional[float] = None
    hotspot_grid: Optional[tuple[int, int]] = None

    def to_config(self) -> PipelineConfig:
        overrides = {k: v for k, v in self.model_dump().items() if v is not None}
        return PipelineConfig(**overrides)


# --- wire -> core ---


def frames_from_models(models: Sequence[FrameModel]) -> list[FrameRecord]:
    out: list[FrameRecord] = []
    emb_dim: Optional[int] = None
    for m in models:
        if out and m.frame <= out[-1].frame_index:
            raise OrderingError(
                f"frame {m.frame} does not increase past {out[-1].frame_index}"
            )
        dets = []
        for d in m.detections:
            if d.embedding is not None:
                if emb_dim is None:
                    emb_dim = len(d.embedding)
                elif len(d.embedding) != emb_dim:
                    raise SchemaError(
                        f"embedding length {len(d.embedding)} != stream dimension {emb_dim}"
                    )
            dets.append(
                Detection(
                    frame_index=m.frame,
                    bbox=d.bbox,
                    confidence=d.conf,
                    embedding=tuple(d.embedding) if d.embedding is not None else None,
                    keypoints=tuple(d.keypoints) if d.keypoints is not None else None,
                )
            )
        out.append(FrameRecord(frame_index=m.frame, detections=tuple(dets)))
    return out


def ground_truth_from_models(
    models: Sequence[GroundTruthFrameModel],
) -> list[GroundTruthRecord]:
    out: list[GroundTruthRecord] = []
    for m in models:
        if out and m.frame <= out[-1].frame_index:
            raise OrderingError(
                f"frame {m.frame} does not increase past {out[-1].frame_index}"
            )
        out.append(
            GroundTruthRecord(
                frame_index=m.frame,
                entries=tuple((e.pid, e.bbox) for e in m.entries),
            )
        )
    return out


def segments_from_models(models: Sequence[SegmentModel]) -> list[BoutSegment]:
    segments = [BoutSegment(m.start, m.end, m.kind) for m in models]
    validate_segments(segments)
    return segments


def ring_from_model(model: RingModel) -> RingGeometry:
    return RingGeometry(corners=model.corners)


def tracks_from_models(models: Sequence[TrackRowModel]) -> list[TrackRow]:
    return [
        TrackRow(frame_index=m.frame, track_id=m.id, bbox=m.bbox, confidence=m.conf)
        for m in models
    ]


def poses_from_models(
    models: Sequence[PoseRowModel],
) -> list[tuple[int, int, PoseSample]]:
    return [
        (m.frame, m.id, PoseSample(frame_index=m.frame, keypoints=tuple(m.keypoints)))
        for m in models
    ]


# --- core -> wire ---


def frame_to_model(rec: FrameRecord) -> FrameModel:
    return FrameModel(
        frame=rec.frame_index,
        detections=[
            DetectionModel(
                bbox=d.bbox,
                conf=d.confidence,
                embedding=list(d.embedding) if d.embedding is not None else None,
                keypoints=list(d.keypoints) if d.keypoints is not None else None,
            )
            for d in rec.detections
        ],
    )


def ground_truth_to_model(rec: GroundTruthRecord) -> GroundTruthFrameModel:
    return GroundTruthFrameModel(
        frame=rec.frame_index,
        entries=[GroundTruthEntryModel(pid=pid, bbox=bbox) for pid, bbox in rec.entries],
    )


def segment_to_model(seg: BoutSegment) -> SegmentModel:
    return SegmentModel(start=seg.start_frame, end=seg.end_frame, kind=seg.kind)


def ring_to_model(ring: RingGeometry) -> RingModel:
    return RingModel(corners=ring.corners)


def config_to_model(cfg: PipelineConfig) -> ConfigModel:
    return ConfigModel(
        fps=cfg.fps,
        bout_duration_s=cfg.bout_duration_s,
        rest_duration_s=cfg.rest_duration_s,
        proximity_threshold_px=cfg.proximity_threshold_px,
        expected_in_ring_count=cfg.expected_in_ring_count,
        position_weight=cfg.position_weight,
        max_track_age_frames=cfg.max_track_age_frames,
        minibout_len_frames=cfg.minibout_len_frames,
        vote_min=cfg.vote_min,
        boundary_refractory_s=cfg.boundary_refractory_s,
        cue_window_frames=cfg.cue_window_frames,
        gate_threshold=cfg.gate_threshold,
        gt_iou_threshold=cfg.gt_iou_threshold,
        hotspot_grid=cfg.hotspot_grid,
    )


def track_to_model(row: TrackRow) -> TrackRowModel:
    return TrackRowModel(
        frame=row.frame_index, id=row.track_id, bbox=row.bbox, conf=row.confidence
    )


def pose_row_to_model(row: tuple[int, int, PoseSample]) -> PoseRowModel:
    frame, gid, sample = row
    return PoseRowModel(frame=frame, id=gid, keypoints=list(sample.keypoints))


# --- request / response envelopes ---


class SynthRequest(StrictModel):
    preset: str
    seed: int
    bouts: Optional[int] = None
    fps: Optional[float] = None


class SynthResponse(StrictModel):
    detections: list[FrameModel]
    ground_truth: list[GroundTruthFrameModel]
    segments: list[SegmentModel]
    ring: RingModel
    config: ConfigModel


class PresetInfo(StrictModel):
    name: str
    description: str


class PresetsResponse(StrictModel):
    presets: list[PresetInfo]


class SegmentRequest(StrictModel):
    detections: list[FrameModel]
    ring: RingModel
    config: Optional[ConfigModel] = None


class SegmentResponse(StrictModel):
    segments: list[SegmentModel]


class TrackRequest(StrictModel):
    detections: list[FrameModel]
    segments: list[SegmentModel]
    mode: Literal["descriptor", "pose"]
    config: Optional[ConfigModel] = None


class TrackResponse(StrictModel):
    tracks: list[TrackRowModel]
    poses: Optional[list[PoseRowModel]] = None


class EvalRequest(StrictModel):
    tracks: list[TrackRowModel]
    ground_truth: list[GroundTruthFrameModel]
    gt_segments: list[SegmentModel]
    pred_segments: Optional[list[SegmentModel]] = None
    config: Optional[ConfigModel] = None
    tol_s: float = 2.0


class EvalResponse(StrictModel):
    idu: int
    ids: int
    transition_accuracy: Optional[float]


class HeatmapModel(StrictModel):
    width: int
    height: int
    cells: list[list[float]]
    counts: list[list[int]]


class LineOfSightRowModel(StrictModel):
    frame: int
    id: int
    ux: float
    uy: float


class AnalyzeRequest(StrictModel):
    tracks: list[TrackRowModel]
    ring: RingModel
    poses: Optional[list[PoseRowModel]] = None
    config: Optional[ConfigModel] = None


class AnalyzeResponse(StrictModel):
    heatmap: HeatmapModel
    line_of_sight: list[LineOfSightRowModel]


class ValidateRequest(StrictModel):
    content: str


class ValidateResponse(StrictModel):
    valid: bool
    violations: list[str]


class HealthResponse(StrictModel):
    status: str
    version: str
