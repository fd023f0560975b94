"""File formats: detection streams, ground truth, ring, config, tracks, bouts.

Streams are JSON Lines so multi-hour sessions can be processed with bounded
memory. Real values are serialized with at most 6 decimal places, which keeps
golden files stable and is far below pixel noise.
"""

import dataclasses
import json
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Iterator, Optional, Union

from .errors import OrderingError, ParseError, SchemaError
from .model import BBox, BoutSegment, Detection, PipelineConfig, RingGeometry

Source = Union[str, Path, IO[str]]


@dataclass(frozen=True)
class FrameRecord:
    """All detections observed in one frame."""

    frame_index: int
    detections: tuple[Detection, ...]

    def __post_init__(self):
        object.__setattr__(self, "detections", tuple(self.detections))
        if self.frame_index < 0:
            raise SchemaError(f"frame_index must be non-negative, got {self.frame_index}")
        for d in self.detections:
            if d.frame_index != self.frame_index:
                raise SchemaError(
                    f"detection frame {d.frame_index} disagrees with record frame {self.frame_index}"
                )


@dataclass(frozen=True)
class GroundTruthRecord:
    """Annotated person boxes for one frame: (person_id, bbox) pairs."""

    frame_index: int
    entries: tuple[tuple[int, BBox], ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "entries",
            tuple((int(pid), tuple(float(v) for v in bbox)) for pid, bbox in self.entries),
        )
        if self.frame_index < 0:
            raise SchemaError(f"frame_index must be non-negative, got {self.frame_index}")
        pids = [pid for pid, _ in self.entries]
        if len(pids) != len(set(pids)):
            raise SchemaError(f"duplicate person_id in frame {self.frame_index}")
        for pid, bbox in self.entries:
            if pid < 0:
                raise SchemaError(f"person_id must be non-negative, got {pid}")
            if len(bbox) != 4 or bbox[2] <= 0 or bbox[3] <= 0:
                raise SchemaError(f"bad ground-truth bbox {bbox} in frame {self.frame_index}")


@dataclass(frozen=True)
class TrackRow:
    """One tracker output row: a track id owning a bbox in a frame."""

    frame_index: int
    track_id: int
    bbox: BBox
    confidence: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "bbox", tuple(float(v) for v in self.bbox))
        if self.frame_index < 0:
            raise SchemaError(f"frame_index must be non-negative, got {self.frame_index}")
        if self.track_id < 1:
            raise SchemaError(f"track_id must be positive, got {self.track_id}")
        if len(self.bbox) != 4:
            raise SchemaError(f"bbox must have 4 entries, got {self.bbox}")


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _round6(v: float) -> float:
    return round(float(v), 6)


@contextmanager
def _opened(source: Source, mode: str):
    if isinstance(source, (str, Path)):
        with open(source, mode, encoding="utf-8") as fh:
            yield fh
    else:
        yield source


# --- detection streams ---


def _detection_to_obj(d: Detection) -> dict:
    obj: dict = {"bbox": [_round6(v) for v in d.bbox], "conf": _round6(d.confidence)}
    if d.embedding is not None:
        obj["embedding"] = [_round6(v) for v in d.embedding]
    if d.keypoints is not None:
        obj["keypoints"] = [[_round6(x), _round6(y), _round6(s)] for x, y, s in d.keypoints]
    return obj


def _obj_to_detection(obj: dict, frame_index: int) -> Detection:
    if not isinstance(obj, dict):
        raise SchemaError(f"detection entry must be an object, got {type(obj).__name__}")
    if "bbox" not in obj or "conf" not in obj:
        raise SchemaError("detection entry needs 'bbox' and 'conf'")
    unknown = set(obj) - {"bbox", "conf", "embedding", "keypoints"}
    if unknown:
        raise SchemaError(f"unknown detection fields {sorted(unknown)}")
    embedding = obj.get("embedding")
    keypoints = obj.get("keypoints")
    return Detection(
        frame_index=frame_index,
        bbox=tuple(obj["bbox"]),
        confidence=float(obj["conf"]),
        embedding=tuple(embedding) if embedding is not None else None,
        keypoints=tuple(tuple(kp) for kp in keypoints) if keypoints is not None else None,
    )


def _iter_json_lines(source: Source) -> Iterator[tuple[int, dict]]:
    with _opened(source, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(str(exc), line_number=lineno) from None
            if not isinstance(obj, dict):
                raise ParseError("record must be a JSON object", line_number=lineno)
            yield lineno, obj


def _check_frame_order(frame: object, last: Optional[int], lineno: int) -> int:
    if not isinstance(frame, int) or isinstance(frame, bool):
        raise SchemaError(f"line {lineno}: 'frame' must be an integer, got {frame!r}")
    if last is not None and frame <= last:
        raise OrderingError(
            f"frame {frame} does not increase past {last}", line_number=lineno
        )
    return frame


def read_detections(source: Source) -> Iterator[FrameRecord]:
    """Yield FrameRecords from a JSON Lines detection stream.

    Frames must be strictly increasing. If any detection carries an
    embedding, every embedding in the stream must have the same length.
    """
    last: Optional[int] = None
    emb_dim: Optional[int] = None
    for lineno, obj in _iter_json_lines(source):
        if "frame" not in obj or "detections" not in obj:
            raise SchemaError(f"line {lineno}: record needs 'frame' and 'detections'")
        frame = _check_frame_order(obj["frame"], last, lineno)
        last = frame
        dets = []
        for entry in obj["detections"]:
            try:
                d = _obj_to_detection(entry, frame)
            except (SchemaError, TypeError, ValueError) as exc:
                raise SchemaError(f"line {lineno}: {exc}") from None
            if d.embedding is not None:
                if emb_dim is None:
                    emb_dim = len(d.embedding)
                elif len(d.embedding) != emb_dim:
                    raise SchemaError(
                        f"line {lineno}: embedding length {len(d.embedding)} != stream dimension {emb_dim}"
                    )
            dets.append(d)
        yield FrameRecord(frame_index=frame, detections=tuple(dets))


def write_detections(frames: Iterable[FrameRecord], sink: Source) -> None:
    with _opened(sink, "w") as fh:
        last: Optional[int] = None
        for rec in frames:
            if last is not None and rec.frame_index <= last:
                raise OrderingError(f"frame {rec.frame_index} does not increase past {last}")
            last = rec.frame_index
            obj = {
                "frame": rec.frame_index,
                "detections": [_detection_to_obj(d) for d in rec.detections],
            }
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


# --- ground truth ---


def read_ground_truth(source: Source) -> Iterator[GroundTruthRecord]:
    last: Optional[int] = None
    for lineno, obj in _iter_json_lines(source):
        if "frame" not in obj or "entries" not in obj:
            raise SchemaError(f"line {lineno}: record needs 'frame' and 'entries'")
        frame = _check_frame_order(obj["frame"], last, lineno)
        last = frame
        entries = []
        for entry in obj["entries"]:
            try:
                entries.append((int(entry["pid"]), tuple(float(v) for v in entry["bbox"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"line {lineno}: bad ground-truth entry: {exc}") from None
        try:
            yield GroundTruthRecord(frame_index=frame, entries=tuple(entries))
        except SchemaError as exc:
            raise SchemaError(f"line {lineno}: {exc}") from None


def write_ground_truth(frames: Iterable[GroundTruthRecord], sink: Source) -> None:
    with _opened(sink, "w") as fh:
        last: Optional[int] = None
        for rec in frames:
            if last is not None and rec.frame_index <= last:
                raise OrderingError(f"frame {rec.frame_index} does not increase past {last}")
            last = rec.frame_index
            obj = {
                "frame": rec.frame_index,
                "entries": [
                    {"pid": pid, "bbox": [_round6(v) for v in bbox]}
                    for pid, bbox in rec.entries
                ],
            }
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


# --- ring / config / bouts documents ---


def read_ring(source: Source) -> RingGeometry:
    with _opened(source, "r") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"ring file: {exc}") from None
    if not isinstance(obj, dict) or "corners" not in obj:
        raise SchemaError("ring file must be an object with a 'corners' field")
    corners = obj["corners"]
    if not isinstance(corners, list) or len(corners) != 4:
        raise SchemaError("ring 'corners' must be a list of 4 [x, y] points")
    try:
        return RingGeometry(corners=tuple((float(x), float(y)) for x, y in corners))
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad ring corners: {exc}") from None


def write_ring(ring: RingGeometry, sink: Source) -> None:
    obj = {"corners": [[_round6(x), _round6(y)] for x, y in ring.corners]}
    with _opened(sink, "w") as fh:
        json.dump(obj, fh, separators=(",", ":"))
        fh.write("\n")


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(PipelineConfig)}


def read_config(source: Source) -> PipelineConfig:
    """Read a config document; absent fields keep their defaults."""
    with _opened(source, "r") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"config file: {exc}") from None
    if not isinstance(obj, dict):
        raise SchemaError("config file must be a JSON object")
    unknown = set(obj) - _CONFIG_FIELDS
    if unknown:
        raise SchemaError(f"unknown config fields {sorted(unknown)}")
    if "hotspot_grid" in obj:
        obj = dict(obj)
        obj["hotspot_grid"] = tuple(obj["hotspot_grid"])
    try:
        return PipelineConfig(**obj)
    except TypeError as exc:
        raise SchemaError(f"bad config: {exc}") from None


def write_config(cfg: PipelineConfig, sink: Source) -> None:
    obj = dataclasses.asdict(cfg)
    obj["hotspot_grid"] = list(obj["hotspot_grid"])
    with _opened(sink, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_bouts(source: Source) -> list[BoutSegment]:
    with _opened(source, "r") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bouts file: {exc}") from None
    if not isinstance(obj, dict) or "segments" not in obj:
        raise SchemaError("bouts file must be an object with a 'segments' field")
    segments = []
    for entry in obj["segments"]:
        try:
            segments.append(
                BoutSegment(start_frame=entry["start"], end_frame=entry["end"], kind=entry["kind"])
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"bad segment entry: {exc}") from None
    validate_segments(segments)
    return segments


def write_bouts(segments: list[BoutSegment], sink: Source) -> None:
    validate_segments(segments)
    obj = {
        "segments": [
            {"start": s.start_frame, "end": s.end_frame, "kind": s.kind} for s in segments
        ]
    }
    with _opened(sink, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def validate_segments(segments: list[BoutSegment]) -> None:
    """Session-level segment invariants: ordered, non-overlapping, alternating."""
    for prev, cur in zip(segments, segments[1:]):
        if cur.start_frame < prev.end_frame:
            raise SchemaError(
                f"segments overlap or disorder: [{prev.start_frame},{prev.end_frame}) then "
                f"[{cur.start_frame},{cur.end_frame})"
            )
        if cur.kind == prev.kind:
            raise SchemaError(f"adjacent segments share kind {cur.kind!r}")


# --- tracks (MOT CSV) ---


def _fmt_coord(v: float) -> str:
    """Compact coordinate: no trailing zeros, at most 6 decimals, '3' not '3.0'."""
    s = f"{_round6(v):.6f}".rstrip("0").rstrip(".")
    return s if s not in ("", "-0") else "0"


def write_tracks(rows: Iterable[TrackRow], sink: Source) -> None:
    """Emit MOT-style CSV rows `frame,id,x,y,w,h,conf,-1,-1,-1` sorted by (frame, id)."""
    ordered = sorted(rows, key=lambda r: (r.frame_index, r.track_id))
    with _opened(sink, "w") as fh:
        for r in ordered:
            x, y, w, h = (_fmt_coord(v) for v in r.bbox)
            conf = repr(_round6(r.confidence))
            fh.write(f"{r.frame_index},{r.track_id},{x},{y},{w},{h},{conf},-1,-1,-1\n")


def read_tracks(source: Source) -> list[TrackRow]:
    rows = []
    with _opened(source, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            parts = raw.strip().split(",")
            if len(parts) != 10:
                raise ParseError(f"expected 10 comma-separated fields, got {len(parts)}",
                                 line_number=lineno)
            try:
                row = TrackRow(
                    frame_index=int(parts[0]),
                    track_id=int(parts[1]),
                    bbox=tuple(float(v) for v in parts[2:6]),
                    confidence=float(parts[6]),
                )
            except (ValueError, SchemaError) as exc:
                raise ParseError(f"bad track row: {exc}", line_number=lineno) from None
            if rows and (row.frame_index, row.track_id) <= (
                rows[-1].frame_index, rows[-1].track_id
            ):
                raise OrderingError(
                    f"rows must be sorted by (frame, id); saw {(row.frame_index, row.track_id)} "
                    f"after {(rows[-1].frame_index, rows[-1].track_id)}",
                    line_number=lineno,
                )
            rows.append(row)
    return rows


# --- whole-stream validation ---


def validate_stream(source: Source) -> ValidationReport:
    """Check a detection stream against every schema rule without stopping early.

    Unlike read_detections, which raises on the first problem, this walks the
    whole file and reports each violation with its line number.
    """
    violations: list[str] = []
    last: Optional[int] = None
    emb_dim: Optional[int] = None
    with _opened(source, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                violations.append(f"line {lineno}: unparseable JSON: {exc}")
                continue
            if not isinstance(obj, dict) or "frame" not in obj or "detections" not in obj:
                violations.append(f"line {lineno}: record needs 'frame' and 'detections'")
                continue
            frame = obj["frame"]
            if not isinstance(frame, int) or isinstance(frame, bool) or frame < 0:
                violations.append(f"line {lineno}: 'frame' must be a non-negative integer")
                continue
            if last is not None and frame <= last:
                violations.append(f"line {lineno}: frame {frame} does not increase past {last}")
            last = frame
            if not isinstance(obj["detections"], list):
                violations.append(f"line {lineno}: 'detections' must be a list")
                continue
            for i, entry in enumerate(obj["detections"]):
                try:
                    d = _obj_to_detection(entry, frame)
                except (SchemaError, TypeError, ValueError) as exc:
                    violations.append(f"line {lineno}: detection {i}: {exc}")
                    continue
                if d.embedding is not None:
                    if emb_dim is None:
                        emb_dim = len(d.embedding)
                    elif len(d.embedding) != emb_dim:
                        violations.append(
                            f"line {lineno}: detection {i}: embedding length "
                            f"{len(d.embedding)} != stream dimension {emb_dim}"
                        )
    return ValidationReport(violations=tuple(violations))
