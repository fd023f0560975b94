"""HTTP facade over the core pipeline.

Every endpoint is a stateless wrapper: decode the wire models, call the one
core function that owns the behaviour, encode the result. Domain errors map
to 422 with the core message so a thin client can just relay them.
"""

import io

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import RingsideError
from ..pipeline import evaluate_tracks, run_analysis, track_segments
from ..stream_io import validate_stream
from ..synth import generate_session, preset_spec, scenario_presets, suggested_config
from ..transition import segment_bouts
from .schemas import (
    AnalyzeRequest,
    AnalyzeResponse,
    ConfigModel,
    EvalRequest,
    EvalResponse,
    HealthResponse,
    HeatmapModel,
    LineOfSightRowModel,
    PresetInfo,
    PresetsResponse,
    SegmentRequest,
    SegmentResponse,
    SynthRequest,
    SynthResponse,
    TrackRequest,
    TrackResponse,
    ValidateRequest,
    ValidateResponse,
    config_to_model,
    frame_to_model,
    frames_from_models,
    ground_truth_from_models,
    ground_truth_to_model,
    pose_row_to_model,
    poses_from_models,
    ring_from_model,
    ring_to_model,
    segment_to_model,
    segments_from_models,
    track_to_model,
    tracks_from_models,
)

_PRESET_NOTES = {
    "clean": "noise-free baseline choreography",
    "clinch": "two clinches per bout",
    "identical-attire": "clinching boxers drawn from one appearance distribution",
    "dropout": "15% detection dropout with bbox jitter",
    "rope-toucher": "a bystander leans over the ropes mid-bout",
    "early-entry": "boxers climb in a second before schedule",
}


def create_app() -> FastAPI:
    app = FastAPI(title="ringside", version=__version__)

    @app.exception_handler(RingsideError)
    def domain_error(_request: Request, exc: RingsideError) -> JSONResponse:
        return JSONResponse(
            status_code=422,
            content={"detail": str(exc), "kind": type(exc).__name__},
        )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/presets", response_model=PresetsResponse)
    def presets() -> PresetsResponse:
        return PresetsResponse(
            presets=[
                PresetInfo(name=name, description=_PRESET_NOTES.get(name, ""))
                for name, _ in scenario_presets()
            ]
        )

    @app.post("/synth", response_model=SynthResponse)
    def synth(req: SynthRequest) -> SynthResponse:
        spec = preset_spec(req.preset, req.seed, n_bouts=req.bouts, fps=req.fps)
        frames, gt, segments = generate_session(spec)
        return SynthResponse(
            detections=[frame_to_model(f) for f in frames],
            ground_truth=[ground_truth_to_model(g) for g in gt],
            segments=[segment_to_model(s) for s in segments],
            ring=ring_to_model(spec.ring),
            config=config_to_model(suggested_config(spec)),
        )

    @app.post("/segment", response_model=SegmentResponse)
    def segment(req: SegmentRequest) -> SegmentResponse:
        cfg = (req.config or ConfigModel()).to_config()
        frames = frames_from_models(req.detections)
        found = segment_bouts(frames, ring_from_model(req.ring), cfg)
        return SegmentResponse(segments=[segment_to_model(s) for s in found])

    @app.post("/track", response_model=TrackResponse)
    def track(req: TrackRequest) -> TrackResponse:
        cfg = (req.config or ConfigModel()).to_config()
        frames = frames_from_models(req.detections)
        segments = segments_from_models(req.segments)
        result = track_segments(frames, segments, cfg, mode=req.mode)
        poses = None
        if result.pose_table is not None:
            poses = [pose_row_to_model(row) for row in result.pose_table]
        return TrackResponse(
            tracks=[track_to_model(r) for r in result.rows], poses=poses
        )

    @app.post("/eval", response_model=EvalResponse)
    def evaluate(req: EvalRequest) -> EvalResponse:
        cfg = (req.config or ConfigModel()).to_config()
        pred = None
        if req.pred_segments is not None:
            pred = segments_from_models(req.pred_segments)
        metrics, accuracy = evaluate_tracks(
            tracks_from_models(req.tracks),
            ground_truth_from_models(req.ground_truth),
            segments_from_models(req.gt_segments),
            cfg,
            pred_segments=pred,
            tol_s=req.tol_s,
        )
        return EvalResponse(
            idu=metrics.idu, ids=metrics.ids, transition_accuracy=accuracy
        )

    @app.post("/analyze", response_model=AnalyzeResponse)
    def analyze(req: AnalyzeRequest) -> AnalyzeResponse:
        cfg = (req.config or ConfigModel()).to_config()
        rows = tracks_from_models(req.tracks)
        pose_table = poses_from_models(req.poses) if req.poses else None
        hm, los = run_analysis(rows, ring_from_model(req.ring), cfg, pose_table)
        return AnalyzeResponse(
            heatmap=HeatmapModel(
                width=hm.width,
                height=hm.height,
                cells=[list(row) for row in hm.cells],
                counts=[list(row) for row in hm.counts],
            ),
            line_of_sight=[
                LineOfSightRowModel(frame=f, id=g, ux=ux, uy=uy)
                for f, g, ux, uy in los
            ],
        )

    @app.post("/validate", response_model=ValidateResponse)
    def validate(req: ValidateRequest) -> ValidateResponse:
        report = validate_stream(io.StringIO(req.content))
        return ValidateResponse(valid=report.ok, violations=list(report.violations))

    return app


app = create_app()
