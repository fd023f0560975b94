"""HTTP endpoints against the in-process app."""

import io

import pytest

import ringside
from ringside.cli import InProcessClient
from ringside.service.schemas import frame_to_model, ground_truth_to_model, segment_to_model
from ringside.stream_io import write_detections
from ringside.synth import generate_session, preset_spec, suggested_config
from ringside.transition import segment_bouts


@pytest.fixture(scope="module")
def client():
    return InProcessClient()


@pytest.fixture(scope="module")
def session():
    """One small clean session shared by the endpoint tests."""
    spec = preset_spec("clean", seed=0, n_bouts=2)
    frames, gt, segments = generate_session(spec)
    return spec, frames, gt, segments


def _payload_frames(frames):
    return [frame_to_model(f).model_dump(exclude_none=True) for f in frames]


def _payload_gt(gt):
    return [ground_truth_to_model(g).model_dump() for g in gt]


def _payload_segments(segments):
    return [segment_to_model(s).model_dump() for s in segments]


def _ring_payload(spec):
    return {"corners": [list(c) for c in spec.ring.corners]}


def _config_payload(spec):
    cfg = suggested_config(spec)
    return {
        "fps": cfg.fps,
        "bout_duration_s": cfg.bout_duration_s,
        "rest_duration_s": cfg.rest_duration_s,
        "cue_window_frames": cfg.cue_window_frames,
        "boundary_refractory_s": cfg.boundary_refractory_s,
        "minibout_len_frames": cfg.minibout_len_frames,
    }


class TestMeta:
    def test_health(self, client):
        resp = client.get("/health")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok", "version": ringside.__version__}

    def test_presets_lists_all_scenarios(self, client):
        resp = client.get("/presets")
        assert resp.status_code == 200
        names = [p["name"] for p in resp.json()["presets"]]
        assert names == [
            "clean",
            "clinch",
            "identical-attire",
            "dropout",
            "rope-toucher",
            "early-entry",
        ]


class TestSynth:
    def test_matches_direct_generation(self, client, session):
        spec, frames, gt, segments = session
        resp = client.post("/synth", json={"preset": "clean", "seed": 0, "bouts": 2})
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["detections"]) == len(frames)
        assert body["segments"] == _payload_segments(segments)
        assert body["ring"]["corners"] == [list(c) for c in spec.ring.corners]
        assert body["config"]["fps"] == 10.0
        first = body["detections"][0]
        assert first["frame"] == frames[0].frame_index
        assert len(first["detections"]) == len(frames[0].detections)

    def test_unknown_preset_is_a_domain_error(self, client):
        resp = client.post("/synth", json={"preset": "zzz", "seed": 0})
        assert resp.status_code == 422
        assert resp.json()["kind"] == "SchemaError"

    def test_bad_seed_rejected(self, client):
        resp = client.post("/synth", json={"preset": "clean", "seed": -1})
        assert resp.status_code == 422


class TestSegment:
    def test_matches_core_function(self, client, session):
        spec, frames, _, _ = session
        resp = client.post(
            "/segment",
            json={
                "detections": _payload_frames(frames),
                "ring": _ring_payload(spec),
                "config": _config_payload(spec),
            },
        )
        assert resp.status_code == 200
        direct = segment_bouts(frames, spec.ring, suggested_config(spec))
        assert resp.json()["segments"] == _payload_segments(direct)

    def test_empty_stream_is_a_domain_error(self, client, session):
        spec = session[0]
        resp = client.post(
            "/segment", json={"detections": [], "ring": _ring_payload(spec)}
        )
        assert resp.status_code == 422
        assert resp.json()["kind"] == "EmptyStreamError"

    def test_unknown_field_rejected(self, client, session):
        spec, frames, _, _ = session
        resp = client.post(
            "/segment",
            json={
                "detections": _payload_frames(frames[:1]),
                "ring": _ring_payload(spec),
                "bogus": 1,
            },
        )
        assert resp.status_code == 422

    def test_out_of_order_frames_rejected(self, client, session):
        spec, frames, _, _ = session
        shuffled = _payload_frames([frames[1], frames[0]])
        resp = client.post(
            "/segment", json={"detections": shuffled, "ring": _ring_payload(spec)}
        )
        assert resp.status_code == 422
        assert resp.json()["kind"] == "OrderingError"


class TestTrackEvalAnalyze:
    def test_pose_track_returns_pose_rows(self, client, session):
        spec, frames, _, segments = session
        resp = client.post(
            "/track",
            json={
                "detections": _payload_frames(frames),
                "segments": _payload_segments(segments),
                "mode": "pose",
                "config": _config_payload(spec),
            },
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["tracks"], "pose tracking produced no rows"
        assert body["poses"] is not None
        assert len(body["poses"]) == len(body["tracks"])

    def test_descriptor_track_has_no_poses(self, client, session):
        spec, frames, _, segments = session
        resp = client.post(
            "/track",
            json={
                "detections": _payload_frames(frames),
                "segments": _payload_segments(segments),
                "mode": "descriptor",
                "config": _config_payload(spec),
            },
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["tracks"]
        assert body["poses"] is None

    def test_eval_on_ground_truth_tracks_is_clean(self, client, session):
        spec, _, gt, segments = session
        tracks = [
            {"frame": rec.frame_index, "id": pid, "bbox": list(bbox)}
            for rec in gt
            for pid, bbox in rec.entries
        ]
        resp = client.post(
            "/eval",
            json={
                "tracks": tracks,
                "ground_truth": _payload_gt(gt),
                "gt_segments": _payload_segments(segments),
                "pred_segments": _payload_segments(segments),
                "config": _config_payload(spec),
            },
        )
        assert resp.status_code == 200
        assert resp.json() == {"idu": 0, "ids": 0, "transition_accuracy": 1.0}

    def test_eval_without_predictions_gives_null_accuracy(self, client, session):
        spec, _, gt, segments = session
        resp = client.post(
            "/eval",
            json={
                "tracks": [],
                "ground_truth": _payload_gt(gt),
                "gt_segments": _payload_segments(segments),
                "config": _config_payload(spec),
            },
        )
        assert resp.status_code == 200
        assert resp.json()["transition_accuracy"] is None

    def test_eval_without_gt_bouts_is_a_metric_error(self, client, session):
        spec, _, gt, _ = session
        rest_only = [{"start": 0, "end": 10, "kind": "rest"}]
        resp = client.post(
            "/eval",
            json={
                "tracks": [],
                "ground_truth": _payload_gt(gt[:5]),
                "gt_segments": rest_only,
                "pred_segments": rest_only,
                "config": _config_payload(spec),
            },
        )
        assert resp.status_code == 422
        assert resp.json()["kind"] == "MetricError"

    def test_analyze_with_and_without_poses(self, client, session):
        spec, frames, _, segments = session
        track_resp = client.post(
            "/track",
            json={
                "detections": _payload_frames(frames),
                "segments": _payload_segments(segments),
                "mode": "pose",
                "config": _config_payload(spec),
            },
        ).json()
        base = {
            "tracks": track_resp["tracks"],
            "ring": _ring_payload(spec),
            "config": _config_payload(spec),
        }
        with_poses = client.post(
            "/analyze", json={**base, "poses": track_resp["poses"]}
        )
        assert with_poses.status_code == 200
        body = with_poses.json()
        assert (body["heatmap"]["width"], body["heatmap"]["height"]) == (32, 32)
        assert all(0.0 <= v <= 1.0 for row in body["heatmap"]["cells"] for v in row)
        assert body["line_of_sight"]
        ux = body["line_of_sight"][0]["ux"]
        uy = body["line_of_sight"][0]["uy"]
        assert abs(ux * ux + uy * uy - 1.0) < 1e-6

        without = client.post("/analyze", json=base)
        assert without.status_code == 200
        assert without.json()["line_of_sight"] == []


class TestValidate:
    def test_valid_stream(self, client, session):
        _, frames, _, _ = session
        buf = io.StringIO()
        write_detections(frames[:20], buf)
        resp = client.post("/validate", json={"content": buf.getvalue()})
        assert resp.status_code == 200
        assert resp.json() == {"valid": True, "violations": []}

    def test_broken_stream_reports_violations(self, client):
        content = '{"frame": 0, "detections": []}\nnot json\n'
        resp = client.post("/validate", json={"content": content})
        assert resp.status_code == 200
        body = resp.json()
        assert body["valid"] is False
        assert any("line 2" in v for v in body["violations"])
