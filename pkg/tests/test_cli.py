"""Command line client: subcommands, file round-trips, exit codes."""

import json

import pytest

from ringside.analytics import read_metrics
from ringside.cli import main
from ringside.pose_tracker import read_pose_table
from ringside.stream_io import (
    read_bouts,
    read_config,
    read_detections,
    read_ring,
    read_tracks,
    write_detections,
)
from ringside.synth import generate_session, preset_spec


def run(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("session")
    rc = run("synth", "--preset", "clean", "--seed", "0", "--bouts", "2",
             "--out", str(out))
    assert rc == 0
    return out


class TestSynth:
    def test_writes_all_session_files(self, synth_dir):
        for name in ("detections.jsonl", "ground_truth.jsonl", "gt_segments.json",
                     "ring.json", "config.json"):
            assert (synth_dir / name).exists(), name

    def test_files_match_direct_generation(self, synth_dir, tmp_path):
        frames, _, segments = generate_session(preset_spec("clean", seed=0, n_bouts=2))
        direct = tmp_path / "direct.jsonl"
        write_detections(frames, direct)
        assert direct.read_text() == (synth_dir / "detections.jsonl").read_text()
        assert read_bouts(synth_dir / "gt_segments.json") == segments

    def test_config_is_the_suggested_one(self, synth_dir):
        cfg = read_config(synth_dir / "config.json")
        assert cfg.fps == 10.0
        assert cfg.cue_window_frames == 10

    def test_unknown_preset_exits_1(self, tmp_path):
        assert run("synth", "--preset", "zz", "--seed", "0", "--out", str(tmp_path)) == 1


class TestPipelineCommands:
    def test_segment_track_eval_analyze(self, synth_dir, tmp_path, capsys):
        segs = tmp_path / "pred_segments.json"
        rc = run("segment", "--detections", str(synth_dir / "detections.jsonl"),
                 "--ring", str(synth_dir / "ring.json"),
                 "--config", str(synth_dir / "config.json"), "--out", str(segs))
        assert rc == 0
        segments = read_bouts(segs)
        assert sum(1 for s in segments if s.kind == "bout") == 2

        tracks = tmp_path / "tracks.csv"
        poses = tmp_path / "poses.jsonl"
        rc = run("track", "--mode", "pose",
                 "--detections", str(synth_dir / "detections.jsonl"),
                 "--bouts", str(segs), "--config", str(synth_dir / "config.json"),
                 "--out", str(tracks), "--poses", str(poses))
        assert rc == 0
        rows = read_tracks(tracks)
        table = read_pose_table(poses)
        assert rows and len(table) == len(rows)

        metrics_path = tmp_path / "metrics.json"
        rc = run("eval", "--tracks", str(tracks),
                 "--gt", str(synth_dir / "ground_truth.jsonl"),
                 "--gt-segments", str(synth_dir / "gt_segments.json"),
                 "--pred-segments", str(segs),
                 "--config", str(synth_dir / "config.json"),
                 "--out", str(metrics_path))
        assert rc == 0
        metrics = read_metrics(metrics_path)
        assert metrics == {"idu": 0, "ids": 0, "transition_accuracy": 1.0}

        pgm = tmp_path / "hotspot.pgm"
        los = tmp_path / "los.csv"
        rc = run("analyze", "--tracks", str(tracks), "--poses", str(poses),
                 "--ring", str(synth_dir / "ring.json"),
                 "--config", str(synth_dir / "config.json"),
                 "--hotspot", str(pgm), "--los", str(los))
        assert rc == 0
        header = pgm.read_text().splitlines()
        assert header[0] == "P2" and header[1] == "32 32" and header[2] == "255"
        assert len(los.read_text().splitlines()) == len(rows)
        out = capsys.readouterr().out
        assert "idu=0 ids=0" in out

    def test_descriptor_mode_tracks(self, synth_dir, tmp_path):
        tracks = tmp_path / "tracks.csv"
        rc = run("track", "--mode", "descriptor",
                 "--detections", str(synth_dir / "detections.jsonl"),
                 "--bouts", str(synth_dir / "gt_segments.json"),
                 "--config", str(synth_dir / "config.json"), "--out", str(tracks))
        assert rc == 0
        assert read_tracks(tracks)

    def test_analyze_without_poses_writes_empty_los(self, synth_dir, tmp_path):
        tracks = tmp_path / "tracks.csv"
        run("track", "--mode", "descriptor",
            "--detections", str(synth_dir / "detections.jsonl"),
            "--bouts", str(synth_dir / "gt_segments.json"),
            "--config", str(synth_dir / "config.json"), "--out", str(tracks))
        pgm, los = tmp_path / "h.pgm", tmp_path / "l.csv"
        rc = run("analyze", "--tracks", str(tracks),
                 "--ring", str(synth_dir / "ring.json"),
                 "--hotspot", str(pgm), "--los", str(los))
        assert rc == 0
        assert los.read_text() == ""
        assert pgm.read_text().startswith("P2\n")


class TestValidateCommand:
    def test_valid_file(self, synth_dir, capsys):
        rc = run("validate", "--detections", str(synth_dir / "detections.jsonl"))
        assert rc == 0
        assert "OK" in capsys.readouterr().out

    def test_violations_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"frame": 1, "detections": []}\n{"frame": 0, "detections": []}\n')
        rc = run("validate", "--detections", str(bad))
        assert rc == 1
        assert "violation" in capsys.readouterr().out


class TestExitCodes:
    def test_missing_input_file_exits_2(self, synth_dir, tmp_path, capsys):
        rc = run("segment", "--detections", "missing.jsonl",
                 "--ring", str(synth_dir / "ring.json"),
                 "--out", str(tmp_path / "out.json"))
        assert rc == 2
        assert "missing.jsonl" in capsys.readouterr().err

    def test_unknown_subcommand_exits_1(self, capsys):
        assert run("frobnicate") == 1
        assert "usage error" in capsys.readouterr().err

    def test_unknown_flag_exits_1(self):
        assert run("presets", "--frob") == 1

    def test_missing_required_flag_exits_1(self):
        assert run("segment", "--out", "x.json") == 1

    def test_non_integer_seed_exits_1(self, tmp_path):
        assert run("synth", "--preset", "clean", "--seed", "abc",
                   "--out", str(tmp_path)) == 1

    def test_poses_flag_needs_pose_mode(self, synth_dir, tmp_path):
        rc = run("track", "--mode", "descriptor",
                 "--detections", str(synth_dir / "detections.jsonl"),
                 "--bouts", str(synth_dir / "gt_segments.json"),
                 "--out", str(tmp_path / "t.csv"),
                 "--poses", str(tmp_path / "p.jsonl"))
        assert rc == 1

    def test_domain_error_from_bad_config_exits_1(self, synth_dir, tmp_path):
        bad_cfg = tmp_path / "cfg.json"
        bad_cfg.write_text('{"fps": -5}\n')
        rc = run("segment", "--detections", str(synth_dir / "detections.jsonl"),
                 "--ring", str(synth_dir / "ring.json"),
                 "--config", str(bad_cfg), "--out", str(tmp_path / "o.json"))
        assert rc == 1

    def test_corrupt_jsonl_exits_1(self, synth_dir, tmp_path):
        broken = tmp_path / "broken.jsonl"
        broken.write_text("{nope\n")
        rc = run("segment", "--detections", str(broken),
                 "--ring", str(synth_dir / "ring.json"),
                 "--out", str(tmp_path / "o.json"))
        assert rc == 1

    def test_unreachable_server_exits_2(self, capsys):
        assert run("--server", "http://127.0.0.1:1", "presets") == 2

    def test_help_exits_0(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run("--help")
        assert exc.value.code == 0
        assert "usage" in capsys.readouterr().out


class TestPresetsCommand:
    def test_lists_scenarios(self, capsys):
        assert run("presets") == 0
        out = capsys.readouterr().out
        for name in ("clean", "clinch", "dropout"):
            assert name in out
