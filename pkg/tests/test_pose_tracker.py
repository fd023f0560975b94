import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ringside.errors import IncomparablePoseError, SchemaError
from ringside.model import Detection, PipelineConfig
from ringside.pose_tracker import (
    MiniBout,
    PoseSample,
    integrate_minibouts,
    landmark_mean_distance,
    partition_minibouts,
    pose_bbox,
    read_pose_table,
    run_pose_tracking,
    to_track_rows,
    track_minibout,
    write_pose_table,
)
from ringside.stream_io import FrameRecord

GATE = 120.0  # 3 x default proximity threshold


def make_pose(frame, x, y, score=0.9, overrides=None):
    """All 17 keypoints at (x, y) unless overridden by index."""
    kps = [[x, y, score] for _ in range(17)]
    for idx, v in (overrides or {}).items():
        kps[idx] = list(v)
    return PoseSample(frame_index=frame, keypoints=tuple(tuple(kp) for kp in kps))


# --- partitioning ---


def test_partition_examples():
    assert partition_minibouts(range(0, 240), 120) == [range(0, 120), range(120, 240)]
    assert partition_minibouts(range(0, 120), 120) == [range(0, 120)]
    assert partition_minibouts(range(0, 250), 120) == [
        range(0, 120),
        range(120, 240),
        range(240, 250),
    ]


def test_partition_one_frame_remainder_merges():
    assert partition_minibouts(range(0, 241), 120) == [range(0, 120), range(120, 241)]


def test_partition_empty_and_bad_length():
    assert partition_minibouts(range(0, 0), 120) == []
    with pytest.raises(SchemaError):
        partition_minibouts(range(0, 100), 1)


@given(start=st.integers(0, 1000), n=st.integers(0, 700), length=st.integers(2, 130))
def test_partition_tiles_exactly(start, n, length):
    ranges = partition_minibouts(range(start, start + n), length)
    covered = [f for r in ranges for f in r]
    assert covered == list(range(start, start + n))
    assert all(len(r) >= 2 for r in ranges) or n == 1


# --- landmark distance ---


def test_landmark_mean_distance_identical():
    a = make_pose(0, 10, 10)
    assert landmark_mean_distance(a, a) == 0.0


def test_landmark_mean_distance_uniform_offset():
    a = make_pose(0, 0, 0)
    b = make_pose(0, 3, 4)
    assert landmark_mean_distance(a, b) == pytest.approx(5.0)


def test_landmark_mean_distance_mixed():
    # two landmarks coincide, two are offset by (3,4): distances 0,0,5,5
    a = make_pose(0, 0, 0, overrides={11: (10, 10, 0.9), 12: (20, 20, 0.9)})
    b = make_pose(0, 0, 0, overrides={11: (13, 14, 0.9), 12: (23, 24, 0.9)})
    assert landmark_mean_distance(a, b) == pytest.approx(2.5)


def test_landmark_mean_distance_uses_mutually_valid_subset():
    a = make_pose(0, 0, 0, overrides={5: (500, 500, 0.01)})  # left shoulder invalid
    b = make_pose(0, 3, 4)
    assert landmark_mean_distance(a, b) == pytest.approx(5.0)


def test_landmark_mean_distance_incomparable():
    a = make_pose(0, 0, 0, overrides={i: (0, 0, 0.01) for i in (5, 6)})
    b = make_pose(0, 0, 0, overrides={i: (0, 0, 0.01) for i in (11, 12)})
    with pytest.raises(IncomparablePoseError):
        landmark_mean_distance(a, b)


# --- intra-mini-bout tracking ---


def test_two_stationary_boxers():
    per_frame = [
        [make_pose(f, 100, 100), make_pose(f, 300, 300)] for f in range(120)
    ]
    mb = track_minibout(range(0, 120), per_frame, GATE)
    assert len(mb.tracks) == 2
    assert all(len(samples) == 120 for samples in mb.tracks.values())


def test_vanishing_pose_is_not_resurrected():
    per_frame = [[make_pose(f, 100, 100)] if f < 60 else [] for f in range(120)]
    mb = track_minibout(range(0, 120), per_frame, GATE)
    assert len(mb.tracks) == 1
    assert len(mb.tracks[1]) == 60

    # returning after a gap opens a brand-new local track
    per_frame = [[make_pose(f, 100, 100)] if f not in range(40, 50) else [] for f in range(120)]
    mb = track_minibout(range(0, 120), per_frame, GATE)
    assert len(mb.tracks) == 2


def test_crossing_boxers_do_not_swap():
    per_frame = []
    for f in range(100):
        per_frame.append([make_pose(f, 50 + 2 * f, 100), make_pose(f, 250 - 2 * f, 104)])
    mb = track_minibout(range(0, 100), per_frame, GATE)
    assert len(mb.tracks) == 2
    for samples in mb.tracks.values():
        xs = [s.keypoints[0][0] for s in samples]
        deltas = [b - a for a, b in zip(xs, xs[1:])]
        assert all(d > 0 for d in deltas) or all(d < 0 for d in deltas)


# --- integration across mini-bouts ---


def _single_track_minibout(frames, positions_by_track):
    tracks = {
        lid: [make_pose(f, x, y) for f, (x, y) in samples.items()]
        for lid, samples in positions_by_track.items()
    }
    return MiniBout(frames=frames, tracks=tracks)


def test_integration_nearest_neighbor():
    prev = _single_track_minibout(
        range(0, 120), {1: {119: (10, 10)}, 2: {119: (50, 50)}}
    )
    nxt = _single_track_minibout(
        range(120, 240), {1: {120: (11, 10)}, 2: {120: (49, 51)}}
    )
    assert integrate_minibouts(prev, nxt) == {1: 1, 2: 2}


def test_integration_prefers_global_optimum_over_greedy_rows():
    """Row-wise greedy would take the 1 then strand the other row; optimal won't."""
    shoulders_only = {11: (0, 0, 0.01), 12: (0, 0, 0.01)}
    hips_only = {5: (0, 0, 0.01), 6: (0, 0, 0.01)}
    prev = MiniBout(
        frames=range(0, 120),
        tracks={
            1: [make_pose(119, 0, 0)],  # A: d(A,C)=1, d(A,D)=2
            2: [make_pose(119, 0, 0, overrides={**hips_only, 11: (3, 0, 0.9), 12: (3, 0, 0.9)})],
        },
    )
    # C comparable to both (d(B,C) over hips = 2); D valid only on shoulders,
    # so d(B,D) is incomparable and the greedy diagonal cannot complete
    nxt = MiniBout(
        frames=range(120, 240),
        tracks={
            1: [make_pose(120, 1, 0)],  # C
            2: [make_pose(120, 2, 0, overrides={11: (2, 0, 0.01), 12: (2, 0, 0.01)})],  # D
        },
    )
    m = integrate_minibouts(prev, nxt)
    assert m == {1: 2, 2: 1}  # anti-diagonal: C inherits B, D inherits A


def test_integration_extra_track_gets_fresh_id():
    prev = _single_track_minibout(range(0, 120), {1: {119: (10, 10)}, 2: {119: (50, 50)}})
    nxt = _single_track_minibout(
        range(120, 240),
        {1: {120: (10, 10)}, 2: {120: (50, 50)}, 3: {120: (200, 200)}},
    )
    m = integrate_minibouts(prev, nxt)
    assert m[1] == 1 and m[2] == 2
    assert m[3] == 3  # fresh, one past the max inherited id


def test_integration_boundary_fallback_window():
    # prev track last seen 5 frames before the boundary: still stitched
    prev = _single_track_minibout(range(0, 120), {1: {114: (10, 10)}})
    nxt = _single_track_minibout(range(120, 240), {1: {120: (10, 10)}})
    assert integrate_minibouts(prev, nxt) == {1: 1}

    # last seen 12 frames before the boundary: outside the window, fresh id
    prev = _single_track_minibout(range(0, 120), {1: {107: (10, 10)}})
    assert integrate_minibouts(prev, nxt) == {1: 2}


# --- whole-bout tracking ---


def _frames_with_poses(per_frame_positions):
    out = []
    for f, pts in enumerate(per_frame_positions):
        dets = []
        for x, y in pts:
            kps = tuple((x, y, 0.9) for _ in range(17))
            dets.append(
                Detection(frame_index=f, bbox=(x - 10, y - 10, 20, 20), confidence=1.0,
                          keypoints=kps)
            )
        out.append(FrameRecord(frame_index=f, detections=tuple(dets)))
    return out


def test_two_boxers_span_three_minibouts():
    cfg = PipelineConfig(minibout_len_frames=120)
    per_frame = [[(100, 100 + 0.5 * f), (300, 300 - 0.5 * f)] for f in range(360)]
    table = run_pose_tracking(_frames_with_poses(per_frame), cfg)
    ids = {gid for _, gid, _ in table}
    assert ids == {1, 2}
    frames_covered = {f for f, _, _ in table}
    assert frames_covered == set(range(360))


def test_empty_bout():
    assert run_pose_tracking([], PipelineConfig()) == []


def test_translation_invariance():
    cfg = PipelineConfig(minibout_len_frames=40)
    per_frame = [[(100 + f, 100), (300 - f, 200)] for f in range(100)]
    base = run_pose_tracking(_frames_with_poses(per_frame), cfg)
    shifted_frames = _frames_with_poses(
        [[(x + 37.5, y - 12.25) for x, y in pts] for pts in per_frame]
    )
    shifted = run_pose_tracking(shifted_frames, cfg)
    assert [(f, gid) for f, gid, _ in base] == [(f, gid) for f, gid, _ in shifted]


def test_run_pose_tracking_deterministic():
    cfg = PipelineConfig(minibout_len_frames=40)
    per_frame = [[(100 + f, 100), (300 - f, 200), (200, 300)] for f in range(100)]
    a = run_pose_tracking(_frames_with_poses(per_frame), cfg)
    b = run_pose_tracking(_frames_with_poses(per_frame), cfg)
    assert a == b


def test_pose_bbox_and_rows():
    sample = make_pose(3, 100, 100, overrides={0: (110, 90, 0.9), 16: (90, 110, 0.9)})
    assert pose_bbox(sample) == (90.0, 90.0, 20.0, 20.0)
    rows = to_track_rows([(3, 7, sample)])
    assert len(rows) == 1
    assert rows[0].track_id == 7
    assert rows[0].bbox == (90.0, 90.0, 20.0, 20.0)

    point = make_pose(0, 50, 50)
    assert pose_bbox(point)[2:] == (1.0, 1.0)  # floored so the box stays valid


# --- pose table files ---


def test_pose_table_round_trip_sorts_rows():
    import io

    table = [
        (5, 2, make_pose(5, 30, 40)),
        (4, 1, make_pose(4, 10, 20)),
        (5, 1, make_pose(5, 11, 21)),
    ]
    buf = io.StringIO()
    write_pose_table(table, buf)
    back = read_pose_table(io.StringIO(buf.getvalue()))
    assert [(f, gid) for f, gid, _ in back] == [(4, 1), (5, 1), (5, 2)]
    assert back[2][2].keypoints == make_pose(5, 30, 40).keypoints


def test_pose_table_line_shape():
    import io
    import json

    buf = io.StringIO()
    write_pose_table([(3, 2, make_pose(3, 10, 20.5))], buf)
    line = buf.getvalue().splitlines()[0]
    assert line.startswith('{"frame":3,"id":2,"keypoints":[[10.0,20.5,0.9],')
    obj = json.loads(line)
    assert obj["keypoints"] == [[10.0, 20.5, 0.9]] * 17


def test_pose_table_write_rejects_duplicate_rows():
    import io

    from ringside.errors import OrderingError

    table = [(1, 1, make_pose(1, 0, 0)), (1, 1, make_pose(1, 5, 5))]
    with pytest.raises(OrderingError):
        write_pose_table(table, io.StringIO())


def test_pose_table_reader_rejects_bad_input():
    import io

    from ringside.errors import OrderingError, ParseError

    with pytest.raises(ParseError, match="line 1"):
        read_pose_table(io.StringIO("not json\n"))
    with pytest.raises(SchemaError, match="line 1"):
        read_pose_table(io.StringIO('{"frame": 0, "id": 1}\n'))
    with pytest.raises(SchemaError, match="line 1"):
        read_pose_table(io.StringIO('{"frame": 0, "id": 1, "keypoints": [[1, 2, 0.5]]}\n'))
    good = '{"frame":1,"id":1,"keypoints":%s}\n' % ([[1.0, 2.0, 0.5]] * 17)
    bad = good + good.replace('"frame":1', '"frame":0')
    with pytest.raises(OrderingError, match="line 2"):
        read_pose_table(io.StringIO(bad))


def test_pose_table_reader_skips_blank_lines():
    import io

    buf = io.StringIO()
    write_pose_table([(0, 1, make_pose(0, 1, 2))], buf)
    padded = "\n" + buf.getvalue() + "\n\n"
    assert len(read_pose_table(io.StringIO(padded))) == 1
