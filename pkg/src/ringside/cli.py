"""Command line client for the pipeline service.

Every subcommand is a thin HTTP client: it reads the local files, posts the
request to the service, and writes the response back to disk. By default the
app runs in-process, so no server is needed; ``--server URL`` points the
same commands at a remote instance.

Exit codes: 0 success, 1 usage or domain/validation error, 2 I/O error.
"""

import argparse
import asyncio
import json
import sys
from pathlib import Path
from typing import Optional, Union

import httpx
from pydantic import ValidationError

from .analytics import Heatmap, IdMetrics, write_heatmap_pgm, write_line_of_sight, write_metrics
from .errors import ParseError, RingsideError, SchemaError
from .pose_tracker import write_pose_table
from .service.schemas import (
    ConfigModel,
    FrameModel,
    GroundTruthFrameModel,
    PoseRowModel,
    RingModel,
    SegmentModel,
    TrackRowModel,
    frames_from_models,
    ground_truth_from_models,
    poses_from_models,
    ring_from_model,
    segments_from_models,
    track_to_model,
    tracks_from_models,
)
from .stream_io import (
    read_tracks,
    write_bouts,
    write_config,
    write_detections,
    write_ground_truth,
    write_ring,
    write_tracks,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2

_TIMEOUT_S = 600.0


class UsageError(Exception):
    """Bad command line; maps to exit code 1."""


class TransportError(Exception):
    """The server was unreachable or answered outside the protocol."""


class _Parser(argparse.ArgumentParser):
    # argparse would sys.exit(2) on bad flags; 2 is reserved for I/O here.
    def error(self, message):
        raise UsageError(message)


class InProcessClient:
    """Blocking client that drives the ASGI app directly, no socket involved."""

    def __init__(self):
        from .service import app

        self._transport = httpx.ASGITransport(app=app)

    def __enter__(self) -> "InProcessClient":
        return self

    def __exit__(self, *exc_info) -> None:
        pass

    def _request(self, method: str, path: str, payload: Optional[dict]) -> httpx.Response:
        async def run() -> httpx.Response:
            async with httpx.AsyncClient(
                transport=self._transport, base_url="http://ringside"
            ) as client:
                return await client.request(method, path, json=payload)

        return asyncio.run(run())

    def get(self, path: str) -> httpx.Response:
        return self._request("GET", path, None)

    def post(self, path: str, json: Optional[dict] = None) -> httpx.Response:
        return self._request("POST", path, json)


Client = Union[httpx.Client, InProcessClient]


def _client(args: argparse.Namespace) -> Client:
    if args.server:
        return httpx.Client(base_url=args.server, timeout=_TIMEOUT_S)
    return InProcessClient()


def _call(client: Client, method: str, path: str, payload: Optional[dict] = None) -> dict:
    try:
        if method == "GET":
            resp = client.get(path)
        else:
            resp = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        raise TransportError(f"request to {path} failed: {exc}") from None
    if resp.status_code == 200:
        return resp.json()
    if resp.status_code == 422:
        detail = resp.json().get("detail", "invalid request")
        if isinstance(detail, list):
            detail = "; ".join(
                f"{'.'.join(str(p) for p in e.get('loc', []))}: {e.get('msg', e)}"
                for e in detail
            )
        raise SchemaError(str(detail))
    raise TransportError(f"{path} returned HTTP {resp.status_code}")


# --- local file helpers; OSError propagates and maps to exit 2 ---


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _read_jsonl_objs(path: str) -> list[dict]:
    objs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                objs.append(json.loads(raw))
            except json.JSONDecodeError as exc:
                raise ParseError(str(exc), line_number=lineno) from None
    return objs


def _read_json(path: str, what: str) -> dict:
    try:
        obj = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what} file: {exc}") from None
    if not isinstance(obj, dict):
        raise SchemaError(f"{what} file must be a JSON object")
    return obj


def _read_segments_payload(path: str) -> list[dict]:
    obj = _read_json(path, "bouts")
    if "segments" not in obj or not isinstance(obj["segments"], list):
        raise SchemaError("bouts file must be an object with a 'segments' list")
    return obj["segments"]


def _read_tracks_payload(path: str) -> list[dict]:
    rows = read_tracks(path)
    return [track_to_model(r).model_dump() for r in rows]


def _config_payload(path: Optional[str]) -> Optional[dict]:
    if path is None:
        return None
    return _read_json(path, "config")


# --- subcommands ---


def _cmd_synth(args: argparse.Namespace) -> int:
    payload: dict = {"preset": args.preset, "seed": args.seed}
    if args.bouts is not None:
        payload["bouts"] = args.bouts
    if args.fps is not None:
        payload["fps"] = args.fps
    with _client(args) as client:
        resp = _call(client, "POST", "/synth", payload)

    frames = frames_from_models(
        [FrameModel.model_validate(o) for o in resp["detections"]]
    )
    gt = ground_truth_from_models(
        [GroundTruthFrameModel.model_validate(o) for o in resp["ground_truth"]]
    )
    segments = segments_from_models(
        [SegmentModel.model_validate(o) for o in resp["segments"]]
    )
    ring = ring_from_model(RingModel.model_validate(resp["ring"]))
    cfg = ConfigModel.model_validate(resp["config"]).to_config()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_detections(frames, out / "detections.jsonl")
    write_ground_truth(gt, out / "ground_truth.jsonl")
    write_bouts(segments, out / "gt_segments.json")
    write_ring(ring, out / "ring.json")
    write_config(cfg, out / "config.json")
    bouts = sum(1 for s in segments if s.kind == "bout")
    print(
        f"synth[{args.preset}] seed={args.seed}: {len(frames)} frames, "
        f"{bouts} bouts -> {out}"
    )
    return EXIT_OK


def _cmd_segment(args: argparse.Namespace) -> int:
    payload = {
        "detections": _read_jsonl_objs(args.detections),
        "ring": _read_json(args.ring, "ring"),
        "config": _config_payload(args.config),
    }
    with _client(args) as client:
        resp = _call(client, "POST", "/segment", payload)
    segments = segments_from_models(
        [SegmentModel.model_validate(o) for o in resp["segments"]]
    )
    write_bouts(segments, args.out)
    bouts = sum(1 for s in segments if s.kind == "bout")
    print(f"{len(segments)} segments ({bouts} bouts) -> {args.out}")
    return EXIT_OK


def _cmd_track(args: argparse.Namespace) -> int:
    if args.poses is not None and args.mode != "pose":
        raise UsageError("--poses is only written in pose mode")
    payload = {
        "detections": _read_jsonl_objs(args.detections),
        "segments": _read_segments_payload(args.bouts),
        "mode": args.mode,
        "config": _config_payload(args.config),
    }
    with _client(args) as client:
        resp = _call(client, "POST", "/track", payload)
    rows = tracks_from_models(
        [TrackRowModel.model_validate(o) for o in resp["tracks"]]
    )
    write_tracks(rows, args.out)
    note = f"{len(rows)} track rows ({args.mode}) -> {args.out}"
    if args.poses is not None:
        table = poses_from_models(
            [PoseRowModel.model_validate(o) for o in (resp["poses"] or [])]
        )
        write_pose_table(table, args.poses)
        note += f", {len(table)} pose rows -> {args.poses}"
    print(note)
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    payload = {
        "tracks": _read_tracks_payload(args.tracks),
        "ground_truth": _read_jsonl_objs(args.gt),
        "gt_segments": _read_segments_payload(args.gt_segments),
        "pred_segments": (
            _read_segments_payload(args.pred_segments)
            if args.pred_segments is not None
            else None
        ),
        "config": _config_payload(args.config),
        "tol_s": args.tol_s,
    }
    with _client(args) as client:
        resp = _call(client, "POST", "/eval", payload)
    metrics = IdMetrics(idu=resp["idu"], ids=resp["ids"])
    accuracy = resp["transition_accuracy"]
    write_metrics(metrics, accuracy, args.out)
    acc_note = "n/a" if accuracy is None else f"{accuracy:.4f}"
    print(
        f"idu={metrics.idu} ids={metrics.ids} "
        f"transition_accuracy={acc_note} -> {args.out}"
    )
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace) -> int:
    payload = {
        "tracks": _read_tracks_payload(args.tracks),
        "ring": _read_json(args.ring, "ring"),
        "poses": _read_jsonl_objs(args.poses) if args.poses is not None else None,
        "config": _config_payload(args.config),
    }
    with _client(args) as client:
        resp = _call(client, "POST", "/analyze", payload)
    hm_obj = resp["heatmap"]
    hm = Heatmap(
        width=hm_obj["width"],
        height=hm_obj["height"],
        cells=tuple(tuple(v) for v in hm_obj["cells"]),
        counts=tuple(tuple(v) for v in hm_obj["counts"]),
    )
    write_heatmap_pgm(hm, args.hotspot)
    los = [(r["frame"], r["id"], r["ux"], r["uy"]) for r in resp["line_of_sight"]]
    write_line_of_sight(los, args.los)
    print(
        f"heatmap {hm.width}x{hm.height} -> {args.hotspot}, "
        f"{len(los)} line-of-sight rows -> {args.los}"
    )
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    content = _read_text(args.detections)
    with _client(args) as client:
        resp = _call(client, "POST", "/validate", {"content": content})
    if resp["valid"]:
        print(f"{args.detections}: OK")
        return EXIT_OK
    for violation in resp["violations"]:
        print(violation)
    print(f"{args.detections}: {len(resp['violations'])} violation(s)")
    return EXIT_DOMAIN


def _cmd_presets(args: argparse.Namespace) -> int:
    with _client(args) as client:
        resp = _call(client, "GET", "/presets")
    for p in resp["presets"]:
        print(f"{p['name']}: {p['description']}")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


# --- parser ---


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ringside", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--server",
        default=None,
        metavar="URL",
        help="send requests to a running server instead of in-process",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic session")
    p.add_argument("--preset", required=True)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--fps", type=float, default=None)
    p.add_argument("--bouts", type=int, default=None)
    p.add_argument("--out", default=".", metavar="DIR")
    p.set_defaults(handler=_cmd_synth)

    p = sub.add_parser("segment", help="split a detection stream into bouts and rests")
    p.add_argument("--detections", required=True)
    p.add_argument("--ring", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_segment)

    p = sub.add_parser("track", help="track identities inside each bout")
    p.add_argument("--mode", required=True, choices=("descriptor", "pose"))
    p.add_argument("--detections", required=True)
    p.add_argument("--bouts", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--poses", default=None, help="also write the pose keypoint table (pose mode)")
    p.set_defaults(handler=_cmd_track)

    p = sub.add_parser("eval", help="score tracks against ground truth")
    p.add_argument("--tracks", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--gt-segments", required=True)
    p.add_argument("--pred-segments", default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--tol-s", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("analyze", help="occupancy heatmap and line-of-sight table")
    p.add_argument("--tracks", required=True)
    p.add_argument("--poses", default=None)
    p.add_argument("--ring", required=True)
    p.add_argument("--hotspot", required=True, metavar="F.pgm")
    p.add_argument("--los", required=True, metavar="F.csv")
    p.add_argument("--config", default=None)
    p.set_defaults(handler=_cmd_analyze)

    p = sub.add_parser("validate", help="check a detection stream against the schema")
    p.add_argument("--detections", required=True)
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("presets", help="list synthetic scenario presets")
    p.set_defaults(handler=_cmd_presets)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=_cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except RingsideError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValidationError as exc:
        print(f"error: server response did not match the protocol: {exc}", file=sys.stderr)
        return EXIT_IO
    except TransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
