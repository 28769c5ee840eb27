"""Newline-delimited JSON environment protocol ("vgenv/1").

One JSON object per line, one response per request, message ids echoed.
A connection owns one session and one episode at a time; the state machine
is Idle -> Running -> Terminal -> Idle. Observations travel as base64 raw
class-id bytes (3 stacked 84x180 frames, 45360 bytes). The full field
reference lives in docs/protocol.md.
"""

from __future__ import annotations

import base64
import json
import socketserver
import sys
from dataclasses import dataclass, replace
from typing import Optional

from vgnav.episode import EpisodeConfig, EpisodeRunner, Event
from vgnav.errors import ProtocolError
from vgnav.guidance import GuidanceScheme, hybrid_vector
from vgnav.planner import PlanMode
from vgnav.render import FRAME_HEIGHT, FRAME_WIDTH, frame_to_ppm
from vgnav.world import ACTION_NAMES, ACTION_SET, CityMap, PALETTE, SemanticClass

PROTOCOL = "vgenv/1"
OBS_SHAPE = (3, FRAME_HEIGHT, FRAME_WIDTH)
OBS_BYTES = OBS_SHAPE[0] * OBS_SHAPE[1] * OBS_SHAPE[2]

REQUEST_KINDS = ("hello", "reset", "step", "render", "close")
RESPONSE_KINDS = ("spec", "observation", "error", "bye")


def encode_message(msg: dict) -> str:
    """Canonical single-line JSON encoding (sorted keys, no spaces)."""
    return json.dumps(msg, sort_keys=True, separators=(",", ":")) + "\n"


def decode_message(line: str) -> dict:
    """Parse and structurally validate one protocol line."""
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as e:
        raise ProtocolError("bad_json", f"not valid JSON: {e}") from None
    if not isinstance(msg, dict):
        raise ProtocolError("bad_message", "message must be a JSON object")
    kind = msg.get("kind")
    if kind not in REQUEST_KINDS + RESPONSE_KINDS:
        raise ProtocolError("bad_message", f"unknown kind {kind!r}")
    return msg


def spec_message() -> dict:
    return {
        "kind": "spec",
        "protocol": PROTOCOL,
        "actions": [
            {"name": name, "kind": act.kind, "alpha": act.alpha}
            for name, act in zip(ACTION_NAMES, ACTION_SET)
        ],
        "observation_shape": list(OBS_SHAPE),
        "classes": [
            {"id": int(c), "name": c.name.lower(), "color": list(PALETTE[c])}
            for c in SemanticClass
        ],
    }


@dataclass
class Session:
    """Protocol state for one connection."""

    cmap: CityMap
    base_config: EpisodeConfig
    runner: Optional[EpisodeRunner] = None
    state: str = "idle"  # idle | running | terminal
    closed: bool = False


def _parse_overrides(cfg: EpisodeConfig, overrides: dict) -> EpisodeConfig:
    known = {}
    for key, value in overrides.items():
        if key == "route":
            known["route"] = (str(value[0]), str(value[1]))
        elif key == "scheme":
            known["scheme"] = GuidanceScheme(value)
        elif key == "plan_mode":
            if isinstance(value, str):
                known["plan_mode"] = PlanMode.parse(value)
            else:
                known["plan_mode"] = PlanMode(value["kind"], int(value.get("period", 1)))
        elif key in ("horizon", "seed"):
            known[key] = int(value)
        elif key == "pedestrians":
            known[key] = bool(value)
        elif key in ("ped_speed_scale", "on_line_threshold", "goal_radius",
                     "collision_radius", "collect_radius", "waypoint_spacing"):
            known[key] = float(value)
        else:
            raise ProtocolError("bad_overrides", f"unknown override {key!r}")
    try:
        return replace(cfg, **known)
    except (ValueError, KeyError) as e:
        raise ProtocolError("bad_overrides", str(e)) from None


def _observation_message(session: Session, terms=None, event=None) -> dict:
    runner = session.runner
    payload = base64.b64encode(runner.stack.to_bytes()).decode("ascii")
    hv = None
    if runner.config.scheme == GuidanceScheme.HYBRID and runner.waypoints.uncollected():
        vec = hybrid_vector(runner.agent, runner.waypoints)
        hv = {"r": vec.r, "theta_norm": vec.theta_norm}
    reward = {
        "r_nav": terms.r_nav if terms else 0.0,
        "r_goal": terms.r_goal if terms else 0.0,
        "total": terms.total if terms else 0.0,
    }
    terminal = event is not None and event != Event.NONE
    return {
        "kind": "observation",
        "frames": payload,
        "shape": list(OBS_SHAPE),
        "hybrid_vector": hv,
        "reward": reward,
        "terminal": terminal,
        "outcome": runner.outcome.value if runner.outcome else None,
        "t": runner.agent.t,
    }


def handle(msg: dict, session: Session) -> dict:
    """One protocol transition; always returns exactly one response."""
    kind = msg.get("kind")
    msg_id = msg.get("id")

    def reply(resp: dict) -> dict:
        if msg_id is not None:
            resp["id"] = msg_id
        return resp

    try:
        if kind == "hello":
            return reply(spec_message())
        if kind == "close":
            session.closed = True
            return reply({"kind": "bye"})
        if kind == "reset":
            cfg = _parse_overrides(session.base_config, msg.get("overrides") or {})
            if "seed" in msg and msg["seed"] is not None:
                cfg = replace(cfg, seed=int(msg["seed"]))
            session.runner = EpisodeRunner(session.cmap, cfg, render_frames=True)
            session.runner.reset()
            session.state = "running"
            return reply(_observation_message(session))
        if kind == "step":
            if session.state == "idle":
                raise ProtocolError("no_episode", "reset before stepping")
            if session.state == "terminal":
                raise ProtocolError("episode_done", "episode finished; reset to start a new one")
            action = msg.get("action")
            if isinstance(action, str):
                if action not in ACTION_NAMES:
                    raise ProtocolError("bad_action", f"unknown action {action!r}")
                act = ACTION_SET[ACTION_NAMES.index(action)]
            elif isinstance(action, int) and 0 <= action < len(ACTION_SET):
                act = ACTION_SET[action]
            else:
                raise ProtocolError("bad_action", f"action must be a name or index, got {action!r}")
            _, terms, event, _ = session.runner.step(act)
            if event != Event.NONE:
                session.state = "terminal"
            return reply(_observation_message(session, terms, event))
        if kind == "render":
            if session.state == "idle":
                raise ProtocolError("no_episode", "reset before rendering")
            fmt = msg.get("format", "raw")
            if fmt == "raw":
                return reply(_observation_message(session))
            if fmt == "ppm":
                ppm = frame_to_ppm(session.runner.stack.frames[-1])
                return reply(
                    {
                        "kind": "observation",
                        "format": "ppm",
                        "image": base64.b64encode(ppm).decode("ascii"),
                        "terminal": session.state == "terminal",
                        "outcome": session.runner.outcome.value if session.runner.outcome else None,
                    }
                )
            raise ProtocolError("bad_format", f"unknown render format {fmt!r}")
        raise ProtocolError("bad_message", f"{kind!r} is not a request")
    except ProtocolError as e:
        return reply({"kind": "error", "code": e.code, "message": str(e)})


def serve_stream(reader, writer, cmap: CityMap, base_config: EpisodeConfig) -> None:
    """Run one session over text streams until close/EOF."""
    session = Session(cmap=cmap, base_config=base_config)
    for line in reader:
        line = line.strip()
        if not line:
            continue
        try:
            msg = decode_message(line)
            resp = handle(msg, session)
        except ProtocolError as e:
            resp = {"kind": "error", "code": e.code, "message": str(e)}
        writer.write(encode_message(resp))
        writer.flush()
        if session.closed:
            break


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        reader = (raw.decode("utf-8", "replace") for raw in self.rfile)

        class W:
            def __init__(self, wfile):
                self.wfile = wfile

            def write(self, text):
                self.wfile.write(text.encode("utf-8"))

            def flush(self):
                self.wfile.flush()

        serve_stream(reader, W(self.wfile), self.server.cmap, self.server.base_config)


class EnvServer(socketserver.ThreadingTCPServer):
    """One independent session per connection; sessions share the map."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, cmap: CityMap, base_config: EpisodeConfig):
        super().__init__(address, _Handler)
        self.cmap = cmap
        self.base_config = base_config


def serve(
    cmap: CityMap,
    base_config: EpisodeConfig,
    host: str = "127.0.0.1",
    port: int = 0,
    stdio: bool = False,
    announce=None,
) -> None:
    """Serve forever on a TCP port, or over stdin/stdout with stdio=True.

    `announce` (if given) receives the bound (host, port) before accepting.
    """
    if stdio:
        serve_stream(sys.stdin, sys.stdout, cmap, base_config)
        return
    with EnvServer((host, port), cmap, base_config) as server:
        if announce is not None:
            announce(server.server_address)
        server.serve_forever()
