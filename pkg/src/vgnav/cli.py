"""`vg` command line: planning, single runs, batch evaluation, rendering,
trajectory figures, the environment server, and detection missions.

Every failure exits nonzero with a single parsable line on stderr:
`vg: error: <Code>: <message>`.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from vgnav import __version__
from vgnav.episode import EpisodeConfig, run_episode
from vgnav.errors import VgError
from vgnav.guidance import GuidanceScheme, geometry_for
from vgnav.metrics import (
    aggregate,
    episode_log_line,
    episodes_csv,
    report_json,
    report_table,
)
from vgnav.planner import PlanMode, extract_waypoints, plan
from vgnav.policies import make_policy
from vgnav.render import CameraModel, frame_to_ppm, render_frame
from vgnav.scenarios import load_scenario_set, open_map, resolve_map_path
from vgnav.world import AgentState, pedestrian_pose

PLAN_FORMAT = "vgplan/1"


def _parse_point(cmap, text):
    if text in cmap.named_points:
        return cmap.named_points[text]
    try:
        x, _, y = text.partition(",")
        return (float(x), float(y))
    except ValueError:
        raise VgError(f"{text!r} is neither a named point nor x,y coordinates") from None


def _parse_route(text):
    a, sep, b = text.partition(":")
    if not sep or not a or not b:
        raise VgError(f"route must look like START:GOAL, got {text!r}")
    return (a, b)


def _scheme(text) -> GuidanceScheme:
    try:
        return GuidanceScheme(text)
    except ValueError:
        raise VgError(f"unknown scheme {text!r} (path | waypoints | hybrid)") from None


def _plan_mode(text) -> PlanMode:
    try:
        return PlanMode.parse(text)
    except ValueError as e:
        raise VgError(str(e)) from None


def _episode_config(args, route) -> EpisodeConfig:
    return EpisodeConfig(
        route=route,
        scheme=_scheme(args.scheme),
        plan_mode=_plan_mode(args.plan_mode),
        horizon=args.horizon,
        seed=args.seed,
        pedestrians=args.pedestrians,
    )


def cmd_plan(args) -> int:
    cmap = open_map(args.map)
    src = _parse_point(cmap, args.src)
    dst = _parse_point(cmap, args.dst)
    path = plan(cmap, src, dst)
    wset = extract_waypoints(path, args.waypoints)
    doc = {
        "version": PLAN_FORMAT,
        "from": list(src),
        "to": list(dst),
        "path": {
            "points": [list(p) for p in path.points],
            "length_m": path.length,
            "cost_m": path.scaled_cost(cmap.cell_size),
        },
        "waypoints": {
            "spacing_m": wset.spacing,
            "points": [list(p) for p in wset.waypoints],
        },
    }
    print(json.dumps(doc, sort_keys=True, indent=2))
    return 0


def cmd_run(args) -> int:
    cmap = open_map(args.map)
    config = _episode_config(args, _parse_route(args.route))
    policy = make_policy(args.policy)
    result = run_episode(policy, config, cmap)
    print(episode_log_line(0, result))
    return 0


def _eval_one(packed):
    cmap, args_dict, route, seed = packed
    config = EpisodeConfig(
        route=route,
        scheme=GuidanceScheme(args_dict["scheme"]),
        plan_mode=PlanMode.parse(args_dict["plan_mode"]),
        horizon=args_dict["horizon"],
        seed=seed,
        pedestrians=args_dict["pedestrians"],
    )
    policy = make_policy(args_dict["policy"])
    return run_episode(policy, config, cmap)


def cmd_eval(args) -> int:
    cmap = open_map(args.map)
    map_path = resolve_map_path(args.map)
    scen = load_scenario_set(args.set, map_path, cmap)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    jobs = []
    args_dict = {
        "scheme": args.scheme,
        "plan_mode": args.plan_mode,
        "horizon": args.horizon,
        "pedestrians": args.pedestrians or scen.pedestrians,
        "policy": args.policy,
    }
    episodes_per_route = args.episodes_per_route or scen.episodes_per_route
    idx = 0
    for route in scen.routes:
        for _ in range(episodes_per_route):
            jobs.append((cmap, args_dict, route, args.seed + idx))
            idx += 1

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_eval_one, jobs))
    else:
        results = [_eval_one(job) for job in jobs]

    report = aggregate(results, corridor_w=args.corridor)
    config_info = {
        "map": str(args.map),
        "set": scen.name,
        "scheme": args.scheme,
        "plan_mode": args.plan_mode,
        "policy": args.policy,
        "seed": args.seed,
        "episodes_per_route": episodes_per_route,
        "pedestrians": args_dict["pedestrians"],
        "corridor_m": args.corridor,
        "horizon": args.horizon,
    }

    (outdir / "report.json").write_text(report_json(report, config_info), encoding="utf-8")
    label = f"{args.policy}/{args.scheme}/{args.plan_mode} [{scen.name}]"
    (outdir / "report.txt").write_text(report_table(report, label), encoding="utf-8")
    (outdir / "report.csv").write_text(episodes_csv(results), encoding="utf-8")
    log_lines = [episode_log_line(i, r) for i, r in enumerate(results)]
    (outdir / "episodes.jsonl").write_text("\n".join(log_lines) + "\n", encoding="utf-8")

    from vgnav.plots import trajectory_figure

    episodes = [json.loads(line) for line in log_lines]
    trajectory_figure(cmap, episodes, outdir / "trajectories.svg", title=label)

    sys.stdout.write(report_table(report, label))
    return 0


def cmd_trajplot(args) -> int:
    cmap = open_map(args.map)
    episodes = []
    with open(args.log, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                try:
                    episodes.append(json.loads(line))
                except json.JSONDecodeError as e:
                    raise VgError(f"bad episode log line: {e}") from None
    for ep in episodes:
        for p in ep.get("trajectory", []):
            x, y = p
            x0, y0, x1, y1 = cmap.bounds
            if not (x0 - 50 <= x <= x1 + 50 and y0 - 50 <= y <= y1 + 50):
                raise VgError(f"trajectory point {p} far outside map bounds; wrong map?")
    from vgnav.plots import trajectory_figure

    trajectory_figure(cmap, episodes, args.out, title=args.title)
    return 0


def cmd_render_frame(args) -> int:
    cmap = open_map(args.map)
    x, _, y = args.at.partition(",")
    agent = AgentState(position=(float(x), float(y)), heading=args.heading)
    cam = CameraModel()
    geometry = None
    if args.route:
        route = _parse_route(args.route)
        for label in route:
            if label not in cmap.named_points:
                raise VgError(f"route endpoint {label!r} not in map")
        path = plan(cmap, cmap.named_points[route[0]], cmap.named_points[route[1]])
        wset = extract_waypoints(path, 10.0)
        geometry = geometry_for(_scheme(args.scheme), path, wset, agent=agent)
    peds = [pedestrian_pose(p, 0.0) for p in cmap.pedestrians] if args.pedestrians else []
    frame = render_frame(cmap, peds, agent, geometry, cam)
    data = frame_to_ppm(frame) if args.format == "ppm" else frame.tobytes()
    if args.out == "-":
        sys.stdout.buffer.write(data)
    else:
        Path(args.out).write_bytes(data)
    return 0


def cmd_serve(args) -> int:
    from vgnav.envserver import serve

    cmap = open_map(args.map)
    config = _episode_config(args, _parse_route(args.route))

    def announce(addr):
        print(f"listening {addr[0]}:{addr[1]}", flush=True)

    serve(cmap, config, host=args.host, port=args.port, stdio=args.stdio,
          announce=announce)
    return 0


def cmd_mission(args) -> int:
    from vgnav.detect import (
        compose_mission,
        detections_to_waypoints,
        ground_targets,
        guidance_from_mission,
        load_detections,
        parse_mission,
    )

    dets, extras = load_detections(args.detections)
    cam = CameraModel(**extras.get("camera", {}))
    pose = extras.get("agent", {})
    if args.pose:
        px, py, ph = args.pose.split(",")
        pose = {"x": float(px), "y": float(py), "heading": float(ph)}
    agent = AgentState(
        position=(float(pose.get("x", 0.0)), float(pose.get("y", 0.0))),
        heading=float(pose.get("heading", 0.0)),
    )
    mission = parse_mission(args.prompt)
    targets = compose_mission(mission, ground_targets(dets, cam, agent), agent.position)
    wset = detections_to_waypoints(dets, cam, agent, mission)
    geometry = guidance_from_mission([p for _, p in targets], _scheme(args.scheme),
                                     agent.position)
    doc = {
        "version": "vgmission/1",
        "mission": {"op": mission.op, "labels": list(mission.labels)},
        "targets": [{"label": label, "point": list(p)} for label, p in targets],
        "waypoints": [list(p) for p in wset.waypoints],
        "geometry": {
            "scheme": geometry.scheme.value,
            "path_polyline": [list(p) for p in geometry.path_polyline]
            if geometry.path_polyline
            else None,
            "spheres": [
                {"center": list(c), "radius": r} for c, r in geometry.visible_waypoints
            ],
        },
    }
    print(json.dumps(doc, sort_keys=True, indent=2))
    return 0


# JSON config keys accepted by run/eval/serve; command-line flags win
CONFIG_KEYS = {
    "map", "route", "scheme", "plan_mode", "policy", "horizon", "seed",
    "pedestrians", "corridor", "jobs", "set", "episodes_per_route",
    "host", "port",
}


def _load_config(argv) -> dict:
    path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif arg.startswith("--config="):
            path = arg.split("=", 1)[1]
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            config = json.load(f)
    except OSError as e:
        raise VgError(f"cannot read config file: {e}") from None
    except json.JSONDecodeError as e:
        raise VgError(f"config file is not valid JSON: {e}") from None
    unknown = set(config) - CONFIG_KEYS
    if unknown:
        raise VgError(f"unknown config keys {sorted(unknown)} (known: {sorted(CONFIG_KEYS)})")
    return config


def build_parser(config: dict | None = None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vg",
        description="urban navigation simulator with virtual guidance overlays",
    )
    parser.add_argument("--version", action="version", version=f"vg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="plan a road path and waypoints")
    p.add_argument("--map", required=True)
    p.add_argument("--from", dest="src", required=True, help="named point or x,y")
    p.add_argument("--to", dest="dst", required=True, help="named point or x,y")
    p.add_argument("--waypoints", type=float, default=10.0, help="spacing in meters")
    p.set_defaults(func=cmd_plan)

    def add_episode_flags(p, with_policy=True):
        p.add_argument("--config", default=None,
                       help="JSON file of flag defaults (flags still win)")
        p.add_argument("--scheme", default="path", help="path | waypoints | hybrid")
        p.add_argument("--plan-mode", default="onetime", help="onetime | realtime[:period]")
        p.add_argument("--horizon", type=int, default=3000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--pedestrians", action="store_true")
        if with_policy:
            p.add_argument("--policy", default="pursuit",
                           help="pursuit | greedy | hybrid | random | noop")
        if config:
            p.set_defaults(**config)

    def configurable(p, name, **kw):
        # flags that a --config file may satisfy lose their required bit
        key = name.lstrip("-").replace("-", "_")
        if config and key in config:
            kw["required"] = False
            kw["default"] = config[key]
        p.add_argument(name, **kw)

    p = sub.add_parser("run", help="run one episode, print its log record")
    configurable(p, "--map", required=True)
    configurable(p, "--route", required=True, help="START:GOAL named points")
    add_episode_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="batch evaluation over a scenario set")
    configurable(p, "--map", required=True)
    p.add_argument("--set", default="seen", help="seen | unseen | routes89 | file.json[#set]")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--episodes-per-route", type=int, default=0,
                   help="0 = use the scenario file's value")
    p.add_argument("--corridor", type=float, default=2.0,
                   help="line-following corridor half-width (m)")
    add_episode_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("trajplot", help="draw trajectories from an episodes.jsonl log")
    p.add_argument("--map", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True, help="figure path (.svg/.png/.pdf)")
    p.add_argument("--title", default="")
    p.set_defaults(func=cmd_trajplot)

    p = sub.add_parser("render-frame", help="render one observation frame")
    p.add_argument("--map", required=True)
    p.add_argument("--at", required=True, help="agent position x,y")
    p.add_argument("--heading", type=float, default=0.0)
    p.add_argument("--route", default="", help="optional START:GOAL to overlay guidance")
    p.add_argument("--scheme", default="path")
    p.add_argument("--pedestrians", action="store_true")
    p.add_argument("--format", choices=("raw", "ppm"), default="raw")
    p.add_argument("--out", default="-", help="file path or - for stdout")
    p.set_defaults(func=cmd_render_frame)

    p = sub.add_parser("serve", help="serve the vgenv/1 wire protocol")
    configurable(p, "--map", required=True)
    p.add_argument("--route", default="n1:s1", help="default route for bare resets")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=5555)
    p.add_argument("--stdio", action="store_true", help="serve over stdin/stdout")
    add_episode_flags(p, with_policy=False)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("mission", help="detections + prompt -> guidance geometry")
    p.add_argument("--detections", required=True, help="vgdet/1 JSON file")
    p.add_argument("--prompt", required=True, help="labels joined with & (all) or | (any)")
    p.add_argument("--scheme", default="waypoints")
    p.add_argument("--pose", default="", help="agent pose x,y,heading")
    p.set_defaults(func=cmd_mission)

    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        config = _load_config(argv)
    except VgError as e:
        print(f"vg: error: {e.code}: {e}", file=sys.stderr)
        return 2
    parser = build_parser(config)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VgError as e:
        print(f"vg: error: {e.code}: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"vg: error: InvalidArgument: {e}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
