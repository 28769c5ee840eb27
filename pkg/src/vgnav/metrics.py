"""Evaluation metrics and report emission.

SPL discounts each success by the ratio of the planner's shortest length
to the length actually traveled; line following counts trajectory samples
inside a corridor of the planned path; waypoint collecting pools collected
over total across the set. Reports serialize as "vgreport/1" JSON, an
aligned text table, per-episode CSV, and a JSON-lines trajectory log.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

from vgnav.episode import EpisodeResult, Outcome
from vgnav.geom import distance_to_polyline

REPORT_FORMAT = "vgreport/1"
LINE_CORRIDOR = 2.0  # m


@dataclass(frozen=True)
class MetricsReport:
    spl: float
    success_rate: float
    line_following_rate: float
    waypoint_collecting_rate: float
    collision_rate: float
    oob_rate: float
    timeout_rate: float
    episodes: int

    def as_dict(self) -> dict:
        return {
            "spl": self.spl,
            "success_rate": self.success_rate,
            "line_following_rate": self.line_following_rate,
            "waypoint_collecting_rate": self.waypoint_collecting_rate,
            "collision_rate": self.collision_rate,
            "oob_rate": self.oob_rate,
            "timeout_rate": self.timeout_rate,
            "episodes": self.episodes,
        }


def spl(results: list[EpisodeResult], shortest_lengths: list[float]) -> float:
    """Success weighted by path length: mean of S_i * l_i / max(l_i, p_i)."""
    if not results:
        raise ValueError("need at least one episode")
    if len(shortest_lengths) != len(results):
        raise ValueError("one shortest length per episode required")
    terms = []
    for res, l in zip(results, shortest_lengths):
        if l <= 0:
            raise ValueError("shortest lengths must be > 0")
        if res.outcome != Outcome.SUCCESS:
            terms.append(0.0)
            continue
        p = res.traveled_length
        terms.append(l / max(l, p))
    return math.fsum(terms) / len(terms)


def line_following_rate(trajectory, path_points, corridor_w: float = LINE_CORRIDOR) -> float:
    """Fraction of trajectory samples within corridor_w of the path."""
    if corridor_w <= 0:
        raise ValueError("corridor width must be > 0")
    if not trajectory:
        return 0.0
    pts = list(path_points)
    inside = sum(1 for p in trajectory if distance_to_polyline(pts, p) <= corridor_w)
    return inside / len(trajectory)


def waypoint_collecting_rate(results: list[EpisodeResult]) -> float:
    """Pooled collected / total over the whole evaluation set."""
    total = sum(r.waypoints_total for r in results)
    if total <= 0:
        raise ValueError("no waypoints in the evaluation set")
    return sum(r.waypoints_collected for r in results) / total


def aggregate(results: list[EpisodeResult], corridor_w: float = LINE_CORRIDOR) -> MetricsReport:
    """All rates over an evaluation set; outcome rates partition unity."""
    if not results:
        raise ValueError("need at least one episode")
    n = len(results)
    outcomes = [r.outcome for r in results]
    line_rates = [
        line_following_rate(r.trajectory, r.initial_path.points, corridor_w) for r in results
    ]
    return MetricsReport(
        spl=spl(results, [r.shortest_length for r in results]),
        success_rate=outcomes.count(Outcome.SUCCESS) / n,
        line_following_rate=math.fsum(line_rates) / n,
        waypoint_collecting_rate=waypoint_collecting_rate(results),
        collision_rate=outcomes.count(Outcome.COLLISION) / n,
        oob_rate=outcomes.count(Outcome.OUT_OF_BOUND) / n,
        timeout_rate=outcomes.count(Outcome.TIMEOUT) / n,
        episodes=n,
    )


def report_document(report: MetricsReport, config_info: dict) -> dict:
    return {
        "version": REPORT_FORMAT,
        "config": config_info,
        "metrics": report.as_dict(),
    }


def report_json(report: MetricsReport, config_info: dict) -> str:
    """Canonical JSON serialization; byte-stable for identical inputs."""
    return json.dumps(report_document(report, config_info), sort_keys=True, indent=2) + "\n"


_TABLE_COLUMNS = [
    ("SPL", "spl"),
    ("Success Rate", "success_rate"),
    ("Line Following Rate", "line_following_rate"),
    ("Waypoint Collecting Rate", "waypoint_collecting_rate"),
    ("Collision Rate", "collision_rate"),
    ("Out-of-Bound", "oob_rate"),
    ("Timeout", "timeout_rate"),
]


def report_table(report: MetricsReport, label: str = "") -> str:
    """Aligned plain-text table with the standard metric columns."""
    headers = [name for name, _ in _TABLE_COLUMNS]
    values = [f"{getattr(report, key) * 100.0:.2f}%" for _, key in _TABLE_COLUMNS]
    cells = [label or "metrics"] + values
    headers = ["Scheme"] + headers
    widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
    line1 = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    line2 = "  ".join(c.ljust(w) for c, w in zip(cells, widths))
    return line1 + "\n" + line2 + "\n"


def episodes_csv(results: list[EpisodeResult]) -> str:
    """One delimited row per episode."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["episode", "start", "goal", "outcome", "steps", "reward",
         "shortest_m", "traveled_m", "collected", "waypoints"]
    )
    for i, r in enumerate(results):
        writer.writerow(
            [
                i,
                r.route[0],
                r.route[1],
                r.outcome.value,
                len(r.trajectory) - 1,
                f"{r.cumulative_reward:.6f}",
                f"{r.shortest_length:.3f}",
                f"{r.traveled_length:.3f}",
                r.waypoints_collected,
                r.waypoints_total,
            ]
        )
    return buf.getvalue()


def episode_log_line(index: int, result: EpisodeResult) -> str:
    """One JSON-lines record with everything the trajectory plots need."""
    doc = {
        "episode": index,
        "route": list(result.route),
        "scheme": result.scheme.value,
        "seed": result.seed,
        "outcome": result.outcome.value,
        "reward": result.cumulative_reward,
        "shortest_length": result.shortest_length,
        "traveled_length": result.traveled_length,
        "waypoints_collected": result.waypoints_collected,
        "waypoints_total": result.waypoints_total,
        "replans": result.replans,
        "planned": [list(p) for p in result.initial_path.points],
        "waypoints": [list(p) for p in result.initial_waypoints],
        "trajectory": [list(p) for p in result.trajectory],
        "steps": result.steps,
    }
    return json.dumps(doc, sort_keys=True)
