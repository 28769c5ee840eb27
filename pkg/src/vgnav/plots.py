"""Trajectory figures: planned paths in blue, waypoints as yellow dots,
actual trajectories in pink, over a top-down palette view of the map."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from vgnav.render import frame_to_rgb
from vgnav.world import CityMap

PLANNED_COLOR = "#1f4fff"     # blue planned navigation paths
WAYPOINT_COLOR = "#ffd700"    # yellow waypoint balls
TRAJECTORY_COLOR = "#ff69b4"  # pink actual trajectories


def trajectory_figure(cmap: CityMap, episodes: list[dict], out_path,
                      title: str = "") -> None:
    """Render one overview figure from episode log records (the dicts
    written to episodes.jsonl) and save it; format follows the suffix."""
    fig, ax = plt.subplots(figsize=(7, 7))
    w = cmap.width * cmap.cell_size
    h = cmap.height * cmap.cell_size
    # row 0 is the top of the world; flip the y-axis so x/y read natively
    ax.imshow(frame_to_rgb(cmap.classes), extent=(0, w, h, 0), origin="upper",
              interpolation="nearest")
    for i, ep in enumerate(episodes):
        planned = ep.get("planned") or []
        traj = ep.get("trajectory") or []
        wps = ep.get("waypoints") or []
        if len(planned) >= 2:
            ax.plot([p[0] for p in planned], [p[1] for p in planned],
                    color=PLANNED_COLOR, linewidth=1.6,
                    label="planned" if i == 0 else None)
        if wps:
            ax.scatter([p[0] for p in wps], [p[1] for p in wps],
                       s=14, color=WAYPOINT_COLOR, edgecolors="black",
                       linewidths=0.3, zorder=3,
                       label="waypoints" if i == 0 else None)
        if len(traj) >= 2:
            ax.plot([p[0] for p in traj], [p[1] for p in traj],
                    color=TRAJECTORY_COLOR, linewidth=1.2, zorder=4,
                    label="actual" if i == 0 else None)
    ax.set_xlim(0, w)
    ax.set_ylim(h, 0)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    if title:
        ax.set_title(title)
    if episodes:
        ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
