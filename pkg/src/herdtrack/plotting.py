"""Figures written next to a run's delimited outputs.

Uses matplotlib's object API (no pyplot), so nothing here touches global
backend state and figures render headless.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure
from matplotlib.patches import Circle, Rectangle

from herdtrack.detection import TileGrid
from herdtrack.geometry import iou

PHASE_COLORS = {
    "idle": "0.6",
    "navigate": "tab:blue",
    "track": "tab:orange",
    "herd": "tab:red",
    "return": "tab:green",
}


def plot_trajectory(rows, geofence_radius: float, base_xy=(0.0, 0.0)) -> Figure:
    """Top-down view: animal path, UAV path coloured by mission phase, geofence."""
    fig = Figure(figsize=(6.5, 6.0))
    ax = fig.add_subplot()
    ex = np.array([r[1] for r in rows])
    ey = np.array([r[2] for r in rows])
    ax.plot(ex, ey, color="k", lw=1.5, label="animal")
    ux = np.array([r[3] for r in rows])
    uy = np.array([r[4] for r in rows])
    phases = [r[5] for r in rows]
    # later phases retrace earlier legs; draw herding last so it stays visible
    for name in ("idle", "navigate", "return", "track", "herd"):
        sel = np.array([p == name for p in phases])
        if sel.any():
            ax.plot(ux[sel], uy[sel], ".", ms=2, color=PHASE_COLORS[name], label=f"UAV ({name})")
    ax.add_patch(Circle(base_xy, geofence_radius, fill=False, ls="--", color="0.4", label="geofence"))
    ax.plot(*base_xy, marker="^", color="k", ms=8, ls="none", label="base")
    ax.set_aspect("equal")
    ax.set_xlabel("east [m]")
    ax.set_ylabel("north [m]")
    ax.legend(loc="best", fontsize=7)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def plot_tracking(tracked, margin: float) -> Figure:
    """Target IOU and ground-cast distance over the camera phases."""
    fig = Figure(figsize=(8.0, 5.0))
    ax1, ax2 = fig.subplots(2, 1, sharex=True)
    t = np.array([f.t for f in tracked])
    ious = np.array(
        [iou(f.target.box, f.gt_box) if f.target is not None and f.gt_box is not None else 0.0 for f in tracked]
    )
    dist = np.array([np.hypot(f.uav_aim[0] - f.gt_ground[0], f.uav_aim[1] - f.gt_ground[1]) for f in tracked])
    ax1.plot(t, ious, lw=1)
    ax1.axhline(0.5, color="0.5", ls=":")
    ax1.set_ylabel("target IOU")
    ax1.set_ylim(0, 1.05)
    ax2.plot(t, dist, lw=1)
    ax2.axhline(margin, color="tab:red", ls=":", label=f"{margin:g} m margin")
    ax2.set_ylabel("aim error [m]")
    ax2.set_xlabel("time [s]")
    ax2.legend(loc="upper right", fontsize=8)
    for ax in (ax1, ax2):
        ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def plot_tiles(grid: TileGrid, frame_w: int, frame_h: int) -> Figure:
    fig = Figure(figsize=(6.4, 3.6 + 0.4))
    ax = fig.add_subplot()
    ax.add_patch(Rectangle((0, 0), frame_w, frame_h, fill=False, lw=2, color="k"))
    for i, tile in enumerate(grid.tiles):
        r = tile.rect
        ax.add_patch(Rectangle((r.x_tl, r.y_tl), r.width, r.height, alpha=0.15, color=f"C{i % 10}"))
        ax.add_patch(Rectangle((r.x_tl, r.y_tl), r.width, r.height, fill=False, color=f"C{i % 10}"))
        cx, cy = r.center
        ax.text(cx, cy, str(i), ha="center", va="center")
    ax.set_xlim(-10, frame_w + 10)
    ax.set_ylim(frame_h + 10, -10)  # image rows grow downward
    ax.set_aspect("equal")
    ax.set_title(f"{len(grid.tiles)} tiles over {frame_w}x{frame_h}")
    fig.tight_layout()
    return fig


def save(fig: Figure, path: str | Path, dpi: int = 120) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=dpi)
    return path
