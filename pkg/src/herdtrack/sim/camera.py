"""Pinhole camera carried by the UAV on a stabilised, forward-looking mount.

World frame is right-handed with ``z`` up; heading ``psi`` is measured
counter-clockwise from ``+x``. The camera looks along the heading, pitched
down by ``tilt_deg``; image ``u`` grows to the right and ``v`` downward.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NEAR_PLANE = 0.1


@dataclass(frozen=True)
class CameraModel:
    focal: float = 900.0
    cx: float = 640.0
    cy: float = 360.0
    width: int = 1280
    height: int = 720
    tilt_deg: float | None = None  # None: aim the optical axis at the standoff point

    def __post_init__(self):
        if self.focal <= 0:
            raise ValueError("focal must be positive")
        if not (0 <= self.cx <= self.width and 0 <= self.cy <= self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.focal, 0.0, self.cx], [0.0, self.focal, self.cy], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class CameraPose:
    R: np.ndarray  # world -> camera rotation; rows are image-right, image-down, optical axis
    C: np.ndarray  # camera centre in world coordinates


def heading_vectors(psi: float) -> tuple[np.ndarray, np.ndarray]:
    """Planar forward and right unit vectors for heading ``psi``."""
    c, s = math.cos(psi), math.sin(psi)
    return np.array([c, s, 0.0]), np.array([s, -c, 0.0])


def camera_pose(position, psi: float, tilt_deg: float) -> CameraPose:
    fwd, right = heading_vectors(psi)
    up = np.array([0.0, 0.0, 1.0])
    th = math.radians(tilt_deg)
    axis = math.cos(th) * fwd - math.sin(th) * up
    down = -(math.sin(th) * fwd + math.cos(th) * up)
    return CameraPose(np.stack([right, down, axis]), np.asarray(position, dtype=float))


def project(cam: CameraModel, pose: CameraPose, pts) -> tuple[np.ndarray, np.ndarray]:
    """Project (n, 3) world points; returns (n, 2) pixels and camera-frame depth."""
    pc = (np.asarray(pts, dtype=float) - pose.C) @ pose.R.T
    z = pc[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        uv = cam.focal * pc[:, :2] / z[:, None] + np.array([cam.cx, cam.cy])
    return uv, z


def ground_homography(cam: CameraModel, pose: CameraPose) -> np.ndarray:
    """Homography taking ground-plane ``(x, y, 1)`` to image pixels."""
    t = -pose.R @ pose.C
    return cam.K @ np.column_stack([pose.R[:, 0], pose.R[:, 1], t])


def ray_to_ground(cam: CameraModel, pose: CameraPose, u: float, v: float, plane_z: float = 0.0) -> np.ndarray | None:
    """Intersect the viewing ray through pixel ``(u, v)`` with ``z = plane_z``.

    Returns the planar ``(x, y)`` hit, or None when the ray does not descend.
    """
    d = pose.R.T @ np.array([(u - cam.cx) / cam.focal, (v - cam.cy) / cam.focal, 1.0])
    if d[2] >= -1e-12:
        return None
    s = (plane_z - pose.C[2]) / d[2]
    if s <= 0:
        return None
    hit = pose.C + s * d
    return hit[:2]


def auto_tilt(altitude: float, standoff: float) -> float:
    """Tilt (degrees) that puts the ground point ``standoff`` ahead at the image centre."""
    return math.degrees(math.atan2(altitude, standoff))
