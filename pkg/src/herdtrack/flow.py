"""Frame-to-frame propagation from point-feature matches.

Points are laid on a deterministic grid (standing in for corner detection)
and handed to a :class:`FeatureMatcher`, which reports where each point went
in the next frame. Object points drive a per-track affine box update;
background points drive a single camera homography per frame.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Protocol, Sequence

import numpy as np

from herdtrack.errors import DegenerateBox, DegenerateConfiguration
from herdtrack.geometry import BBox, apply_affine, estimate_affine, estimate_homography

IDENTITY_H = np.eye(3)


class FeatureMatcher(Protocol):
    def match(self, prev_frame: Any, cur_frame: Any, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(dst, valid)``: (n, 2) destinations and an (n,) bool mask
        for the (n, 2) query ``points``. ``dst`` rows are finite where valid."""
        ...


@dataclass(frozen=True)
class SampleSpec:
    density: float = 1.0  # points per 1000 px^2
    min_points: int = 9

    def __post_init__(self):
        if self.density <= 0:
            raise ValueError("density must be positive")
        if self.min_points < 3:
            raise ValueError("min_points must be >= 3")


@dataclass(frozen=True)
class Propagation:
    new_box: BBox
    n_inliers: int
    camera_h: np.ndarray


def _grid(x0, y0, w, h, n) -> np.ndarray:
    cols = math.ceil(math.sqrt(n * w / h)) if h > 0 else n
    cols = min(max(cols, 2), math.ceil(n / 2))
    rows = math.ceil(n / cols)
    xs = x0 + (np.arange(cols) + 0.5) * (w / cols)
    ys = y0 + (np.arange(rows) + 0.5) * (h / rows)
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=1)[:n]


def sample_points(box: BBox, spec: SampleSpec = SampleSpec()) -> np.ndarray:
    """Regular grid of ``max(min_points, round(area * density / 1000))`` points
    at cell centres strictly inside ``box``."""
    if box.area <= 0:
        raise DegenerateBox(f"cannot sample a zero-area box {box}")
    n = max(spec.min_points, int(round(box.area * spec.density / 1000.0)))
    return _grid(box.x_tl, box.y_tl, box.width, box.height, n)


def background_points(frame_w, frame_h, track_boxes: Sequence[BBox], cols=16, rows=9, dilation=0.1) -> np.ndarray:
    """Grid points over the frame that fall outside every dilated track box."""
    xs = (np.arange(cols) + 0.5) * (frame_w / cols)
    ys = (np.arange(rows) + 0.5) * (frame_h / rows)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    keep = np.ones(len(pts), dtype=bool)
    for b in track_boxes:
        d = b.dilate(dilation)
        inside = (pts[:, 0] >= d.x_tl) & (pts[:, 0] <= d.x_br) & (pts[:, 1] >= d.y_tl) & (pts[:, 1] <= d.y_br)
        keep &= ~inside
    return pts[keep]


def propagate_track(box: BBox, src, dst) -> BBox:
    """Move ``box`` by the affine transform fitted to the object's matches.

    Raises DegenerateConfiguration when the fit is impossible; the caller
    should fall back to the Kalman prediction.
    """
    m = estimate_affine(src, dst)
    c = apply_affine(m, [[box.x_tl, box.y_tl], [box.x_br, box.y_br]])
    return BBox.from_corners(c[0, 0], c[0, 1], c[1, 0], c[1, 1])


def estimate_camera_motion(src, dst) -> tuple[np.ndarray, bool]:
    """Background homography, or ``(identity, False)`` when it cannot be fitted."""
    src = np.asarray(src, dtype=float).reshape(-1, 2)
    if len(src) < 4:
        return IDENTITY_H.copy(), False
    try:
        return estimate_homography(src, dst), True
    except DegenerateConfiguration:
        return IDENTITY_H.copy(), False
