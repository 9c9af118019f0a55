"""Synthetic stand-ins for the detector and optical flow, plus ground-truth rendering."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from herdtrack.detection import Detection
from herdtrack.geometry import BBox, apply_affine, apply_homography
from herdtrack.sim.camera import NEAR_PLANE, CameraModel, CameraPose, ground_homography, project

PURPOSE_DETECT = 1
PURPOSE_FLOW = 2


@dataclass(frozen=True)
class NoiseConfig:
    det_miss_prob: float = 0.0
    det_fp_rate: float = 0.0  # expected false boxes per processed tile
    det_jitter_sigma: float = 0.0  # px, per corner coordinate
    det_min_visible: float = 0.0  # fraction of a box that must fall in the tile to be reported
    flow_noise_sigma: float = 0.0  # px, per coordinate
    flow_drop_prob: float = 0.0

    def __post_init__(self):
        for name in ("det_miss_prob", "flow_drop_prob", "det_min_visible"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("det_fp_rate", "det_jitter_sigma", "flow_noise_sigma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def is_zero(self) -> bool:
        return self.det_miss_prob == 0 and self.det_fp_rate == 0 and self.det_jitter_sigma == 0


def substream(seed: int, frame: int, tile: int, purpose: int) -> np.random.Generator:
    """Independent generator per (frame, tile, purpose) so draw order never matters."""
    return np.random.default_rng(np.random.SeedSequence([seed, frame, tile, purpose]))


def volume_corners(center_xy, heading: float, size) -> np.ndarray:
    """The 8 corners of a ground-standing box of ``size = (length, width, height)``."""
    length, width, height = size
    fx, fy = math.cos(heading), math.sin(heading)
    fwd = np.array([fx, fy, 0.0]) * (length / 2)
    side = np.array([-fy, fx, 0.0]) * (width / 2)
    base = np.array([center_xy[0], center_xy[1], 0.0])
    pts = []
    for a in (-1, 1):
        for b in (-1, 1):
            for z in (0.0, height):
                pts.append(base + a * fwd + b * side + np.array([0.0, 0.0, z]))
    return np.array(pts)


def render_ground_truth(
    center_xy, heading: float, size, cam: CameraModel, pose: CameraPose
) -> tuple[BBox | None, bool]:
    """Image-plane bounding box of the animal's volume, clipped to the frame."""
    uv, depth = project(cam, pose, volume_corners(center_xy, heading, size))
    if np.any(depth <= NEAR_PLANE):
        return None, False
    box = BBox(uv[:, 0].min(), uv[:, 1].min(), uv[:, 0].max(), uv[:, 1].max())
    clipped = box.intersect(BBox(0, 0, cam.width, cam.height))
    if clipped is None or clipped.area <= 0:
        return None, False
    return clipped, True


@dataclass
class SimFrame:
    """Frame handle passed through the tracker: everything the synthetic sensors need."""

    index: int
    cam: CameraModel
    pose: CameraPose
    objects: dict[int, BBox] = field(default_factory=dict)  # visible ground-truth boxes by object id
    ground_h: np.ndarray | None = None

    def __post_init__(self):
        if self.ground_h is None:
            self.ground_h = ground_homography(self.cam, self.pose)


def synth_detect(tile: BBox, gt_boxes, noise: NoiseConfig, rng: np.random.Generator, class_id: int = 0) -> list[Detection]:
    """Detections a tile-level detector would report, in tile-local coordinates."""
    out = []
    for gt in gt_boxes:
        inter = gt.intersect(tile)
        if inter is None or inter.area <= 0:
            continue
        if gt.area > 0 and inter.area / gt.area < noise.det_min_visible:
            continue
        if rng.random() < noise.det_miss_prob:
            continue
        c = inter.as_array()
        if noise.det_jitter_sigma > 0:
            c = c + rng.normal(0.0, noise.det_jitter_sigma, 4)
        box = BBox.from_array(c).intersect(tile)
        if box is None or box.area <= 0:
            continue
        conf = 1.0 if noise.is_zero else float(rng.uniform(0.5, 1.0))
        out.append(Detection(box.translate(-tile.x_tl, -tile.y_tl), class_id, conf))
    for _ in range(rng.poisson(noise.det_fp_rate) if noise.det_fp_rate > 0 else 0):
        w, h = rng.uniform(20, 80, 2)
        w, h = min(w, tile.width), min(h, tile.height)
        x = rng.uniform(0, tile.width - w)
        y = rng.uniform(0, tile.height - h)
        out.append(Detection(BBox(x, y, x + w, y + h), class_id, float(rng.uniform(0.3, 0.8))))
    return out


def _perturb(dst: np.ndarray, noise: NoiseConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    if noise.flow_noise_sigma > 0:
        dst = dst + rng.normal(0.0, noise.flow_noise_sigma, dst.shape)
    valid = np.ones(len(dst), dtype=bool)
    if noise.flow_drop_prob > 0:
        valid = rng.random(len(dst)) >= noise.flow_drop_prob
    return dst, valid


def synth_matches(points, motion: np.ndarray, noise: NoiseConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Where ``points`` land under ``motion`` (2x3 affine or 3x3 homography).

    Returns ``(dst, valid)``; destinations carry Gaussian noise and each point
    is independently dropped with ``flow_drop_prob``.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    motion = np.asarray(motion, dtype=float)
    dst = apply_affine(motion, points) if motion.shape == (2, 3) else apply_homography(motion, points)
    return _perturb(dst, noise, rng)


def box_affine(a: BBox, b: BBox) -> np.ndarray:
    """Axis-aligned affine taking box ``a`` onto box ``b``."""
    sx = b.width / a.width if a.width > 0 else 1.0
    sy = b.height / a.height if a.height > 0 else 1.0
    return np.array([[sx, 0.0, b.x_tl - sx * a.x_tl], [0.0, sy, b.y_tl - sy * a.y_tl]])


class SyntheticDetector:
    def __init__(self, noise: NoiseConfig, seed: int, latency: float = 0.04):
        self.noise = noise
        self.seed = seed
        self.latency = latency

    def detect(self, frame: SimFrame, tile: BBox) -> list[Detection]:
        tile_key = int(tile.x_tl) * 100003 + int(tile.y_tl)
        rng = substream(self.seed, frame.index, tile_key, PURPOSE_DETECT)
        return synth_detect(tile, [frame.objects[k] for k in sorted(frame.objects)], self.noise, rng)


class SyntheticMatcher:
    """Points inside an object's previous box move with that object; all others with the ground."""

    def __init__(self, noise: NoiseConfig, seed: int):
        self.noise = noise
        self.seed = seed

    def match(self, prev: SimFrame, cur: SimFrame, points) -> tuple[np.ndarray, np.ndarray]:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        key = zlib.crc32(points.tobytes())
        rng = substream(self.seed, cur.index, key, PURPOSE_FLOW)
        bg_h = cur.ground_h @ np.linalg.inv(prev.ground_h)
        owner = np.full(len(points), -1)
        for oid in sorted(prev.objects):
            if oid not in cur.objects:
                continue
            b = prev.objects[oid]
            inside = (
                (owner < 0)
                & (points[:, 0] >= b.x_tl) & (points[:, 0] <= b.x_br)
                & (points[:, 1] >= b.y_tl) & (points[:, 1] <= b.y_br)
            )
            owner[inside] = oid
        dst = apply_homography(bg_h, points)
        for oid in np.unique(owner[owner >= 0]):
            sel = owner == oid
            dst[sel] = apply_affine(box_affine(prev.objects[oid], cur.objects[oid]), points[sel])
        # one noise draw over all points keeps it independent of the region split
        return _perturb(dst, self.noise, rng)
