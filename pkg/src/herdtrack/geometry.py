"""Pixel-space primitives: boxes, overlap, and least-squares transform fits.

Boxes are always corner form ``(x_tl, y_tl, x_br, y_br)``. Affine transforms
are 2x3 arrays ``[A | t]``; homographies are 3x3 arrays scaled so that
``H[2, 2] == 1`` whenever that entry is non-zero.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from herdtrack.errors import DegenerateConfiguration, ProjectiveDegeneracy

_HORIZON_EPS = 1e-9
_MIN_DET = 1e-12


@dataclass(frozen=True, slots=True)
class BBox:
    x_tl: float
    y_tl: float
    x_br: float
    y_br: float

    def __post_init__(self):
        if not (self.x_tl <= self.x_br and self.y_tl <= self.y_br):
            raise ValueError(f"corners out of order: {self}")

    @classmethod
    def from_corners(cls, x0, y0, x1, y1) -> "BBox":
        """Build a box from two arbitrary opposite corners."""
        return cls(float(min(x0, x1)), float(min(y0, y1)), float(max(x0, x1)), float(max(y0, y1)))

    @classmethod
    def from_array(cls, a) -> "BBox":
        return cls.from_corners(a[0], a[1], a[2], a[3])

    def as_array(self) -> np.ndarray:
        return np.array([self.x_tl, self.y_tl, self.x_br, self.y_br], dtype=float)

    @property
    def width(self) -> float:
        return self.x_br - self.x_tl

    @property
    def height(self) -> float:
        return self.y_br - self.y_tl

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return 0.5 * (self.x_tl + self.x_br), 0.5 * (self.y_tl + self.y_br)

    def contains(self, x, y) -> bool:
        return self.x_tl <= x <= self.x_br and self.y_tl <= y <= self.y_br

    def intersect(self, other: "BBox") -> "BBox | None":
        x0, y0 = max(self.x_tl, other.x_tl), max(self.y_tl, other.y_tl)
        x1, y1 = min(self.x_br, other.x_br), min(self.y_br, other.y_br)
        if x0 > x1 or y0 > y1:
            return None
        return BBox(x0, y0, x1, y1)

    def translate(self, dx, dy) -> "BBox":
        return BBox(self.x_tl + dx, self.y_tl + dy, self.x_br + dx, self.y_br + dy)

    def dilate(self, frac) -> "BBox":
        """Grow each side by ``frac`` of the box extent along that axis (split evenly)."""
        mx, my = 0.5 * frac * self.width, 0.5 * frac * self.height
        return BBox(self.x_tl - mx, self.y_tl - my, self.x_br + mx, self.y_br + my)


class PointMatch(NamedTuple):
    src: tuple[float, float]
    dst: tuple[float, float]


def split_matches(matches: Sequence[PointMatch]) -> tuple[np.ndarray, np.ndarray]:
    """Turn a list of PointMatch into ``(src, dst)`` arrays of shape (n, 2)."""
    if len(matches) == 0:
        return np.zeros((0, 2)), np.zeros((0, 2))
    src = np.array([m.src for m in matches], dtype=float)
    dst = np.array([m.dst for m in matches], dtype=float)
    return src, dst


def iou(a: BBox, b: BBox) -> float:
    iw = min(a.x_br, b.x_br) - max(a.x_tl, b.x_tl)
    ih = min(a.y_br, b.y_br) - max(a.y_tl, b.y_tl)
    inter = max(iw, 0.0) * max(ih, 0.0)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def _as_points(pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected (n, 2) point array, got shape {pts.shape}")
    return pts


def _is_collinear(pts: np.ndarray, rtol=1e-9) -> bool:
    centered = pts - pts.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s[0] == 0.0:
        return True
    return s[1] <= rtol * s[0]


def estimate_affine(src, dst) -> np.ndarray:
    """Least-squares affine map taking ``src`` onto ``dst``.

    Minimises ``sum ||A @ src_i + t - dst_i||^2`` and returns the 2x3 matrix
    ``[A | t]``. Raises DegenerateConfiguration for fewer than three points or
    a collinear source set.
    """
    src, dst = _as_points(src), _as_points(dst)
    if len(src) != len(dst):
        raise ValueError("src and dst differ in length")
    if len(src) < 3:
        raise DegenerateConfiguration(f"affine fit needs >= 3 matches, got {len(src)}")
    if _is_collinear(src):
        raise DegenerateConfiguration("source points are collinear")
    # Centering keeps the normal equations well conditioned at pixel scale.
    ms, md = src.mean(axis=0), dst.mean(axis=0)
    cs, cd = src - ms, dst - md
    sol, *_ = np.linalg.lstsq(cs, cd, rcond=None)
    A = sol.T
    t = md - A @ ms
    return np.hstack([A, t[:, None]])


def apply_affine(m: np.ndarray, pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    return pts @ m[:, :2].T + m[:, 2]


def _hartley(pts: np.ndarray) -> np.ndarray:
    c = pts.mean(axis=0)
    d = np.sqrt(((pts - c) ** 2).sum(axis=1)).mean()
    s = np.sqrt(2.0) / d if d > 0 else 1.0
    return np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])


def dlt_matrix(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """The 2n x 9 design matrix whose null vector is the stacked homography."""
    n = len(src)
    x, y = src[:, 0], src[:, 1]
    u, v = dst[:, 0], dst[:, 1]
    one, zero = np.ones(n), np.zeros(n)
    rows_u = np.stack([x, y, one, zero, zero, zero, -u * x, -u * y, -u], axis=1)
    rows_v = np.stack([zero, zero, zero, x, y, one, -v * x, -v * y, -v], axis=1)
    return np.vstack([rows_u, rows_v])


def normalize_homography(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if abs(h[2, 2]) > _MIN_DET:
        return h / h[2, 2]
    return h / np.linalg.norm(h)


def estimate_homography(src, dst) -> np.ndarray:
    """Normalised DLT homography taking ``src`` onto ``dst``.

    Both point sets are Hartley-normalised before the SVD; the result is
    denormalised and scaled so ``H[2, 2] == 1``.
    """
    src, dst = _as_points(src), _as_points(dst)
    if len(src) != len(dst):
        raise ValueError("src and dst differ in length")
    if len(src) < 4:
        raise DegenerateConfiguration(f"homography fit needs >= 4 matches, got {len(src)}")
    if len(src) == 4:
        for tri in itertools.combinations(range(4), 3):
            if _is_collinear(src[list(tri)]):
                raise DegenerateConfiguration("three of four source points are collinear")
    ts, td = _hartley(src), _hartley(dst)
    ns = src @ ts[:2, :2].T + ts[:2, 2]
    nd = dst @ td[:2, :2].T + td[:2, 2]
    _, s, vt = np.linalg.svd(dlt_matrix(ns, nd))
    if s[-2] <= 1e-10 * s[0]:
        raise DegenerateConfiguration("DLT design matrix is rank deficient")
    hn = vt[-1].reshape(3, 3)
    h = np.linalg.solve(td, hn @ ts)
    h = normalize_homography(h)
    if abs(np.linalg.det(h)) <= _MIN_DET:
        raise DegenerateConfiguration("estimated homography is singular")
    return h


def apply_homography(h: np.ndarray, pts) -> np.ndarray:
    """Map (n, 2) points through ``h`` with perspective divide."""
    pts = np.asarray(pts, dtype=float)
    hom = pts @ h[:, :2].T + h[:, 2]
    w = hom[:, 2]
    if np.any(np.abs(w) < _HORIZON_EPS):
        raise ProjectiveDegeneracy("point maps to the line at infinity")
    return hom[:, :2] / w[:, None]


def homography_jacobian(h: np.ndarray, x, y) -> np.ndarray:
    """2x2 derivative of the projective map at pixel ``(x, y)``."""
    w = h[2, 0] * x + h[2, 1] * y + h[2, 2]
    if abs(w) < _HORIZON_EPS:
        raise ProjectiveDegeneracy("point maps to the line at infinity")
    u = (h[0, 0] * x + h[0, 1] * y + h[0, 2]) / w
    v = (h[1, 0] * x + h[1, 1] * y + h[1, 2]) / w
    return (h[:2, :2] - np.outer([u, v], h[2, :2])) / w


def warp_box(box: BBox, h: np.ndarray) -> BBox:
    """Warp the two defining corners of ``box`` through ``h``."""
    p = apply_homography(h, [[box.x_tl, box.y_tl], [box.x_br, box.y_br]])
    return BBox.from_corners(p[0, 0], p[0, 1], p[1, 0], p[1, 1])


def translation_homography(tx, ty) -> np.ndarray:
    return np.array([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])
