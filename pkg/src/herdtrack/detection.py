"""Tiled detection: overlapping tile grid, one-tile-per-slot scheduling, and
merging per-tile detections back into frame coordinates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Protocol, Sequence

from herdtrack.errors import InvalidGrid
from herdtrack.geometry import BBox, iou


@dataclass(frozen=True)
class Detection:
    box: BBox
    class_id: int = 0
    confidence: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of range: {self.confidence}")


class Detector(Protocol):
    latency: float  # nominal seconds per tile

    def detect(self, frame: Any, tile: BBox) -> list[Detection]:
        """Detections inside ``tile``, in tile-local pixel coordinates."""
        ...


@dataclass
class Tile:
    rect: BBox
    age: int = 0
    last_count: int = 0


@dataclass
class TileGrid:
    frame_w: int
    frame_h: int
    cols: int
    rows: int
    overlap: float
    tiles: list[Tile] = field(default_factory=list)

    def mark_processed(self, index: int, count: int) -> None:
        """Record a visit: the visited tile's age resets, every other tile ages."""
        for i, t in enumerate(self.tiles):
            if i == index:
                t.age = 0
                t.last_count = count
            else:
                t.age += 1


@dataclass(frozen=True)
class SchedulerConfig:
    conf_min: float = 0.5
    age_weight: float = 0.5
    nms_iou: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.conf_min <= 1.0:
            raise ValueError("conf_min must lie in [0, 1]")
        if self.age_weight < 0:
            raise ValueError("age_weight must be >= 0")


def _spans(extent: int, n: int, overlap: float) -> list[tuple[int, int]]:
    size = extent / (n - (n - 1) * overlap)
    if size < 1.0:
        raise InvalidGrid(f"tile extent {size:.3f} px is below 1 px")
    stride = size * (1.0 - overlap)
    spans = []
    for i in range(n):
        lo = int(round(i * stride))
        hi = extent if i == n - 1 else int(round(i * stride + size))
        spans.append((lo, min(hi, extent)))
    return spans


def make_tiles(frame_w: int, frame_h: int, cols: int = 3, rows: int = 2, overlap: float = 0.25) -> TileGrid:
    """Overlapping grid covering the frame.

    Tile width is ``frame_w / (cols - (cols - 1) * overlap)`` so that ``cols``
    tiles, each overlapping its neighbour by ``overlap`` of its width, span the
    frame exactly; heights are analogous.
    """
    if cols < 1 or rows < 1:
        raise InvalidGrid("cols and rows must be >= 1")
    if not 0.0 <= overlap < 1.0:
        raise InvalidGrid("overlap must lie in [0, 1)")
    xs = _spans(frame_w, cols, overlap)
    ys = _spans(frame_h, rows, overlap)
    tiles = [Tile(BBox(x0, y0, x1, y1)) for (y0, y1) in ys for (x0, x1) in xs]
    return TileGrid(frame_w, frame_h, cols, rows, overlap, tiles)


def tile_priority(tile: Tile, cfg: SchedulerConfig) -> float:
    return tile.last_count + cfg.age_weight * tile.age


def select_tile(grid: TileGrid, cfg: SchedulerConfig = SchedulerConfig()) -> int:
    """Index of the highest-priority tile; lowest index wins ties."""
    if not grid.tiles:
        raise InvalidGrid("empty tile grid")
    best, best_p = 0, -math.inf
    for i, t in enumerate(grid.tiles):
        p = tile_priority(t, cfg)
        if p > best_p:
            best, best_p = i, p
    return best


def nms(dets: Sequence[Detection], iou_thresh: float) -> list[Detection]:
    """Greedy class-aware suppression, highest confidence first."""
    order = sorted(dets, key=lambda d: (-d.confidence, d.box.x_tl, d.box.y_tl))
    kept: list[Detection] = []
    for d in order:
        if all(k.class_id != d.class_id or iou(k.box, d.box) <= iou_thresh for k in kept):
            kept.append(d)
    return kept


def merge_detections(
    per_tile: Sequence[tuple[BBox, Sequence[Detection]]], cfg: SchedulerConfig = SchedulerConfig()
) -> list[Detection]:
    """Shift tile-local detections into the frame, drop low confidence, suppress duplicates."""
    frame_dets = []
    for rect, dets in per_tile:
        for d in dets:
            if d.confidence < cfg.conf_min:
                continue
            frame_dets.append(Detection(d.box.translate(rect.x_tl, rect.y_tl), d.class_id, d.confidence))
    return nms(frame_dets, cfg.nms_iou)
