"""The unrolled tracker loop.

Every frame: camera-motion compensation, per-track flow propagation, Kalman
predict/correct. Every ``detect_every_n`` frames (starting at
``detect_offset``): one detector tile, association, new-track registration,
and lifecycle bookkeeping.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from herdtrack import kalman
from herdtrack.association import AssociationConfig, associate
from herdtrack.detection import Detection, Detector, SchedulerConfig, make_tiles, merge_detections, select_tile
from herdtrack.errors import (
    DegenerateBox,
    DegenerateConfiguration,
    OutOfOrderFrame,
    ProjectiveDegeneracy,
    SingularInnovation,
)
from herdtrack.flow import (
    FeatureMatcher,
    SampleSpec,
    background_points,
    estimate_camera_motion,
    propagate_track,
    sample_points,
)
from herdtrack.geometry import BBox
from herdtrack.kalman import KalmanConfig, KalmanState

log = logging.getLogger(__name__)

MIN_FLOW_MATCHES = 3


class TrackStatus(str, enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    DELETED = "deleted"


@dataclass(frozen=True)
class Track:
    id: int
    state: KalmanState
    class_id: int = 0
    hits: int = 1
    misses: int = 0
    status: TrackStatus = TrackStatus.TENTATIVE

    @property
    def box(self) -> BBox:
        return self.state.box


@dataclass(frozen=True)
class TrackOutput:
    id: int
    box: BBox
    class_id: int
    status: TrackStatus


@dataclass(frozen=True)
class FrameResult:
    frame_index: int
    tracks: list[TrackOutput]
    detector_ran: bool
    tile_processed: int | None = None


@dataclass(frozen=True)
class PipelineConfig:
    frame_w: int = 1280
    frame_h: int = 720
    detect_every_n: int = 3
    detect_offset: int = 1
    confirm_hits: int = 3
    max_misses: int = 30
    tile_cols: int = 3
    tile_rows: int = 2
    tile_overlap: float = 0.25
    background_cols: int = 16
    background_rows: int = 9
    background_dilation: float = 0.1
    # share of a track's box that must lie in the processed tile for an
    # unmatched slot to count as a miss (a tile cannot report what it cuts off)
    miss_coverage: float = 0.5
    kalman: KalmanConfig = field(default_factory=KalmanConfig)
    association: AssociationConfig = field(default_factory=AssociationConfig)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    sample: SampleSpec = field(default_factory=SampleSpec)

    def __post_init__(self):
        if self.detect_every_n < 1:
            raise ValueError("detect_every_n must be >= 1")
        if self.confirm_hits < 1 or self.max_misses < 1:
            raise ValueError("confirm_hits and max_misses must be >= 1")
        if not 0.0 < self.miss_coverage <= 1.0:
            raise ValueError("miss_coverage must lie in (0, 1]")

    def is_detector_slot(self, frame_index: int) -> bool:
        return frame_index >= self.detect_offset and (frame_index - self.detect_offset) % self.detect_every_n == 0


def lifecycle_update(track: Track, matched_this_slot: bool, detector_ran: bool, cfg: PipelineConfig) -> Track:
    """Advance hit/miss counters on detector slots and apply status transitions.

    ``detector_ran`` should be true only when the detector actually looked at
    the track's region this frame.
    """
    if not detector_ran:
        return track
    if matched_this_slot:
        hits, misses = track.hits + 1, 0
    else:
        hits, misses = 0, track.misses + 1
    status = track.status
    if status is TrackStatus.TENTATIVE and hits >= cfg.confirm_hits:
        status = TrackStatus.CONFIRMED
    if misses >= cfg.max_misses:
        status = TrackStatus.DELETED
    return replace(track, hits=hits, misses=misses, status=status)


def _coverage(box: BBox, rect: BBox) -> float:
    inter = box.intersect(rect)
    if inter is None or box.area <= 0:
        return 0.0
    return inter.area / box.area


class TrackerPipeline:
    """Single-owner tracker for one video stream."""

    def __init__(self, cfg: PipelineConfig, matcher: FeatureMatcher, detector: Detector):
        self.cfg = cfg
        self.matcher = matcher
        self.detector = detector
        self.grid = make_tiles(cfg.frame_w, cfg.frame_h, cfg.tile_cols, cfg.tile_rows, cfg.tile_overlap)
        self.tracks: list[Track] = []
        self.next_id = 1
        self.last_frame: int | None = None
        self.detector_calls = 0
        self.created = 0
        self.confirmed = 0
        self.deleted = 0

    def _flow_step(self, prev_frame, cur_frame) -> None:
        cfg = self.cfg
        prev_boxes = [t.box for t in self.tracks]
        bg = background_points(
            cfg.frame_w, cfg.frame_h, prev_boxes, cfg.background_cols, cfg.background_rows, cfg.background_dilation
        )
        h = np.eye(3)
        if len(bg):
            dst, valid = self.matcher.match(prev_frame, cur_frame, bg)
            h, _ = estimate_camera_motion(bg[valid], dst[valid])

        updated = []
        for t, prev_box in zip(self.tracks, prev_boxes):
            state = t.state
            try:
                state = kalman.apply_camera_motion(state, h)
            except ProjectiveDegeneracy:
                pass
            measurement = None
            try:
                pts = sample_points(prev_box, cfg.sample)
                dst, valid = self.matcher.match(prev_frame, cur_frame, pts)
                if valid.sum() >= MIN_FLOW_MATCHES:
                    measurement = propagate_track(prev_box, pts[valid], dst[valid])
            except (DegenerateBox, DegenerateConfiguration):
                measurement = None
            state = kalman.predict(state, cfg.kalman)
            if measurement is not None:
                try:
                    state = kalman.update(state, measurement, cfg.kalman)
                except SingularInnovation:
                    log.warning("track %d dropped: singular innovation", t.id)
                    self.deleted += 1
                    continue
            updated.append(replace(t, state=state))
        self.tracks = updated

    def _predict_only(self) -> None:
        self.tracks = [replace(t, state=kalman.predict(t.state, self.cfg.kalman)) for t in self.tracks]

    def _detect_step(self, cur_frame) -> int | None:
        cfg = self.cfg
        idx = select_tile(self.grid, cfg.scheduler)
        rect = self.grid.tiles[idx].rect
        try:
            raw = self.detector.detect(cur_frame, rect)
        except Exception:  # detector failures only cost this slot
            log.exception("detector failed on tile %d; tracking only this slot", idx)
            return None
        self.detector_calls += 1
        dets: list[Detection] = merge_detections([(rect, raw)], cfg.scheduler)
        self.grid.mark_processed(idx, len(dets))

        projections = []
        for t in self.tracks:
            projections.append((kalman.project(t.state, cfg.kalman), t.box))
        result = associate(projections, [d.box for d in dets], cfg.association)

        matched = {}
        for i, j in result.matches:
            matched[i] = j
        new_tracks = []
        for i, t in enumerate(self.tracks):
            state = t.state
            if i in matched:
                try:
                    state = kalman.update(state, dets[matched[i]].box, cfg.kalman)
                except SingularInnovation:
                    log.warning("track %d dropped: singular innovation", t.id)
                    self.deleted += 1
                    continue
            looked = i in matched or _coverage(t.box, rect) >= cfg.miss_coverage
            before = t.status
            t = lifecycle_update(replace(t, state=state), i in matched, looked, cfg)
            if before is not TrackStatus.CONFIRMED and t.status is TrackStatus.CONFIRMED:
                self.confirmed += 1
            if t.status is TrackStatus.DELETED:
                self.deleted += 1
                continue
            new_tracks.append(t)

        for j in result.unmatched_detections:
            d = dets[j]
            status = TrackStatus.CONFIRMED if cfg.confirm_hits <= 1 else TrackStatus.TENTATIVE
            new_tracks.append(Track(self.next_id, kalman.initiate(d.box, cfg.kalman), d.class_id, 1, 0, status))
            self.next_id += 1
            self.created += 1
            if status is TrackStatus.CONFIRMED:
                self.confirmed += 1
        self.tracks = new_tracks
        return idx

    def step(self, prev_frame: Any, cur_frame: Any, frame_index: int) -> FrameResult:
        if self.last_frame is not None and frame_index <= self.last_frame:
            raise OutOfOrderFrame(f"frame {frame_index} after {self.last_frame}")
        self.last_frame = frame_index

        if self.tracks:
            if prev_frame is not None:
                self._flow_step(prev_frame, cur_frame)
            else:
                self._predict_only()

        tile = None
        detector_ran = False
        if self.cfg.is_detector_slot(frame_index):
            tile = self._detect_step(cur_frame)
            detector_ran = tile is not None

        out = [TrackOutput(t.id, t.box, t.class_id, t.status) for t in sorted(self.tracks, key=lambda t: t.id)]
        return FrameResult(frame_index, out, detector_ran, tile)
