"""Score a track stream against a ground-truth stream of the same format."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from herdtrack.association import solve_assignment
from herdtrack.errors import FrameMisalignment
from herdtrack.geometry import iou
from herdtrack.pipeline import FrameResult, TrackStatus
from herdtrack.streams import parse_track_record

_FORBIDDEN = 1e6


@dataclass
class EvalMetrics:
    frames: int
    gt_instances: int
    iou_fraction: float  # share of ground-truth instances covered at IOU >= threshold
    mean_iou: float
    id_switches: int
    iou_threshold: float = 0.5
    per_frame_iou: list[tuple[int, int, float]] = field(default_factory=list)  # (frame, gt id, iou)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_frame_iou"] = [[f, g, round(v, 4)] for f, g, v in self.per_frame_iou]
        return d


def read_records(lines: Iterable[str]) -> list[FrameResult]:
    return [parse_track_record(line) for line in lines if line.strip()]


def _match_frame(gt: FrameResult, out: FrameResult, confirmed_only: bool) -> dict[int, tuple[int, float]]:
    """Ground-truth id -> (track id, iou), one-to-one, maximising overlap."""
    tracks = [t for t in out.tracks if not confirmed_only or t.status is TrackStatus.CONFIRMED]
    if not gt.tracks or not tracks:
        return {}
    overlap = np.array([[iou(g.box, t.box) for t in tracks] for g in gt.tracks])
    cost = np.where(overlap > 0, 1.0 - overlap, _FORBIDDEN)
    pairs = solve_assignment(cost, large_cost=_FORBIDDEN)
    return {gt.tracks[i].id: (tracks[j].id, float(overlap[i, j])) for i, j in pairs}


def evaluate(
    tracks: list[FrameResult],
    ground_truth: list[FrameResult],
    iou_threshold: float = 0.5,
    confirmed_only: bool = False,
) -> EvalMetrics:
    """Per-frame IOU, coverage fraction, and ID switches.

    An empty ``tracks`` list is read as "no output on any frame". Otherwise
    both streams must list the same frame indices in the same order.
    """
    if not tracks:
        tracks = [FrameResult(g.frame_index, [], False) for g in ground_truth]
    got = [r.frame_index for r in tracks]
    want = [g.frame_index for g in ground_truth]
    if got != want:
        bad = next((i for i, (a, b) in enumerate(zip(got, want)) if a != b), min(len(got), len(want)))
        raise FrameMisalignment(
            f"track and ground-truth streams diverge at record {bad} "
            f"({len(got)} vs {len(want)} records)"
        )

    per_frame = []
    covered = 0
    switches = 0
    last_track: dict[int, int] = {}
    for out, gt in zip(tracks, ground_truth):
        matched = _match_frame(gt, out, confirmed_only)
        for g in gt.tracks:
            tid, v = matched.get(g.id, (None, 0.0))
            per_frame.append((gt.frame_index, g.id, v))
            if v >= iou_threshold:
                covered += 1
                if g.id in last_track and last_track[g.id] != tid:
                    switches += 1
                last_track[g.id] = tid
    n = len(per_frame)
    return EvalMetrics(
        frames=len(ground_truth),
        gt_instances=n,
        iou_fraction=covered / n if n else 0.0,
        mean_iou=float(np.mean([v for _, _, v in per_frame])) if n else 0.0,
        id_switches=switches,
        iou_threshold=iou_threshold,
        per_frame_iou=per_frame,
    )


def evaluate_files(track_path, gt_path, **kwargs) -> EvalMetrics:
    with open(track_path) as f:
        tracks = read_records(f)
    with open(gt_path) as f:
        gt = read_records(f)
    return evaluate(tracks, gt, **kwargs)
