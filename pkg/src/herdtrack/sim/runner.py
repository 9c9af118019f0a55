"""Closed-loop mission: world, synthetic sensors, tracker, and controller in lockstep."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from herdtrack.control import ControlCommand, ControllerState, compute_errors, pid_step
from herdtrack.geometry import BBox, iou
from herdtrack.pipeline import FrameResult, TrackerPipeline, TrackOutput, TrackStatus
from herdtrack.sim.camera import auto_tilt, camera_pose, heading_vectors, ray_to_ground
from herdtrack.sim.metrics import trajectory_match
from herdtrack.sim.scenario import ScenarioConfig
from herdtrack.sim.sensors import SimFrame, SyntheticDetector, SyntheticMatcher, render_ground_truth
from herdtrack.sim.world import CAMERA_PHASES, MissionPhase, WorldState, initial_state, step_world
from herdtrack.streams import format_command_record, format_track_record, select_target

ELEPHANT_ID = 1


@dataclass
class RunReport:
    scenario: str
    seed: int
    frames: int
    tracked_frames: int
    detector_invocations: int
    tracks_created: int
    tracks_confirmed: int
    tracks_deleted: int
    trajectory_match: float
    mean_track_iou: float
    throughput_fps: float
    final_phase: str


@dataclass
class TrackedFrame:
    index: int  # pipeline frame index
    t: float
    phase: MissionPhase
    gt_box: BBox | None
    target: TrackOutput | None
    gt_ground: tuple[float, float]  # target box centre cast to the ground (NaN when no target)
    uav_aim: tuple[float, float]  # UAV position pushed forward by the standoff


@dataclass
class RunResult:
    report: RunReport
    trajectory_rows: list[tuple] = field(default_factory=list)  # (t, ex, ey, ux, uy, phase)
    track_lines: list[str] = field(default_factory=list)
    command_lines: list[str] = field(default_factory=list)
    gt_lines: list[str] = field(default_factory=list)
    tracked: list[TrackedFrame] = field(default_factory=list)
    results: list[FrameResult] = field(default_factory=list)


def camera_tilt(cfg: ScenarioConfig) -> float:
    if cfg.camera.tilt_deg is not None:
        return cfg.camera.tilt_deg
    return auto_tilt(cfg.uav.cruise_altitude, cfg.standoff)


def reference_area(cfg: ScenarioConfig) -> float:
    """Box area of the animal seen from behind at the standoff point, unless configured."""
    if cfg.control.ref_area is not None:
        return cfg.control.ref_area
    fwd, _ = heading_vectors(0.0)
    pose = camera_pose([0.0, 0.0, cfg.uav.cruise_altitude], 0.0, camera_tilt(cfg))
    box, visible = render_ground_truth(fwd[:2] * cfg.standoff, 0.0, cfg.elephant.size, cfg.camera, pose)
    if not visible:
        raise ValueError("animal at the standoff point is not visible; check camera settings")
    return box.area


def make_frame(state: WorldState, cfg: ScenarioConfig, index: int, tilt: float) -> SimFrame:
    pose = camera_pose(state.uav_pos, state.uav_yaw, tilt)
    box, visible = render_ground_truth(
        state.elephant_pos[:2], state.elephant_heading, cfg.elephant.size, cfg.camera, pose
    )
    objects = {ELEPHANT_ID: box} if visible else {}
    return SimFrame(index, cfg.camera, pose, objects)


def run_closed_loop(cfg: ScenarioConfig, max_frames: int | None = None) -> RunResult:
    dt = cfg.dt
    n_frames = int(round(cfg.duration * cfg.fps))
    if max_frames is not None:
        n_frames = min(n_frames, max_frames)
    tilt = camera_tilt(cfg)
    ref_area = reference_area(cfg)
    W, H = cfg.camera.width, cfg.camera.height

    state = initial_state(cfg)
    pipeline: TrackerPipeline | None = None
    prev_frame: SimFrame | None = None
    ctrl_state = ControllerState()
    target_id: int | None = None
    pipe_index = 0
    pipe_seconds = 0.0
    seen_return = False

    out = RunResult(report=None)  # type: ignore[arg-type]
    totals = dict(calls=0, created=0, confirmed=0, deleted=0)

    def retire(p: TrackerPipeline | None):
        if p is not None:
            totals["calls"] += p.detector_calls
            totals["created"] += p.created
            totals["confirmed"] += p.confirmed
            totals["deleted"] += p.deleted

    frames_run = 0
    for _ in range(n_frames):
        frames_run += 1
        out.trajectory_rows.append(
            (state.t, state.elephant_pos[0], state.elephant_pos[1], state.uav_pos[0], state.uav_pos[1], state.phase.value)
        )
        cmd = ControlCommand()
        confirmed = False
        if state.phase in CAMERA_PHASES:
            if pipeline is None:
                pipeline = TrackerPipeline(
                    cfg.pipeline,
                    SyntheticMatcher(cfg.noise, cfg.seed),
                    SyntheticDetector(cfg.noise, cfg.seed),
                )
                prev_frame, pipe_index, target_id, ctrl_state = None, 0, None, ControllerState()
            pipe_index += 1
            frame = make_frame(state, cfg, pipe_index, tilt)
            t0 = time.perf_counter()
            res = pipeline.step(prev_frame, frame, pipe_index)
            pipe_seconds += time.perf_counter() - t0
            out.results.append(res)
            out.track_lines.append(format_track_record(res))
            gt_box = frame.objects.get(ELEPHANT_ID)
            gt_tracks = [TrackOutput(ELEPHANT_ID, gt_box, 0, TrackStatus.CONFIRMED)] if gt_box is not None else []
            out.gt_lines.append(format_track_record(FrameResult(pipe_index, gt_tracks, False)))

            target = select_target(res.tracks, target_id)
            if target is None:
                target_id, ctrl_state = None, ControllerState()
                ground = (math.nan, math.nan)
            else:
                if target.id != target_id:
                    target_id, ctrl_state = target.id, ControllerState()
                err = compute_errors(target.box, W, H, ref_area)
                cmd, ctrl_state = pid_step(err, ctrl_state, cfg.control.gains, dt)
                cx, cy = target.box.center
                hit = ray_to_ground(cfg.camera, frame.pose, cx, cy)
                ground = (float(hit[0]), float(hit[1])) if hit is not None else (math.nan, math.nan)
            confirmed = any(t.status is TrackStatus.CONFIRMED for t in res.tracks)
            fwd, _ = heading_vectors(state.uav_yaw)
            aim = (state.uav_pos[0] + cfg.standoff * fwd[0], state.uav_pos[1] + cfg.standoff * fwd[1])
            out.tracked.append(TrackedFrame(pipe_index, state.t, state.phase, gt_box, target, ground, aim))
            out.command_lines.append(format_command_record(pipe_index, cmd))
            prev_frame = frame
        elif pipeline is not None:
            retire(pipeline)
            pipeline, prev_frame = None, None

        if state.phase is MissionPhase.RETURN:
            seen_return = True
        state = step_world(state, cmd, cfg, dt, target_confirmed=confirmed)
        if seen_return and state.phase is MissionPhase.IDLE:
            out.trajectory_rows.append(
                (state.t, state.elephant_pos[0], state.elephant_pos[1], state.uav_pos[0], state.uav_pos[1], state.phase.value)
            )
            break
    retire(pipeline)

    # scored while the visual servo loop is closed; a lost target is a miss
    herding = [f for f in out.tracked if f.phase is MissionPhase.HERD]
    uav = [f.uav_aim for f in herding]
    gt = [f.gt_ground for f in herding]
    match = trajectory_match(uav, gt, cfg.match_margin) if herding else 0.0
    ious = [iou(f.target.box, f.gt_box) if f.target is not None and f.gt_box is not None else 0.0 for f in out.tracked]
    out.report = RunReport(
        scenario=cfg.name,
        seed=cfg.seed,
        frames=frames_run,
        tracked_frames=len(out.tracked),
        detector_invocations=totals["calls"],
        tracks_created=totals["created"],
        tracks_confirmed=totals["confirmed"],
        tracks_deleted=totals["deleted"],
        trajectory_match=match,
        mean_track_iou=float(np.mean(ious)) if ious else 0.0,
        throughput_fps=len(out.tracked) / pipe_seconds if pipe_seconds > 0 else 0.0,
        final_phase=state.phase.value,
    )
    return out
