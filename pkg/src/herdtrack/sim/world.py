"""World state, geofence wake-up, and the mission phase machine."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from herdtrack.control import ControlCommand
from herdtrack.sim.camera import heading_vectors
from herdtrack.sim.scenario import ScenarioConfig


class MissionPhase(str, enum.Enum):
    IDLE = "idle"
    NAVIGATE = "navigate"
    TRACK = "track"
    HERD = "herd"
    RETURN = "return"


NEXT_PHASE = {
    MissionPhase.IDLE: MissionPhase.NAVIGATE,
    MissionPhase.NAVIGATE: MissionPhase.TRACK,
    MissionPhase.TRACK: MissionPhase.HERD,
    MissionPhase.HERD: MissionPhase.RETURN,
    MissionPhase.RETURN: MissionPhase.IDLE,
}

CAMERA_PHASES = (MissionPhase.TRACK, MissionPhase.HERD)


@dataclass(frozen=True)
class WorldState:
    t: float
    elephant_pos: np.ndarray  # (3,), z == 0
    elephant_vel: np.ndarray
    elephant_heading: float
    uav_pos: np.ndarray
    uav_vel: np.ndarray
    uav_yaw: float  # heading, rad, counter-clockwise from +x
    base_pos: np.ndarray
    tag_awake: bool = False
    phase: MissionPhase = MissionPhase.IDLE


def planar_distance(a, b) -> float:
    return float(math.hypot(a[0] - b[0], a[1] - b[1]))


def geofence_check(elephant_pos, base_pos, radius: float) -> bool:
    """True when the tag is inside the base station's range (boundary inclusive)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return planar_distance(elephant_pos, base_pos) <= radius


def initial_state(cfg: ScenarioConfig) -> WorldState:
    e = np.array([cfg.elephant.start[0], cfg.elephant.start[1], 0.0])
    base = np.array(cfg.base, dtype=float)
    to_target = np.array([cfg.elephant.walk_target[0] - e[0], cfg.elephant.walk_target[1] - e[1]])
    heading = math.atan2(to_target[1], to_target[0]) if np.any(to_target) else 0.0
    to_elephant = e[:2] - base[:2]
    yaw = math.atan2(to_elephant[1], to_elephant[0]) if np.any(to_elephant) else 0.0
    return WorldState(
        t=0.0,
        elephant_pos=e,
        elephant_vel=np.zeros(3),
        elephant_heading=heading,
        uav_pos=base.copy(),
        uav_vel=np.zeros(3),
        uav_yaw=yaw,
        base_pos=base,
    )


def _wrap(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


def _toward(pos, target, speed, dt) -> np.ndarray:
    """Planar velocity that moves ``pos`` toward ``target`` without overshooting."""
    d = np.array([target[0] - pos[0], target[1] - pos[1], 0.0])
    dist = float(np.hypot(d[0], d[1]))
    if dist < 1e-9:
        return np.zeros(3)
    return d / dist * min(speed, dist / dt)


def _elephant_velocity(state: WorldState, cfg: ScenarioConfig, dt: float) -> np.ndarray:
    ec = cfg.elephant
    if state.phase is MissionPhase.HERD:
        if planar_distance(state.uav_pos, state.elephant_pos) <= cfg.herd_radius:
            away = state.elephant_pos[:2] - state.uav_pos[:2]
            n = float(np.hypot(*away))
            if n > 1e-9:
                return np.array([away[0] / n, away[1] / n, 0.0]) * ec.flee_speed
        return np.zeros(3)
    if state.phase is MissionPhase.RETURN:
        return np.zeros(3)
    return _toward(state.elephant_pos, ec.walk_target, ec.walk_speed, dt)


def _servo_velocity(state: WorldState, cmd: ControlCommand, cfg: ScenarioConfig) -> tuple[np.ndarray, float]:
    """Body-rate commands to a world-frame velocity target and new heading rate."""
    u = cfg.uav
    fwd, right = heading_vectors(state.uav_yaw)
    v = (-cmd.pitch_rate * fwd + cmd.roll_rate * right) * u.cmd_speed_gain
    speed = float(np.hypot(v[0], v[1]))
    if speed > u.max_speed:
        v = v * (u.max_speed / speed)
    return v, -math.radians(cmd.yaw_rate)


def step_world(
    state: WorldState, cmd: ControlCommand, cfg: ScenarioConfig, dt: float, target_confirmed: bool = False
) -> WorldState:
    """Advance the world by ``dt`` seconds.

    ``cmd`` steers the UAV only in the camera phases; navigation and return
    legs fly themselves. ``target_confirmed`` reports whether the tracker
    currently holds a confirmed track.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    u = cfg.uav
    phase = state.phase
    awake = geofence_check(state.elephant_pos, state.base_pos, cfg.geofence_radius)

    e_vel = _elephant_velocity(state, cfg, dt)
    e_pos = state.elephant_pos + e_vel * dt
    e_pos[2] = 0.0
    e_heading = math.atan2(e_vel[1], e_vel[0]) if np.hypot(e_vel[0], e_vel[1]) > 1e-9 else state.elephant_heading

    pos = state.uav_pos.copy()
    vel = state.uav_vel.copy()
    yaw = state.uav_yaw

    if phase is MissionPhase.IDLE:
        vel = np.zeros(3)
    elif phase is MissionPhase.NAVIGATE:
        rel = state.elephant_pos[:2] - pos[:2]
        dist = float(np.hypot(*rel))
        bearing = math.atan2(rel[1], rel[0]) if dist > 1e-9 else yaw
        max_turn = math.radians(u.max_turn_rate) * dt
        yaw = _wrap(yaw + max(-max_turn, min(max_turn, _wrap(bearing - yaw))))
        if dist > cfg.standoff:
            aim = state.elephant_pos[:2] - rel / dist * cfg.standoff
        else:
            aim = pos[:2]
        vel = _toward(pos, aim, u.nav_speed, dt)
        climb = max(-u.climb_rate, min(u.climb_rate, (u.cruise_altitude - pos[2]) / dt))
        vel[2] = climb
        pos = pos + vel * dt
    elif phase in CAMERA_PHASES:
        v_cmd, yaw_rate = _servo_velocity(state, cmd, cfg)
        alpha = min(1.0, dt / u.velocity_tau) if u.velocity_tau > 0 else 1.0
        vel = vel + (v_cmd - vel) * alpha
        # altitude hold belongs to the flight controller, not the visual servo
        vel[2] = max(-u.climb_rate, min(u.climb_rate, (u.cruise_altitude - pos[2]) / dt))
        pos = pos + vel * dt
        yaw = _wrap(yaw + yaw_rate * dt)
    elif phase is MissionPhase.RETURN:
        horiz = planar_distance(pos, state.base_pos)
        vel = _toward(pos, state.base_pos, u.nav_speed, dt)
        vel[2] = 0.0
        if horiz <= cfg.waypoint_tolerance:
            vel[2] = -min(u.climb_rate, pos[2] / dt)
        pos = pos + vel * dt
        if horiz > 1e-9:
            yaw = math.atan2(state.base_pos[1] - pos[1], state.base_pos[0] - pos[0]) if horiz > cfg.waypoint_tolerance else yaw
    pos[2] = max(pos[2], 0.0)

    # phase transitions, at most one per step
    if phase is MissionPhase.IDLE and awake:
        phase = MissionPhase.NAVIGATE
    elif phase is MissionPhase.NAVIGATE and planar_distance(pos, e_pos) <= cfg.camera_handoff_distance:
        phase = MissionPhase.TRACK
    elif phase is MissionPhase.TRACK and target_confirmed:
        phase = MissionPhase.HERD
    elif phase is MissionPhase.HERD and planar_distance(e_pos, state.base_pos) > cfg.geofence_radius + cfg.herd_exit_margin:
        phase = MissionPhase.RETURN
    elif phase is MissionPhase.RETURN and planar_distance(pos, state.base_pos) <= cfg.waypoint_tolerance and pos[2] <= 1e-6:
        phase = MissionPhase.IDLE
        vel = np.zeros(3)

    return replace(
        state,
        t=state.t + dt,
        elephant_pos=e_pos,
        elephant_vel=e_vel,
        elephant_heading=e_heading,
        uav_pos=pos,
        uav_vel=vel,
        uav_yaw=yaw,
        tag_awake=awake,
        phase=phase,
    )
