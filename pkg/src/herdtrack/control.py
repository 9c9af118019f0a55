"""Visual-servoing PID: image-space box errors to yaw / roll / pitch rate commands.

Sign conventions: positive yaw turns right, positive roll moves right,
positive pitch is nose-up (the vehicle backs away). A target right of centre
(``dx > 0``) therefore yields non-negative yaw and roll; a target low in the
frame or larger than the reference (too close) yields positive pitch.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from herdtrack.geometry import BBox


@dataclass(frozen=True)
class ControlError:
    dx: float
    dy: float
    dA: float


@dataclass(frozen=True)
class ChannelGains:
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0

    def __post_init__(self):
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("gains must be non-negative")


@dataclass(frozen=True)
class PIDGains:
    yaw: ChannelGains = field(default_factory=ChannelGains)
    roll: ChannelGains = field(default_factory=ChannelGains)
    pitch: ChannelGains = field(default_factory=ChannelGains)
    w_y: float = 1.0
    w_area: float = 0.01
    integral_limit: float = 20.0
    output_limit: float = 45.0

    def __post_init__(self):
        if self.integral_limit <= 0 or self.output_limit <= 0:
            raise ValueError("limits must be positive")


@dataclass(frozen=True)
class ChannelState:
    integral: float = 0.0  # accumulated ki * e * dt, already clamped
    prev_error: float = 0.0


@dataclass(frozen=True)
class ControllerState:
    yaw: ChannelState = field(default_factory=ChannelState)
    roll: ChannelState = field(default_factory=ChannelState)
    pitch: ChannelState = field(default_factory=ChannelState)


@dataclass(frozen=True)
class ControlCommand:
    yaw_rate: float = 0.0
    roll_rate: float = 0.0
    pitch_rate: float = 0.0


def compute_errors(box: BBox, frame_w: float, frame_h: float, ref_area: float) -> ControlError:
    cx, cy = box.center
    return ControlError(cx - frame_w / 2.0, cy - frame_h / 2.0, box.area - ref_area)


def _clamp(v, lim):
    return max(-lim, min(lim, v))


def _channel(e: float, st: ChannelState, g: ChannelGains, gains: PIDGains, dt: float) -> tuple[float, ChannelState]:
    integral = _clamp(st.integral + g.ki * e * dt, gains.integral_limit)
    deriv = (e - st.prev_error) / dt
    u = g.kp * e + integral + g.kd * deriv
    return _clamp(u, gains.output_limit), ChannelState(integral, e)


def pid_step(
    err: ControlError, state: ControllerState, gains: PIDGains, dt: float
) -> tuple[ControlCommand, ControllerState]:
    """One controller tick. ``dx`` drives yaw and roll; ``w_y*dy + w_area*dA`` drives pitch."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    e_pitch = gains.w_y * err.dy + gains.w_area * err.dA
    yaw, ys = _channel(err.dx, state.yaw, gains.yaw, gains, dt)
    roll, rs = _channel(err.dx, state.roll, gains.roll, gains, dt)
    pitch, ps = _channel(e_pitch, state.pitch, gains.pitch, gains, dt)
    return ControlCommand(yaw, roll, pitch), ControllerState(ys, rs, ps)
