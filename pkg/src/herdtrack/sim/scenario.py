"""Scenario files: nested YAML mapped onto frozen dataclasses.

Every key is checked against the dataclass schema so that a typo or a
wrongly typed value fails loudly with the dotted path of the offending key.
"""
from __future__ import annotations

import dataclasses
import types
import typing
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from herdtrack.association import AssociationConfig
from herdtrack.control import ChannelGains, PIDGains
from herdtrack.detection import SchedulerConfig
from herdtrack.errors import ConfigError
from herdtrack.flow import SampleSpec
from herdtrack.kalman import KalmanConfig
from herdtrack.pipeline import PipelineConfig
from herdtrack.sim.camera import CameraModel
from herdtrack.sim.sensors import NoiseConfig


@dataclass(frozen=True)
class UavConfig:
    cruise_altitude: float = 20.0  # m
    climb_rate: float = 4.0  # m/s
    nav_speed: float = 8.0  # m/s, waypoint navigation
    max_speed: float = 6.0  # m/s, under visual servoing
    max_turn_rate: float = 90.0  # deg/s, waypoint navigation
    cmd_speed_gain: float = 0.1  # m/s of body velocity per deg/s of pitch/roll command
    velocity_tau: float = 0.3  # s, first-order response to commanded velocity


@dataclass(frozen=True)
class ElephantConfig:
    start: tuple[float, float] = (110.0, 0.0)
    walk_target: tuple[float, float] = (0.0, 0.0)
    walk_speed: float = 1.0  # m/s
    flee_speed: float = 1.5  # m/s
    size: tuple[float, float, float] = (4.0, 2.0, 3.0)  # length, width, height in m


@dataclass(frozen=True)
class ControlConfig:
    gains: PIDGains = field(default_factory=PIDGains)
    ref_area: float | None = None  # px^2; None renders the animal at the standoff point


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "unnamed"
    seed: int = 42
    fps: float = 30.0
    duration: float = 60.0  # s
    base: tuple[float, float, float] = (0.0, 0.0, 0.0)
    geofence_radius: float = 100.0  # m
    waypoint_tolerance: float = 1.0  # m
    camera_handoff_distance: float = 40.0  # m
    herd_radius: float = 45.0  # m; the animal flees while the UAV is this close
    herd_exit_margin: float = 10.0  # m beyond the geofence
    standoff: float = 35.0  # m, planar distance kept behind the animal
    match_margin: float = 1.0  # m, trajectory-match radius
    uav: UavConfig = field(default_factory=UavConfig)
    elephant: ElephantConfig = field(default_factory=ElephantConfig)
    camera: CameraModel = field(default_factory=CameraModel)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    control: ControlConfig = field(default_factory=ControlConfig)

    def __post_init__(self):
        if self.geofence_radius <= 0:
            raise ValueError("geofence_radius must be positive")
        for name in ("waypoint_tolerance", "camera_handoff_distance", "herd_exit_margin", "standoff", "fps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def dt(self) -> float:
        return 1.0 / self.fps


def _convert(tp, value, path: str):
    origin = typing.get_origin(tp)
    if dataclasses.is_dataclass(tp):
        return build(tp, value, path)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _convert(inner[0], value, path)
    if origin is tuple:
        args = typing.get_args(tp)
        if not isinstance(value, (list, tuple)) or len(value) != len(args):
            raise ConfigError(f"{path}: expected a list of {len(args)} values", path)
        return tuple(_convert(a, v, f"{path}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}", path)
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}", path)
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}", path)
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}", path)
        return value
    raise ConfigError(f"{path}: unsupported field type {tp}", path)


def build(cls, data: Any, path: str = ""):
    """Instantiate dataclass ``cls`` from a nested mapping, validating every key."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected a mapping", path or None)
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else str(key)
        if key not in names:
            raise ConfigError(f"unknown key '{sub}'", sub)
        kwargs[key] = _convert(hints[key], value, sub)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or '<root>'}: {exc}", path or None) from exc


def to_dict(obj) -> Any:
    if dataclasses.is_dataclass(obj):
        return {f.name: to_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [to_dict(v) for v in obj]
    return obj


def load_scenario(path: str | Path, seed: int | None = None) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc.strerror}", str(path)) from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: malformed YAML: {exc}", str(path)) from exc
    cfg = build(ScenarioConfig, data)
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    return cfg


def builtin_scenario_path(name: str = "nominal") -> Path:
    return Path(str(resources.files("herdtrack") / "scenarios" / f"{name}.yaml"))


# re-exported so scenario files and callers share one vocabulary
__all__ = [
    "AssociationConfig",
    "CameraModel",
    "ChannelGains",
    "ControlConfig",
    "ElephantConfig",
    "KalmanConfig",
    "NoiseConfig",
    "PIDGains",
    "PipelineConfig",
    "SampleSpec",
    "ScenarioConfig",
    "SchedulerConfig",
    "UavConfig",
    "build",
    "builtin_scenario_path",
    "load_scenario",
    "to_dict",
]
