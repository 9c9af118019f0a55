"""Tracking-by-detection and visual-servoing toolkit for UAV herding, with a
deterministic closed-loop simulator."""

from herdtrack.errors import (
    ConfigError,
    DegenerateBox,
    DegenerateConfiguration,
    HerdtrackError,
    InvalidGrid,
    LengthMismatch,
    OutOfOrderFrame,
    ProjectiveDegeneracy,
    SingularInnovation,
)
from herdtrack.geometry import BBox, PointMatch, estimate_affine, estimate_homography, iou, warp_box

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "PointMatch",
    "ConfigError",
    "DegenerateBox",
    "DegenerateConfiguration",
    "HerdtrackError",
    "InvalidGrid",
    "LengthMismatch",
    "OutOfOrderFrame",
    "ProjectiveDegeneracy",
    "SingularInnovation",
    "estimate_affine",
    "estimate_homography",
    "iou",
    "warp_box",
]
