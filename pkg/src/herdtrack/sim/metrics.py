from __future__ import annotations

import numpy as np

from herdtrack.errors import LengthMismatch


def trajectory_match(uav_traj, gt_traj, margin: float = 1.0) -> float:
    """Fraction of aligned samples whose planar distance is within ``margin``.

    Samples with a non-finite coordinate on either side count as misses.
    """
    a = np.asarray(uav_traj, dtype=float).reshape(len(uav_traj), -1)
    b = np.asarray(gt_traj, dtype=float).reshape(len(gt_traj), -1)
    if len(a) != len(b):
        raise LengthMismatch(f"trajectories differ in length: {len(a)} vs {len(b)}")
    if len(a) == 0:
        return 0.0
    d = np.hypot(a[:, 0] - b[:, 0], a[:, 1] - b[:, 1])
    ok = np.isfinite(d) & (d <= margin)
    return float(ok.mean())
