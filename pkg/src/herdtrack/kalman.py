"""Constant-velocity Kalman filter over the two box corners.

State layout: ``(x_tl, y_tl, x_br, y_br, vx_tl, vy_tl, vx_br, vy_br)`` in
pixels and pixels per frame. Only the four corner positions are measured.

Prediction couples the corners: each corner moves with a blend of its own
velocity (weight ``lam``) and the opposite corner's velocity (weight
``1 - lam``), which stops the box from drifting away from its true size
when the two corners receive inconsistent velocity estimates.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from herdtrack.errors import SingularInnovation
from herdtrack.geometry import BBox, apply_homography, homography_jacobian

H_MEAS = np.hstack([np.eye(4), np.zeros((4, 4))])

# Swaps tl <-> br along x (positions and velocities) and along y.
_SWAP_X = np.array([2, 1, 0, 3, 6, 5, 4, 7])
_SWAP_Y = np.array([0, 3, 2, 1, 4, 7, 6, 5])


@dataclass(frozen=True)
class KalmanConfig:
    lam: float = 0.6
    dt: float = 1.0
    q_pos: float = 1.0
    q_vel: float = 0.25
    r_meas: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if min(self.q_pos, self.q_vel, self.r_meas) <= 0:
            raise ValueError("noise parameters must be positive")


@dataclass(frozen=True)
class KalmanState:
    x: np.ndarray
    P: np.ndarray

    @property
    def box(self) -> BBox:
        return BBox.from_array(self.x[:4])


@dataclass(frozen=True)
class MeasurementProjection:
    z_hat: np.ndarray
    S: np.ndarray


def transition_matrix(cfg: KalmanConfig) -> np.ndarray:
    lam, dt = cfg.lam, cfg.dt
    F = np.eye(8)
    # position i is driven by own velocity (i + 4) and the opposite corner's (partner + 4)
    for i, partner in ((0, 2), (1, 3), (2, 0), (3, 1)):
        F[i, i + 4] = lam * dt
        F[i, partner + 4] = (1.0 - lam) * dt
    return F


def process_noise(cfg: KalmanConfig) -> np.ndarray:
    return np.diag([cfg.q_pos] * 4 + [cfg.q_vel] * 4) * cfg.dt


def initiate(box: BBox, cfg: KalmanConfig) -> KalmanState:
    """Fresh track state from a first detection: zero velocity, wide prior."""
    x = np.concatenate([box.as_array(), np.zeros(4)])
    P = np.diag([10.0 * cfg.r_meas] * 4 + [100.0 * cfg.q_vel] * 4)
    return KalmanState(x, P)


def _symmetrize(P):
    return 0.5 * (P + P.T)


def _reorder(state: KalmanState) -> KalmanState:
    """Swap corner roles if the mean has crossed over, so tl <= br holds."""
    x, P = state.x, state.P
    if x[0] > x[2]:
        x, P = x[_SWAP_X], P[np.ix_(_SWAP_X, _SWAP_X)]
    if x[1] > x[3]:
        x, P = x[_SWAP_Y], P[np.ix_(_SWAP_Y, _SWAP_Y)]
    if x is state.x:
        return state
    return KalmanState(x, P)


def predict(state: KalmanState, cfg: KalmanConfig) -> KalmanState:
    F = transition_matrix(cfg)
    x = F @ state.x
    P = _symmetrize(F @ state.P @ F.T + process_noise(cfg))
    return _reorder(KalmanState(x, P))


def project(state: KalmanState, cfg: KalmanConfig) -> MeasurementProjection:
    z_hat = state.x[:4].copy()
    S = state.P[:4, :4] + cfg.r_meas * np.eye(4)
    return MeasurementProjection(z_hat, S)


def update(state: KalmanState, z: BBox, cfg: KalmanConfig) -> KalmanState:
    """Kalman correction with the box corners as measurement (Joseph form)."""
    proj = project(state, cfg)
    PHt = state.P[:, :4]
    try:
        K = np.linalg.solve(proj.S, PHt.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation(str(exc)) from exc
    if not np.all(np.isfinite(K)):
        raise SingularInnovation("non-finite Kalman gain")
    resid = z.as_array() - proj.z_hat
    x = state.x + K @ resid
    IKH = np.eye(8) - K @ H_MEAS
    P = IKH @ state.P @ IKH.T + cfg.r_meas * (K @ K.T)
    return _reorder(KalmanState(x, _symmetrize(P)))


def apply_camera_motion(state: KalmanState, h: np.ndarray) -> KalmanState:
    """Re-express a state in the next frame's pixels given the camera homography.

    Corners are mapped through ``h``; each corner's velocity and the covariance
    are carried by the local Jacobian of ``h`` at that corner.
    """
    x = state.x
    corners = apply_homography(h, [[x[0], x[1]], [x[2], x[3]]])
    j_tl = homography_jacobian(h, x[0], x[1])
    j_br = homography_jacobian(h, x[2], x[3])
    J = np.zeros((8, 8))
    J[0:2, 0:2] = j_tl
    J[2:4, 2:4] = j_br
    J[4:6, 4:6] = j_tl
    J[6:8, 6:8] = j_br
    new_x = np.concatenate([corners[0], corners[1], j_tl @ x[4:6], j_br @ x[6:8]])
    P = _symmetrize(J @ state.P @ J.T)
    return _reorder(KalmanState(new_x, P))
