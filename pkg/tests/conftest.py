import numpy as np
import pytest

from herdtrack.geometry import BBox


def random_box(rng, lo=0.0, hi=1000.0, min_size=5.0) -> BBox:
    x0, y0 = rng.uniform(lo, hi - 200, 2)
    w, h = rng.uniform(min_size, 200, 2)
    return BBox(x0, y0, x0 + w, y0 + h)


def random_affine(rng, min_det=0.1) -> np.ndarray:
    """A random 2x3 affine whose linear part is comfortably invertible."""
    while True:
        A = rng.uniform(-2, 2, (2, 2))
        if abs(np.linalg.det(A)) > min_det:
            break
    t = rng.uniform(-100, 100, 2)
    return np.hstack([A, t[:, None]])


def random_homography(rng) -> np.ndarray:
    """A near-identity projective map that stays well conditioned over [0, 1000]^2."""
    h = np.eye(3)
    h[:2, :2] += rng.uniform(-0.3, 0.3, (2, 2))
    h[:2, 2] = rng.uniform(-50, 50, 2)
    h[2, :2] = rng.uniform(-2e-4, 2e-4, 2)
    return h


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
