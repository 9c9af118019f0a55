import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_affine, random_homography
from herdtrack.errors import DegenerateConfiguration, ProjectiveDegeneracy
from herdtrack.geometry import (
    BBox,
    PointMatch,
    apply_affine,
    apply_homography,
    estimate_affine,
    estimate_homography,
    homography_jacobian,
    iou,
    split_matches,
    translation_homography,
    warp_box,
)
from oracles import normal_equations_affine

coord = st.floats(-1e4, 1e4, allow_nan=False)


@st.composite
def boxes(draw, positive=False):
    x0, y0 = draw(coord), draw(coord)
    lo = 1e-3 if positive else 0.0
    w = draw(st.floats(lo, 500))
    h = draw(st.floats(lo, 500))
    return BBox(x0, y0, x0 + w, y0 + h)


# ---------------------------------------------------------------- BBox / iou


def test_bbox_rejects_inverted_corners():
    with pytest.raises(ValueError):
        BBox(10, 0, 0, 10)


def test_from_corners_normalises_order():
    assert BBox.from_corners(10, 20, 0, 5) == BBox(0, 5, 10, 20)


def test_iou_identical():
    assert iou(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10)) == 1.0


def test_iou_disjoint():
    assert iou(BBox(0, 0, 10, 10), BBox(20, 20, 30, 30)) == 0.0


def test_iou_half_shift():
    # intersection 50, union 150
    assert iou(BBox(0, 0, 10, 10), BBox(5, 0, 15, 10)) == pytest.approx(1 / 3, abs=1e-12)


def test_iou_two_degenerate_boxes_is_zero():
    assert iou(BBox(1, 1, 1, 1), BBox(1, 1, 1, 1)) == 0.0


@given(boxes(), boxes())
def test_iou_symmetric_and_bounded(a, b):
    v = iou(a, b)
    assert v == iou(b, a)
    assert 0.0 <= v <= 1.0


@given(boxes(positive=True))
def test_iou_self_is_one(a):
    assert iou(a, a) == pytest.approx(1.0, abs=1e-12)


# ------------------------------------------------------------------- affine


def test_affine_identity():
    pts = np.array([[0, 0], [10, 0], [0, 10], [7, 3]], float)
    np.testing.assert_allclose(estimate_affine(pts, pts), np.hstack([np.eye(2), np.zeros((2, 1))]), atol=1e-12)


def test_affine_scale_and_shift_from_three_points():
    src = np.array([[0, 0], [1, 0], [0, 1]], float)
    m = np.array([[2, 0, 1], [0, 2, 1]], float)
    np.testing.assert_allclose(estimate_affine(src, apply_affine(m, src)), m, atol=1e-9)


def test_affine_noisy_matches_normal_equations(rng):
    m = random_affine(rng)
    src = rng.uniform(0, 500, (20, 2))
    dst = apply_affine(m, src) + rng.normal(0, 2.0, (20, 2))
    np.testing.assert_allclose(estimate_affine(src, dst), normal_equations_affine(src, dst), atol=1e-9)


def test_affine_rejects_collinear():
    src = np.array([[0, 0], [1, 1], [2, 2], [5, 5]], float)
    with pytest.raises(DegenerateConfiguration):
        estimate_affine(src, src)


def test_affine_rejects_too_few():
    src = np.array([[0, 0], [1, 0]], float)
    with pytest.raises(DegenerateConfiguration):
        estimate_affine(src, src)


def test_affine_accepts_point_matches():
    matches = [PointMatch((0, 0), (1, 1)), PointMatch((1, 0), (2, 1)), PointMatch((0, 1), (1, 2))]
    src, dst = split_matches(matches)
    np.testing.assert_allclose(estimate_affine(src, dst), [[1, 0, 1], [0, 1, 1]], atol=1e-12)


def test_affine_recovery_random(rng):
    for _ in range(200):
        m = random_affine(rng)
        src = rng.uniform(0, 1000, (8, 2))
        np.testing.assert_allclose(estimate_affine(src, apply_affine(m, src)), m, atol=1e-9)


# --------------------------------------------------------------- homography


def _hartley(pts):
    c = pts.mean(axis=0)
    s = np.sqrt(2) / np.linalg.norm(pts - c, axis=1).mean()
    return np.array([[s, 0, -s * c[0]], [0, s, -s * c[1]], [0, 0, 1]])


def _dlt_rows(src, dst):
    rows = []
    for (x, y), (u, v) in zip(src, dst):
        rows.append([x, y, 1, 0, 0, 0, -u * x, -u * y, -u])
        rows.append([0, 0, 0, x, y, 1, -v * x, -v * y, -v])
    return np.array(rows)


def _power_iteration_homography(src, dst, iters=200):
    """SVD-free oracle: smallest eigenvector of M = A^T A by inverse iteration."""
    ts, td = _hartley(src), _hartley(dst)
    hs = np.column_stack([src, np.ones(len(src))]) @ ts.T
    hd = np.column_stack([dst, np.ones(len(dst))]) @ td.T
    A = _dlt_rows(hs[:, :2], hd[:, :2])
    M = A.T @ A
    v = np.ones(9)
    shift = 1e-12 * np.trace(M)
    for _ in range(iters):
        v = np.linalg.solve(M + shift * np.eye(9), v)
        v /= np.linalg.norm(v)
    h = np.linalg.inv(td) @ v.reshape(3, 3) @ ts
    return h / h[2, 2]


def test_homography_identity():
    pts = np.array([[0, 0], [100, 0], [100, 100], [0, 100]], float)
    np.testing.assert_allclose(estimate_homography(pts, pts), np.eye(3), atol=1e-12)


def test_homography_translation():
    pts = np.array([[0, 0], [100, 0], [100, 100], [0, 100]], float)
    np.testing.assert_allclose(estimate_homography(pts, pts + [5, 0]), translation_homography(5, 0), atol=1e-9)


def test_homography_noisy_matches_power_iteration_oracle(rng):
    h = random_homography(rng)
    src = rng.uniform(0, 1000, (12, 2))
    dst = apply_homography(h, src) + rng.normal(0, 1.0, (12, 2))
    np.testing.assert_allclose(estimate_homography(src, dst), _power_iteration_homography(src, dst), atol=1e-6)


def test_homography_rejects_three_collinear_of_four():
    src = np.array([[0, 0], [1, 1], [2, 2], [0, 5]], float)
    with pytest.raises(DegenerateConfiguration):
        estimate_homography(src, src)


def test_homography_rejects_too_few():
    src = np.array([[0, 0], [1, 0], [0, 1]], float)
    with pytest.raises(DegenerateConfiguration):
        estimate_homography(src, src)


def test_homography_rejects_all_collinear():
    src = np.column_stack([np.arange(8.0), 2 * np.arange(8.0)])
    with pytest.raises(DegenerateConfiguration):
        estimate_homography(src, src)


def test_homography_recovery_random(rng):
    for _ in range(200):
        h = random_homography(rng)
        src = rng.uniform(0, 1000, (10, 2))
        est = estimate_homography(src, apply_homography(h, src))
        np.testing.assert_allclose(est, h / h[2, 2], atol=1e-6)


# ---------------------------------------------------------------- warp_box


def test_warp_identity():
    b = BBox(3, 4, 30, 40)
    assert warp_box(b, np.eye(3)) == b


def test_warp_translation():
    assert warp_box(BBox(0, 0, 10, 10), translation_homography(5, 0)) == BBox(5, 0, 15, 10)


def test_warp_scale_two():
    assert warp_box(BBox(1, 1, 2, 2), np.diag([2.0, 2.0, 1.0])) == BBox(2, 2, 4, 4)


def test_warp_renormalises_flipped_corners():
    flip = np.diag([-1.0, 1.0, 1.0])
    assert warp_box(BBox(1, 1, 2, 2), flip) == BBox(-2, 1, -1, 2)


def test_warp_to_infinity_raises():
    h = np.array([[1, 0, 0], [0, 1, 0], [1, 0, 0]], float)  # w = x
    with pytest.raises(ProjectiveDegeneracy):
        warp_box(BBox(0, 0, 10, 10), h)


def test_homography_jacobian_matches_finite_difference(rng):
    h = random_homography(rng)
    x, y, eps = 300.0, 200.0, 1e-4
    J = homography_jacobian(h, x, y)
    f = lambda p: apply_homography(h, [p])[0]
    num = np.column_stack(
        [(f([x + eps, y]) - f([x - eps, y])) / (2 * eps), (f([x, y + eps]) - f([x, y - eps])) / (2 * eps)]
    )
    np.testing.assert_allclose(J, num, atol=1e-6)


@settings(max_examples=50)
@given(st.floats(-100, 100), st.floats(-100, 100))
def test_jacobian_of_translation_is_identity(tx, ty):
    np.testing.assert_array_equal(homography_jacobian(translation_homography(tx, ty), 3.0, 4.0), np.eye(2))
