import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from herdtrack.errors import SingularInnovation
from herdtrack.geometry import BBox, translation_homography
from herdtrack.kalman import (
    KalmanConfig,
    KalmanState,
    apply_camera_motion,
    initiate,
    predict,
    project,
    transition_matrix,
    update,
)
from oracles import run_oracle_comparison, scalar_update


def make_state(pos, vel, pos_var=1.0, vel_var=1.0):
    x = np.concatenate([np.asarray(pos, float), np.asarray(vel, float)])
    return KalmanState(x, np.diag([pos_var] * 4 + [vel_var] * 4))


def assert_psd(P):
    np.testing.assert_allclose(P, P.T, atol=1e-9)
    assert np.linalg.eigvalsh(P).min() >= -1e-9


# ------------------------------------------------------------------ config


@pytest.mark.parametrize("kwargs", [dict(lam=1.5), dict(lam=-0.1), dict(dt=0), dict(q_pos=0), dict(r_meas=-1)])
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        KalmanConfig(**kwargs)


# ----------------------------------------------------------------- predict


def test_predict_zero_velocity_keeps_box_and_grows_covariance():
    s = make_state([10, 20, 30, 40], [0, 0, 0, 0])
    out = predict(s, KalmanConfig())
    np.testing.assert_array_equal(out.x[:4], s.x[:4])
    assert np.trace(out.P) > np.trace(s.P)


def test_predict_coupled_corner_rule():
    s = make_state([0, 0, 100, 100], [10, 0, 0, 0])
    out = predict(s, KalmanConfig(lam=0.6, dt=1.0))
    assert out.x[0] == pytest.approx(6.0, abs=1e-12)
    assert out.x[2] == pytest.approx(104.0, abs=1e-12)
    np.testing.assert_array_equal(out.x[4:], s.x[4:])


def test_predict_lambda_one_is_independent_constant_velocity():
    s = make_state([0, 0, 100, 100], [3, -2, 5, 7])
    out = predict(s, KalmanConfig(lam=1.0, dt=2.0))
    np.testing.assert_array_equal(out.x[:4], s.x[:4] + 2.0 * s.x[4:])


def test_transition_matrix_rows_sum_velocity_weights_to_dt():
    F = transition_matrix(KalmanConfig(lam=0.3, dt=1.5))
    np.testing.assert_allclose(F[:4, 4:].sum(axis=1), 1.5)


@given(st.floats(0, 1), st.floats(-50, 50), st.floats(-50, 50), st.floats(0.1, 3))
def test_equal_corner_velocities_preserve_size(lam, vx, vy, dt):
    s = make_state([100, 100, 180, 150], [vx, vy, vx, vy])
    out = predict(s, KalmanConfig(lam=lam, dt=dt))
    assert out.box.width == pytest.approx(80.0, abs=1e-9)
    assert out.box.height == pytest.approx(50.0, abs=1e-9)


# ------------------------------------------------------------------ project


def test_project_selects_positions():
    s = make_state([10, 20, 30, 40], [1, 2, 3, 4])
    np.testing.assert_array_equal(project(s, KalmanConfig()).z_hat, [10, 20, 30, 40])


def test_project_identity_covariance():
    s = KalmanState(np.array([0, 0, 1, 1, 0, 0, 0, 0], float), np.eye(8))
    np.testing.assert_array_equal(project(s, KalmanConfig(r_meas=1.0)).S, 2 * np.eye(4))


def test_project_generic_covariance_is_position_block_plus_r(rng):
    A = rng.normal(size=(8, 8))
    s = KalmanState(np.array([0, 0, 1, 1, 0, 0, 0, 0], float), A @ A.T)
    S = project(s, KalmanConfig(r_meas=2.5)).S
    np.testing.assert_allclose(S, s.P[:4, :4] + 2.5 * np.eye(4), atol=1e-12)


# ------------------------------------------------------------------- update


def test_update_at_mean_keeps_mean_shrinks_covariance():
    s = make_state([10, 20, 30, 40], [0, 0, 0, 0])
    out = update(s, BBox(10, 20, 30, 40), KalmanConfig())
    np.testing.assert_allclose(out.x, s.x)
    assert np.trace(out.P) < np.trace(s.P)


def test_update_gain_one_half():
    s = make_state([0, 0, 10, 10], [0, 0, 0, 0], pos_var=1.0)
    out = update(s, BBox(2, 0, 10, 10), KalmanConfig(r_meas=1.0))
    assert out.x[0] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(out.x[1:4], [0, 10, 10], atol=1e-12)


def test_repeated_updates_follow_scalar_riccati():
    cfg = KalmanConfig(r_meas=2.0)
    s = make_state([0, 0, 10, 10], [0, 0, 0, 0], pos_var=50.0, vel_var=1.0)
    z = BBox(5, 3, 20, 14)
    mean, var = 0.0, 50.0
    prev = np.inf
    for _ in range(50):
        s = update(s, z, cfg)
        mean, var = scalar_update(mean, var, 5.0, 2.0)
        assert s.x[0] == pytest.approx(mean, abs=1e-9)
        assert s.P[0, 0] == pytest.approx(var, abs=1e-9)
        assert s.P[0, 0] < prev
        prev = s.P[0, 0]
    np.testing.assert_allclose(s.x[:4], z.as_array(), atol=0.5)


def test_update_never_increases_position_trace(rng):
    cfg = KalmanConfig()
    for _ in range(200):
        A = rng.normal(size=(8, 8))
        s = KalmanState(np.array([0, 0, 100, 100, 0, 0, 0, 0], float), A @ A.T + 0.1 * np.eye(8))
        out = update(s, BBox(*rng.uniform(-5, 5, 2), *(100 + rng.uniform(-5, 5, 2))), cfg)
        assert np.trace(out.P[:4, :4]) <= np.trace(s.P[:4, :4]) + 1e-9
        assert_psd(out.P)


def test_update_singular_innovation():
    s = KalmanState(np.zeros(8) + [0, 0, 1, 1, 0, 0, 0, 0], np.full((8, 8), np.nan))
    with pytest.raises(SingularInnovation):
        update(s, BBox(0, 0, 1, 1), KalmanConfig())


def test_update_diagonal_matches_four_scalar_filters(rng):
    cfg = KalmanConfig(r_meas=3.0)
    for _ in range(500):
        var = rng.uniform(0.1, 20, 4)
        x = np.concatenate([[0, 0, 200, 200] + rng.normal(0, 5, 4), np.zeros(4)])
        s = KalmanState(x, np.diag(np.concatenate([var, rng.uniform(0.1, 5, 4)])))
        z = x[:4] + rng.normal(0, 5, 4)
        out = update(s, BBox.from_array(z), cfg)
        for k in range(4):
            m, v = scalar_update(x[k], var[k], z[k], 3.0)
            assert out.x[k] == pytest.approx(m, abs=1e-9)
            assert out.P[k, k] == pytest.approx(v, abs=1e-9)


# ---------------------------------------------------- scalar-filter oracle


def test_filter_matches_scalar_oracle(rng):
    worst_x, worst_p = run_oracle_comparison(rng, 2000)
    assert worst_x <= 1e-9
    assert worst_p <= 1e-9


# ----------------------------------------------------------- camera motion


def test_camera_motion_identity():
    s = make_state([10, 20, 30, 40], [1, 2, 3, 4])
    out = apply_camera_motion(s, np.eye(3))
    np.testing.assert_array_equal(out.x, s.x)
    np.testing.assert_array_equal(out.P, s.P)


def test_camera_motion_translation():
    s = make_state([10, 20, 30, 40], [1, 2, 3, 4], pos_var=2.0, vel_var=3.0)
    out = apply_camera_motion(s, translation_homography(5, 0))
    np.testing.assert_allclose(out.x, [15, 20, 35, 40, 1, 2, 3, 4])
    np.testing.assert_allclose(out.P, s.P)


def test_camera_motion_scale_two():
    s = make_state([10, 20, 30, 40], [1, 2, 3, 4], pos_var=2.0, vel_var=3.0)
    out = apply_camera_motion(s, np.diag([2.0, 2.0, 1.0]))
    np.testing.assert_allclose(out.x, 2 * s.x)
    np.testing.assert_allclose(np.diag(out.P)[:4], 4 * 2.0)
    np.testing.assert_allclose(np.diag(out.P)[4:], 4 * 3.0)


def test_initiate_prior():
    cfg = KalmanConfig(r_meas=2.0, q_vel=0.5)
    s = initiate(BBox(1, 2, 3, 4), cfg)
    np.testing.assert_array_equal(s.x, [1, 2, 3, 4, 0, 0, 0, 0])
    np.testing.assert_array_equal(np.diag(s.P), [20] * 4 + [50] * 4)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_covariance_stays_psd_under_random_cycles(seed):
    rng = np.random.default_rng(seed)
    cfg = KalmanConfig(lam=float(rng.uniform(0, 1)))
    s = initiate(BBox(100, 100, 200, 160), cfg)
    for _ in range(30):
        s = predict(s, cfg)
        s = update(s, BBox.from_array(s.x[:4] + rng.normal(0, 2, 4)), cfg)
        assert_psd(s.P)
        assert s.x[0] <= s.x[2] and s.x[1] <= s.x[3]
