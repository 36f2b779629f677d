import math

import numpy as np
import pytest

from oracles import camera_lik_linear, lidar_lik_linear
from vesseltrack.calibration import Homography
from vesseltrack.errors import CoincidentWithSensor, EmptyPointSet, NondegenerateCovarianceRequired
from vesseltrack.measurements import (
    CameraCandidateSet,
    LidarCandidateSet,
    LidarPose,
    camera_covariance,
    camera_log_likelihood,
    lidar_log_likelihood,
    predict_camera,
    predict_lidar,
    summarize_lidar_points,
    wrap_angle,
)

ST = math.radians(0.5)


def test_summarize_examples():
    r, b = summarize_lidar_points([10.0, 11.0, 12.0], [0.0, 0.0, 0.0])
    assert r == 11.0 and b == 0.0
    r, b = summarize_lidar_points([5.0], [math.pi - 0.01])
    assert (r, b) == pytest.approx((5.0, math.pi - 0.01))
    # circular mean across the +-pi seam stays near pi
    _, b = summarize_lidar_points([5.0, 5.0], [math.pi - 0.01, -math.pi + 0.01])
    assert abs(abs(b) - math.pi) < 1e-12
    with pytest.raises(EmptyPointSet):
        summarize_lidar_points([], [])


def test_predict_examples():
    assert np.array_equal(predict_camera([3.0, -2.0, 9.0, 9.0]), [3.0, -2.0])
    assert predict_lidar([3.0, 4.0, 0, 0], LidarPose([0, 0])) == pytest.approx((5.0, math.atan2(4, 3)))
    assert predict_lidar([0.0, 10.0, 0, 0], LidarPose([0, 0])) == pytest.approx((10.0, math.pi / 2))
    with pytest.raises(CoincidentWithSensor):
        predict_lidar([1.0, 1.0, 0, 0], LidarPose([1, 1]))


def test_wrap():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


def test_camera_single_candidate_value():
    s = CameraCandidateSet([[0.0, 0.0]], [np.eye(2)], [1.0], alpha=1.0)
    assert camera_log_likelihood(s, [0, 0, 0, 0]) == pytest.approx(-math.log(2 * math.pi), abs=1e-12)


def test_lidar_single_candidate_value():
    s = LidarCandidateSet([[10.0, 0.0]], [1.0], alpha=1.0, sigma_r=1.0, sigma_theta=ST)
    ll = lidar_log_likelihood(s, [10, 0, 0, 0], LidarPose([0, 0]))
    assert ll == pytest.approx(-math.log(2 * math.pi * ST), abs=1e-12)


def random_camera_set(rng, m):
    z = rng.normal(0, 10, (m, 2))
    covs = []
    for _ in range(m):
        a = rng.normal(size=(2, 2))
        covs.append(a @ a.T + 0.5 * np.eye(2))
    conf = rng.uniform(0, 1, m)
    conf[rng.random(m) < 0.2] = 0.0
    return z, np.array(covs), conf


@pytest.mark.parametrize("seed", range(10))
def test_camera_matches_linear_oracle(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 6))
    z, covs, conf = random_camera_set(rng, m)
    alpha, u = rng.uniform(0.5, 1), rng.uniform(1e-5, 1e-3)
    s = CameraCandidateSet(z, covs, conf, alpha=alpha, clutter_density=u)
    states = np.column_stack([rng.normal(0, 10, (100, 2)), np.zeros((100, 2))])
    ll = camera_log_likelihood(s, states)
    ref = np.array([camera_lik_linear(z, covs, conf, alpha, u, x[:2]) for x in states])
    assert np.abs(np.exp(ll) - ref).max() / ref.max() <= 1e-10
    assert np.all(np.abs(np.exp(ll) / ref - 1) <= 1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_lidar_matches_linear_oracle(seed):
    rng = np.random.default_rng(100 + seed)
    m = int(rng.integers(1, 5))
    pose = LidarPose(rng.normal(0, 5, 2), 0.3)
    zs = np.column_stack([rng.uniform(5, 50, m), rng.uniform(-math.pi, math.pi, m)])
    conf = rng.uniform(0.1, 1, m)
    alpha, u = 0.9, 1 / (130 * 2 * math.pi)
    s = LidarCandidateSet(zs, conf, alpha=alpha, clutter_density=u, sigma_r=1.0, sigma_theta=0.05)
    ang = rng.uniform(-math.pi, math.pi, 100)
    rad = rng.uniform(5, 50, 100)
    states = np.column_stack([pose.position + np.column_stack([rad * np.cos(ang), rad * np.sin(ang)]), np.zeros((100, 2))])
    ll = lidar_log_likelihood(s, states, pose)
    ref = np.array([lidar_lik_linear(zs, conf, alpha, u, x[:2], pose.position, 1.0, 0.05) for x in states])
    assert np.all(np.abs(np.exp(ll) / ref - 1) <= 1e-10)


def test_bearing_wrap_invariance():
    pose = LidarPose([0, 0])
    states = np.array([[-10.0, 0.01, 0, 0], [-10.0, -0.01, 0, 0]])
    base = LidarCandidateSet([[10.0, math.pi - 0.001]], sigma_theta=0.01, clutter_density=1e-3)
    for k in (-2, -1, 1, 3):
        shifted = LidarCandidateSet([[10.0, math.pi - 0.001 + 2 * math.pi * k]], sigma_theta=0.01, clutter_density=1e-3)
        assert np.allclose(lidar_log_likelihood(shifted, states, pose), lidar_log_likelihood(base, states, pose), rtol=0, atol=1e-9)
    # the two states straddle the seam; both sit close to the candidate
    ll = lidar_log_likelihood(base, states, pose)
    assert abs(ll[0] - ll[1]) < 0.5


@pytest.mark.parametrize("scale", [0.01, 0.5, 7.0])
def test_confidence_scale_invariance(scale):
    rng = np.random.default_rng(4)
    z, covs, conf = random_camera_set(rng, 4)
    conf = np.clip(conf, 0.05, 0.1)
    states = np.column_stack([rng.normal(0, 10, (20, 2)), np.zeros((20, 2))])
    a = camera_log_likelihood(CameraCandidateSet(z, covs, conf, clutter_density=1e-4), states)
    b = camera_log_likelihood(CameraCandidateSet(z, covs, conf * scale, clutter_density=1e-4), states)
    assert np.allclose(a, b, rtol=0, atol=1e-12)
    lz = np.array([[10.0, 0.1], [20.0, -0.5]])
    lc = np.array([0.1, 0.05])
    pose = LidarPose([0, 0])
    la = lidar_log_likelihood(LidarCandidateSet(lz, lc, clutter_density=1e-3), states, pose)
    lb = lidar_log_likelihood(LidarCandidateSet(lz, lc * scale, clutter_density=1e-3), states, pose)
    assert np.allclose(la, lb, rtol=0, atol=1e-12)


def test_empty_set_is_clutter_only():
    s = CameraCandidateSet(alpha=0.9, clutter_density=0.01)
    assert camera_log_likelihood(s, [1, 2, 0, 0]) == pytest.approx(math.log(0.1 * 0.01))
    s = LidarCandidateSet(alpha=0.9, clutter_density=0.0)
    assert lidar_log_likelihood(s, [1, 2, 0, 0], LidarPose([0, 0])) == -math.inf


def test_zero_confidence_candidates_ignored():
    s1 = CameraCandidateSet([[0, 0], [5, 5]], [np.eye(2)] * 2, [1.0, 0.0], clutter_density=1e-3)
    s2 = CameraCandidateSet([[0, 0]], [np.eye(2)], [1.0], clutter_density=1e-3)
    x = np.array([[4.0, 5.0, 0, 0]])
    assert camera_log_likelihood(s1, x) == pytest.approx(camera_log_likelihood(s2, x), abs=1e-14)


def test_non_spd_rejected():
    s = CameraCandidateSet([[0, 0]], [np.array([[1.0, 2.0], [2.0, 1.0]])])
    with pytest.raises(NondegenerateCovarianceRequired):
        camera_log_likelihood(s, [0, 0, 0, 0])


def test_coincident_particle_rejected():
    s = LidarCandidateSet([[1.0, 0.0]])
    with pytest.raises(CoincidentWithSensor):
        lidar_log_likelihood(s, np.array([[0.0, 0.0, 0, 0], [1, 0, 0, 0]]), LidarPose([0, 0]))


@pytest.mark.parametrize("bad", [dict(alpha=1.5), dict(clutter_density=-1), dict(confidence=[2.0])])
def test_invalid_sets(bad):
    kw = dict(z=[[1.0, 0.0]], r_cov=[np.eye(2)])
    kw.update(bad)
    with pytest.raises(ValueError):
        CameraCandidateSet(**kw)


def test_camera_covariance_floor():
    h = Homography(np.eye(3))
    cov = camera_covariance(h, [10.0, 5.0], sigma_px=2.0, floor=0.25)
    assert np.allclose(cov, 4.25 * np.eye(2))
