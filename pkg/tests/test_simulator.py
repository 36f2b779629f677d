import math
from dataclasses import replace

import numpy as np
import pytest

from conftest import small_scenario
from vesseltrack.errors import BadWaypoints, ConfigError
from vesseltrack.measurements import LidarPose
from vesseltrack.simulator import (
    CameraModel,
    CameraSimConfig,
    ClockConfig,
    DetectCurve,
    LidarSimConfig,
    config_from_dict,
    config_to_dict,
    generate_truth,
    load_scenario,
    schedule,
    simulate,
    simulate_camera,
    simulate_lidar,
    truth_state,
)
from vesseltrack.timeline import warp_time

ALWAYS = DetectCurve(1.0, 1e9, 1.0)
NEVER = DetectCurve(0.0, 0.0, 1.0)


class TestTruth:
    def test_linear_example(self):
        cfg = small_scenario(waypoints=((0, 0, 0), (10, 100, 0)))
        pos, vel = truth_state(cfg, 5.0)
        assert np.allclose(pos, [[50, 0]]) and np.allclose(vel, [[10, 0]])

    def test_clamped_after_end(self):
        cfg = small_scenario(waypoints=((0, 0, 0), (10, 100, 0)))
        pos, vel = truth_state(cfg, 12.0)
        assert np.allclose(pos, [[100, 0]]) and np.allclose(vel, [[0, 0]])

    def test_dogleg_finite_differences(self):
        cfg = small_scenario(waypoints=((0, 0, 0), (10, 50, 0), (30, 50, 80)), duration=30.0)
        tr = generate_truth(cfg)
        assert len(tr) == 301 and tr.t[1] - tr.t[0] == pytest.approx(0.1)
        fd = np.diff(tr.position, axis=0) / 0.1
        # forward differences equal the slope of the segment they start in
        assert np.allclose(fd, tr.velocity[:-1], atol=1e-9)
        assert np.allclose(tr.velocity[50], [5, 0]) and np.allclose(tr.velocity[200], [0, 4])

    @pytest.mark.parametrize("wp", [((0, 0, 0),), ((0, 0, 0), (0, 1, 1)), ((0, 0, 0), (1, np.nan, 0))])
    def test_bad_waypoints(self, wp):
        with pytest.raises(BadWaypoints):
            small_scenario(waypoints=wp)


def noiseless_lidar(**kw):
    base = dict(sigma_r=0.0, sigma_theta=0.0, detect=ALWAYS, clutter_rate=0.0)
    base.update(kw)
    return LidarSimConfig(**base)


class TestLidar:
    def test_range_gate(self):
        cfg = small_scenario(
            waypoints=((0, 150, 0), (20, 150, 0.001)), lidar=LidarSimConfig(detect=ALWAYS, clutter_rate=0.5)
        )
        stream, _ = simulate_lidar(cfg)
        # nothing can be a target return, so all candidates are uniform clutter
        assert len(stream) == 200
        assert all(np.all(s.z[:, 0] <= 130.0) for _, s in stream)
        near = sum(int(np.sum(np.abs(s.z[:, 0] - 150) < 5)) for _, s in stream)
        assert near == 0

    def test_noiseless_candidate(self):
        cfg = small_scenario(waypoints=((0, 50, 0), (1, 50, 0.0)), lidar=noiseless_lidar())
        stream, _ = simulate_lidar(cfg)
        for _, s in stream:
            assert len(s) == 1 and s.z[0, 0] == 50.0 and s.z[0, 1] == 0.0

    def test_clutter_count(self):
        cfg = small_scenario(
            waypoints=((0, 500, 0), (100, 500, 1.0)), lidar=LidarSimConfig(detect=NEVER, clutter_rate=2.0)
        )
        stream, _ = simulate_lidar(cfg)
        assert len(stream) == 1000
        total = sum(len(s) for _, s in stream)
        assert abs(total - 2000) <= 0.05 * 2000

    def test_clutter_uniform_in_range_bearing(self):
        cfg = small_scenario(
            waypoints=((0, 500, 0), (200, 500, 1.0)), lidar=LidarSimConfig(detect=NEVER, clutter_rate=3.0)
        )
        z = np.vstack([s.z for _, s in simulate_lidar(cfg)[0] if len(s)])
        assert 0 < z[:, 0].min() and z[:, 0].max() <= 130
        assert abs(z[:, 0].mean() - 65) < 2 and abs(z[:, 1].mean()) < 0.1
        assert abs(np.corrcoef(z[:, 0], z[:, 1])[0, 1]) < 0.05

    def test_true_returns_never_beyond_gate(self, scenario):
        cfg = replace(scenario, waypoints=((0, 0, 100), (60, 0, 160)), lidar=LidarSimConfig(detect=DetectCurve(1.0, 1e9, 1.0)))
        for _, s in simulate_lidar(cfg)[0]:
            assert np.all(s.z[:, 0] <= cfg.lidar.r_max)


class TestCamera:
    def test_noiseless(self, scenario):
        cam = replace(scenario.camera, pixel_noise=0.0, position_noise_std=0.0, detect=ALWAYS, clutter_rate=0.0)
        cfg = replace(scenario, camera=cam)
        stream, _ = simulate_camera(cfg)
        pos, _ = truth_state(cfg, schedule(cam.rate, cam.phase, cfg.t_end))
        for (_, s), p in zip(stream, pos):
            assert len(s) == 1 and np.array_equal(s.z[0], p)

    def test_no_detections(self, scenario):
        cfg = replace(scenario, camera=replace(scenario.camera, detect=NEVER, clutter_rate=0.0))
        assert all(len(s) == 0 for _, s in simulate_camera(cfg)[0])

    def test_noise_std(self):
        cam = CameraSimConfig(
            rate=100.0, position=(-150.0, 0.0, 60.0), pitch=math.radians(20.0),
            pixel_noise=0.0, position_noise_std=5.0, detect=ALWAYS, clutter_rate=0.0,
        )
        cfg = small_scenario(waypoints=((0, 20, 0), (100, 20, 0.0)), camera=cam)
        stream, _ = simulate_camera(cfg)
        z = np.vstack([s.z for _, s in stream])
        assert len(z) == 10_000
        sd = (z - [20, 0]).std(axis=0)
        assert np.all(np.abs(sd / 5 - 1) <= 0.03)

    def test_reported_covariance(self, scenario):
        stream, _ = simulate_camera(scenario)
        cam = CameraModel(scenario.camera)
        for _, s in stream[:20]:
            for z, r in zip(s.z, s.r_cov):
                j = cam.jacobians(z)[0]
                assert np.allclose(r, 25.0 * j @ j.T + 0.25 * np.eye(2))

    def test_homography_matches_projection(self, scenario):
        cam = CameraModel(scenario.camera)
        px, world = cam.pixel_pairs()
        uv, depth = cam.project(world)
        assert np.all(depth > 0) and np.allclose(uv, px, atol=1e-6)


class TestStreams:
    def test_schedule(self):
        t = schedule(10.0, 0.03, 1.0)
        assert len(t) == 10 and t[0] == 0.03

    def test_determinism(self, scenario):
        a, b = simulate(scenario), simulate(scenario)
        for s in ("lidar", "camera"):
            ea, eb = getattr(a, s), getattr(b, s)
            assert [t for t, _ in ea] == [t for t, _ in eb]
            assert all(np.array_equal(x.z, y.z) and np.array_equal(x.confidence, y.confidence) for (_, x), (_, y) in zip(ea, eb))

    def test_seed_changes_output(self, scenario):
        a, b = simulate(scenario), simulate(replace(scenario, seed=12))
        assert any(not np.array_equal(x.z, y.z) for (_, x), (_, y) in zip(a.camera, b.camera))

    def test_warp_round_trip(self, scenario):
        sim = simulate(scenario)
        for s, rate, phase in (("lidar", 10.0, 0.0), ("camera", 12.5, 0.0)):
            ts = [t for t, _ in getattr(sim, s)]
            back = warp_time(sim.warps[s], ts)
            assert np.abs(back - schedule(rate, phase, scenario.t_end)).max() <= 1e-9
        assert sim.lidar[0][0] == pytest.approx(0.3)

    def test_clock_warp(self):
        w = ClockConfig(1.0, (1e-3,), 10.0).warp(25.0)
        assert w.anchors[0] == (1.0, 0.0)
        assert w.anchors[1] == pytest.approx((11.01, 10.0))
        assert len(w.anchors) == 4


class TestConfig:
    def test_bundled_round_trip(self):
        cfg = load_scenario("marina-baseline")
        assert cfg.name == "marina-baseline" and cfg.lidar.r_max == 130.0
        again = config_from_dict(config_to_dict(cfg))
        assert config_to_dict(again) == config_to_dict(cfg)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError) as exc:
            load_scenario(tmp_path / "nope.json")
        assert "nope.json" in str(exc.value)

    def test_bad_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError):
            load_scenario(p)

    def test_zone_radii_validated(self):
        with pytest.raises(ConfigError):
            small_scenario(r1=700.0)

    def test_lidar_pose_from_dict(self):
        d = config_to_dict(small_scenario(lidar_pose=LidarPose((3.0, 4.0), 0.5)))
        cfg = config_from_dict(d)
        assert np.array_equal(cfg.lidar_pose.position, [3.0, 4.0]) and cfg.lidar_pose.yaw == 0.5
