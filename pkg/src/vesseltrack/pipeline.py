"""Glue between a simulated scenario and the tracker."""

from __future__ import annotations

from .fusion import SensorSuite
from .simulator import CameraModel, ScenarioConfig, Simulation
from .timeline import attach_truth, bin_measurements
from .tracker import TrackerConfig


def build_bins(sim: Simulation, bin_width: float | None = None, t0: float = 0.0):
    """Warp both streams to the reference clock, bin them, attach truth."""
    width = sim.cfg.bin_width if bin_width is None else bin_width
    bins = bin_measurements(sim.reference_streams(), width, t0)
    attach_truth(bins, sim.truth.t, sim.truth.position)
    return bins


def sensor_suite(cfg: ScenarioConfig, homography=None, lidar_pose=None) -> SensorSuite:
    """Nominal sensor models for a scenario.

    Defaults to the scenario's exact camera homography and LiDAR pose;
    fitted calibrations can be passed instead.
    """
    if homography is None:
        homography = CameraModel(cfg.camera).homography
    return SensorSuite(
        lidar_pose=cfg.lidar_pose if lidar_pose is None else lidar_pose,
        homography=homography,
        sigma_px=cfg.camera.sigma_px,
        camera_cov_floor=cfg.camera.cov_floor,
        sigma_r=cfg.lidar.sigma_r,
        sigma_theta=cfg.lidar.sigma_theta,
        alpha_camera=cfg.alpha_camera,
        alpha_lidar=cfg.alpha_lidar,
        camera_clutter_density=cfg.camera_clutter_density,
        lidar_clutter_density=cfg.lidar_clutter_density,
    )


def tracker_config(cfg: ScenarioConfig, **overrides) -> TrackerConfig:
    d = dict(cfg.tracker)
    d.update(overrides)
    return TrackerConfig.from_dict(d)
