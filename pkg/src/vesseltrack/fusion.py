"""Fusion configurations and the entropy-reduction sensor selector."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .errors import NoSensorAvailable
from .filter import (
    NOMINAL,
    ParticleSet,
    ProcessNoiseParams,
    apply_log_likelihood,
    effective_sample_size,
    estimate,
    predict,
    resample_if_needed,
)
from .measurements import (
    CAMERA_COV_FLOOR,
    DEFAULT_ALPHA,
    CameraCandidateSet,
    LidarCandidateSet,
    LidarPose,
    camera_covariance,
    log_clutter_level,
    log_likelihood,
    predict_lidar,
)

SENSORS = ("lidar", "camera")  # also the argmax tie-break preference


class FusionMode(str, Enum):
    LIDAR_ONLY = "lidar-only"
    CAMERA_ONLY = "camera-only"
    ALL_SENSORS = "all-sensors"
    ADAPTIVE = "adaptive"

    @property
    def sensors(self) -> tuple[str, ...]:
        """Sensors this configuration may ever use."""
        if self is FusionMode.LIDAR_ONLY:
            return ("lidar",)
        if self is FusionMode.CAMERA_ONLY:
            return ("camera",)
        return SENSORS


ALL_MODES = tuple(FusionMode)


@dataclass
class SensorSuite:
    """Nominal sensor models used for virtual measurements.

    ``homography`` maps camera pixels to the world plane; the nominal camera
    covariance at a world point is sigma_px pushed through its Jacobian plus
    ``camera_cov_floor`` * I. Without a homography, ``camera_fallback_cov``
    is used as is.
    """

    lidar_pose: LidarPose
    homography: object = None
    sigma_px: float = NOMINAL["sigma_px"]
    camera_cov_floor: float = CAMERA_COV_FLOOR
    camera_fallback_cov: np.ndarray = field(default_factory=lambda: 25.0 * np.eye(2))
    sigma_r: float = NOMINAL["sigma_r"]
    sigma_theta: float = NOMINAL["sigma_theta"]
    alpha_camera: float = DEFAULT_ALPHA
    alpha_lidar: float = DEFAULT_ALPHA
    camera_clutter_density: float = 0.0
    lidar_clutter_density: float = 1.0 / (NOMINAL["r_max"] * 2.0 * math.pi)

    def nominal_camera_cov(self, z) -> np.ndarray:
        if self.homography is None:
            return np.asarray(self.camera_fallback_cov, dtype=float)
        return camera_covariance(self.homography, z, self.sigma_px, self.camera_cov_floor)


@dataclass
class InfoGainReport:
    h_prior: float
    h_post: dict
    ig: dict
    selected: str


@dataclass
class BinLog:
    index: int
    mode: FusionMode
    applied: tuple = ()
    report: InfoGainReport | None = None
    log_marginal: dict = field(default_factory=dict)
    target_prob: dict = field(default_factory=dict)
    did_resample: bool = False
    ess: float = float("nan")
    estimate: np.ndarray | None = None


def weight_entropy(ps) -> float:
    """Shannon entropy of the normalized weights, in bits."""
    if isinstance(ps, ParticleSet):
        lw = ps.log_weights
    else:
        with np.errstate(divide="ignore"):
            lw = np.log(np.asarray(ps, dtype=float))
    return kernels.entropy_bits(np.ascontiguousarray(lw))


def virtual_measurement(ps: ParticleSet, sensor: str, suite: SensorSuite):
    """Single-candidate set placed at the current estimate."""
    xhat = estimate(ps)
    if sensor == "camera":
        z = xhat[:2]
        return CameraCandidateSet(
            [z], [suite.nominal_camera_cov(z)], [1.0],
            alpha=suite.alpha_camera, clutter_density=suite.camera_clutter_density,
        )
    if sensor == "lidar":
        r, b = predict_lidar(xhat, suite.lidar_pose)
        return LidarCandidateSet(
            [[r, b]], [1.0], alpha=suite.alpha_lidar, clutter_density=suite.lidar_clutter_density,
            sigma_r=suite.sigma_r, sigma_theta=suite.sigma_theta,
        )
    raise ValueError(f"unknown sensor {sensor!r}")


def available_sensors(fbin) -> list[str]:
    return [s for s in SENSORS if fbin.has(s)]


def select_sensor_adaptive(ps: ParticleSet, fbin, suite: SensorSuite) -> InfoGainReport:
    """Score each available sensor by the entropy drop of a hypothetical
    update with its virtual measurement; the input set is left untouched."""
    avail = available_sensors(fbin)
    if not avail:
        raise NoSensorAvailable(f"bin {fbin.index} has no sensor data")
    h_prior = weight_entropy(ps)
    h_post, ig = {}, {}
    selected = None
    for s in avail:
        vset = virtual_measurement(ps, s, suite)
        clone = ps.clone(with_rng=False)
        ll = log_likelihood(vset, clone.states, suite.lidar_pose)
        post, _ = apply_log_likelihood(clone, ll)
        h_post[s] = weight_entropy(post)
        ig[s] = h_prior - h_post[s]
        if selected is None or ig[s] > ig[selected]:
            selected = s
    return InfoGainReport(h_prior, h_post, ig, selected)


def sensors_for_bin(ps: ParticleSet, fbin, mode: FusionMode, suite: SensorSuite):
    """Ordered sensors whose real sets update this bin (+ adaptive report)."""
    mode = FusionMode(mode)
    if mode is FusionMode.ADAPTIVE:
        if not available_sensors(fbin):
            return [], None
        rep = select_sensor_adaptive(ps, fbin, suite)
        return [rep.selected], rep
    if mode is FusionMode.ALL_SENSORS:
        return [s for s in ("camera", "lidar") if fbin.has(s)], None
    s = mode.sensors[0]
    return ([s] if fbin.has(s) else []), None


def measurement_update(ps: ParticleSet, fbin, sensors, suite: SensorSuite, log: BinLog) -> ParticleSet:
    """Sequential per-sensor updates; records marginals and target-origin
    probabilities in ``log``."""
    for s in sensors:
        mset = fbin.camera if s == "camera" else fbin.lidar
        ll = log_likelihood(mset, ps.states, suite.lidar_pose)
        ps, log_norm = apply_log_likelihood(ps, ll)
        clutter = log_clutter_level(mset)
        log.log_marginal[s] = log_norm
        log.target_prob[s] = 1.0 - math.exp(min(0.0, clutter - log_norm)) if math.isfinite(clutter) else 1.0
    log.applied = tuple(sensors)
    return ps


def run_bin(
    ps: ParticleSet,
    fbin,
    mode: FusionMode,
    suite: SensorSuite,
    dt: float,
    q: ProcessNoiseParams = ProcessNoiseParams(),
    resample_threshold: float = NOMINAL["resample_threshold"],
):
    """One filter cycle: predict, mode-dependent update, resample, estimate."""
    mode = FusionMode(mode)
    log = BinLog(fbin.index, mode)
    ps = predict(ps, dt, q)
    sensors, log.report = sensors_for_bin(ps, fbin, mode, suite)
    ps = measurement_update(ps, fbin, sensors, suite, log)
    log.ess = effective_sample_size(ps)
    ps, log.did_resample = resample_if_needed(ps, resample_threshold)
    log.estimate = estimate(ps)
    return ps, log
