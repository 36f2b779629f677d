"""Sequential Monte Carlo core: init, CV prediction, log-space updates,
ESS-triggered systematic resampling and weighted-mean estimation.

RNG consumption order is fixed: initialization draws positions then
velocities; each prediction draws one (N, 2) block of accelerations; each
resampling draws one uniform offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import AllWeightsDegenerate, NoDetectionInBin
from .measurements import LidarPose, polar_to_world, range_bearing_cov_xy

NOMINAL = {
    "n_particles": 1000,
    "resample_threshold": 0.5,
    "sigma_a": 3.0,
    "sigma_r": 1.0,
    "sigma_theta": math.radians(0.5),
    "sigma_px": 5.0,
    "r_max": 130.0,
    "bin_width": 0.2,
}


@dataclass
class ParticleSet:
    states: np.ndarray  # (N, 4): px, py, vx, vy
    log_weights: np.ndarray  # (N,), normalized
    rng: np.random.Generator | None = None

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def clone(self, with_rng: bool = True) -> "ParticleSet":
        """Independent copy. The RNG is a deterministic fork that never
        advances the parent stream; ``with_rng=False`` leaves it out for
        purely hypothetical updates that draw nothing."""
        rng = None
        if with_rng and self.rng is not None:
            rng = np.random.Generator(self.rng.bit_generator.jumped())
        return ParticleSet(self.states.copy(), self.log_weights.copy(), rng)


@dataclass(frozen=True)
class ProcessNoiseParams:
    sigma_a: float = NOMINAL["sigma_a"]

    def __post_init__(self):
        if self.sigma_a < 0:
            raise ValueError("sigma_a must be >= 0")


@dataclass(frozen=True)
class InitParams:
    sigma_v0: float = 2.0
    pos_cov: np.ndarray | None = None  # overrides the sensor-derived covariance

    def __post_init__(self):
        if not self.sigma_v0 > 0:
            raise ValueError("sigma_v0 must be > 0")


def uniform_log_weights(n: int) -> np.ndarray:
    return np.full(n, -math.log(n))


def initial_detection(first_bin, pose: LidarPose | None, sensors=("lidar", "camera")):
    """Pick the initializing detection: LiDAR first, else camera.

    Within a set the highest-confidence candidate wins (first on ties).
    Returns (sensor, position (2,), position covariance (2, 2)).
    """
    if "lidar" in sensors and first_bin.has("lidar"):
        s = first_bin.lidar
        j = int(np.argmax(s.confidence))
        r, b = s.z[j]
        if pose is None:
            raise ValueError("LiDAR initialization needs the LiDAR pose")
        return "lidar", polar_to_world(r, b, pose), range_bearing_cov_xy(r, b, s.sigma_r, s.sigma_theta)
    if "camera" in sensors and first_bin.has("camera"):
        s = first_bin.camera
        j = int(np.argmax(s.confidence))
        return "camera", s.z[j].copy(), s.r_cov[j].copy()
    raise NoDetectionInBin(f"bin {first_bin.index} holds no detection from {'/'.join(sensors)}")


def initialize(first_bin, init: InitParams, n: int, rng, pose: LidarPose | None = None, sensors=("lidar", "camera")):
    """Sample N particles around the bin's initializing detection.

    ``rng`` is a seed or a numpy Generator.
    """
    if n < 1:
        raise ValueError("need at least one particle")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    _, mean, cov = initial_detection(first_bin, pose, sensors)
    if init.pos_cov is not None:
        cov = np.asarray(init.pos_cov, dtype=float)
    chol = np.linalg.cholesky(cov)
    states = np.empty((n, 4))
    states[:, :2] = mean + rng.standard_normal((n, 2)) @ chol.T
    states[:, 2:] = init.sigma_v0 * rng.standard_normal((n, 2))
    return ParticleSet(states, uniform_log_weights(n), rng)


def predict(ps: ParticleSet, dt: float, q: ProcessNoiseParams) -> ParticleSet:
    """CV motion then white-noise acceleration injection."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    a = q.sigma_a * ps.rng.standard_normal((ps.n, 2))
    return ParticleSet(kernels.cv_predict(ps.states, a, float(dt)), ps.log_weights, ps.rng)


def apply_log_likelihood(ps: ParticleSet, loglik: np.ndarray) -> tuple[ParticleSet, float]:
    """Add per-particle log-likelihoods and renormalize.

    Returns the updated set and the log normalizer, i.e. the log of the
    predictive density of the measurement under the prior weights.
    """
    lw, log_norm = kernels.normalize_log_weights(ps.log_weights + loglik)
    if not math.isfinite(log_norm):
        raise AllWeightsDegenerate("all particle likelihoods vanished")
    return ParticleSet(ps.states, lw, ps.rng), float(log_norm)


def update(ps: ParticleSet, factors) -> ParticleSet:
    """Multiply in each factor (a callable states -> per-particle log-lik)."""
    if not factors:
        return ps
    total = np.zeros(ps.n)
    for f in factors:
        total = total + f(ps.states)
    return apply_log_likelihood(ps, total)[0]


def effective_sample_size(ps: ParticleSet) -> float:
    w = np.exp(ps.log_weights - ps.log_weights.max())
    return float(w.sum() ** 2 / (w @ w))


def systematic_resample(ps: ParticleSet) -> ParticleSet:
    u = ps.rng.random()
    idx = kernels.systematic_indices(ps.weights, u)
    return ParticleSet(ps.states[idx], uniform_log_weights(ps.n), ps.rng)


def resample_if_needed(ps: ParticleSet, threshold_ratio: float = NOMINAL["resample_threshold"]):
    """Systematic resampling when ESS < threshold_ratio * N.

    Returns (particle set, did_resample).
    """
    if not 0 < threshold_ratio <= 1:
        raise ValueError("threshold_ratio must be in (0, 1]")
    if effective_sample_size(ps) < threshold_ratio * ps.n:
        return systematic_resample(ps), True
    return ps, False


def estimate(ps: ParticleSet) -> np.ndarray:
    """Weighted mean state."""
    return ps.weights @ ps.states
