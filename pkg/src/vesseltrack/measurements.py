"""Detection-set data model and the per-sensor measurement likelihoods.

Both sensors use the same set-level model: a confidence-weighted Gaussian
mixture over candidates (target origin) blended with a uniform clutter
density,

    L(x) = alpha * sum_j cbar_j N(z_j; h(x), R_j) + (1 - alpha) * u_clutter,

evaluated in log space. Camera candidates live on the world plane, LiDAR
candidates in (range, world bearing) about the sensor position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CoincidentWithSensor, EmptyPointSet, NondegenerateCovarianceRequired

LOG_2PI = math.log(2.0 * math.pi)
DEFAULT_ALPHA = 0.9
CAMERA_COV_FLOOR = 0.25  # m^2, added to the pixel-propagated covariance
_COINCIDENT_EPS = 1e-9


def wrap_angle(a):
    """Wrap angle(s) into (-pi, pi]."""
    out = np.pi - np.mod(np.pi - np.asarray(a, dtype=float), 2.0 * np.pi)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LidarPose:
    position: np.ndarray
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(2))
        object.__setattr__(self, "yaw", float(self.yaw))

    @classmethod
    def from_transform(cls, tf) -> "LidarPose":
        return cls(tf.t, tf.theta)


@dataclass(frozen=True)
class CameraCandidate:
    z: np.ndarray
    r_cov: np.ndarray
    confidence: float


@dataclass(frozen=True)
class LidarCandidate:
    z: np.ndarray  # (range, world bearing)
    confidence: float


class CameraCandidateSet:
    """All camera candidates retained for one bin, stored column-wise."""

    sensor = "camera"

    def __init__(self, z=None, r_cov=None, confidence=None, alpha=DEFAULT_ALPHA, clutter_density=0.0):
        self.z = np.zeros((0, 2)) if z is None else np.asarray(z, dtype=float).reshape(-1, 2)
        m = len(self.z)
        self.r_cov = np.zeros((0, 2, 2)) if r_cov is None else np.asarray(r_cov, dtype=float).reshape(m, 2, 2)
        self.confidence = np.ones(m) if confidence is None else np.asarray(confidence, dtype=float).reshape(m)
        self.alpha = float(alpha)
        self.clutter_density = float(clutter_density)
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.clutter_density < 0:
            raise ValueError("clutter density must be >= 0")
        if np.any((self.confidence < 0) | (self.confidence > 1)):
            raise ValueError("confidences must lie in [0, 1]")

    @classmethod
    def from_candidates(cls, cands, **kw) -> "CameraCandidateSet":
        if not cands:
            return cls(**kw)
        return cls(
            [c.z for c in cands], [c.r_cov for c in cands], [c.confidence for c in cands], **kw
        )

    @property
    def candidates(self) -> list[CameraCandidate]:
        return [CameraCandidate(self.z[j], self.r_cov[j], float(self.confidence[j])) for j in range(len(self))]

    def __len__(self):
        return len(self.z)

    def __repr__(self):
        return f"CameraCandidateSet(M={len(self)}, alpha={self.alpha}, u={self.clutter_density:g})"


class LidarCandidateSet:
    """Range-bearing candidates for one bin with the nominal noise model."""

    sensor = "lidar"

    def __init__(
        self,
        z=None,
        confidence=None,
        alpha=DEFAULT_ALPHA,
        clutter_density=0.0,
        sigma_r=1.0,
        sigma_theta=math.radians(0.5),
    ):
        self.z = np.zeros((0, 2)) if z is None else np.asarray(z, dtype=float).reshape(-1, 2)
        m = len(self.z)
        self.confidence = np.ones(m) if confidence is None else np.asarray(confidence, dtype=float).reshape(m)
        self.alpha = float(alpha)
        self.clutter_density = float(clutter_density)
        self.sigma_r = float(sigma_r)
        self.sigma_theta = float(sigma_theta)
        if not (self.sigma_r > 0 and self.sigma_theta > 0):
            raise ValueError("sigma_r and sigma_theta must be > 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.clutter_density < 0:
            raise ValueError("clutter density must be >= 0")
        if np.any((self.confidence < 0) | (self.confidence > 1)):
            raise ValueError("confidences must lie in [0, 1]")
        if np.any(self.z[:, 0] <= 0):
            raise ValueError("candidate ranges must be > 0")

    @classmethod
    def from_candidates(cls, cands, **kw) -> "LidarCandidateSet":
        if not cands:
            return cls(**kw)
        return cls([c.z for c in cands], [c.confidence for c in cands], **kw)

    @property
    def candidates(self) -> list[LidarCandidate]:
        return [LidarCandidate(self.z[j], float(self.confidence[j])) for j in range(len(self))]

    def __len__(self):
        return len(self.z)

    def __repr__(self):
        return f"LidarCandidateSet(M={len(self)}, alpha={self.alpha}, u={self.clutter_density:g})"


# -- summaries and predictions --------------------------------------------------


def summarize_lidar_points(ranges, bearings) -> tuple[float, float]:
    """Collapse an in-box point set to (median range, circular-mean bearing)."""
    r = np.asarray(ranges, dtype=float).ravel()
    b = np.asarray(bearings, dtype=float).ravel()
    if r.size == 0:
        raise EmptyPointSet("cannot summarize an empty point set")
    if r.size != b.size:
        raise ValueError("ranges and bearings differ in length")
    theta = math.atan2(float(np.sin(b).sum()), float(np.cos(b).sum()))
    return float(np.median(r)), wrap_angle(theta)


def predict_camera(x) -> np.ndarray:
    return np.asarray(x, dtype=float)[..., :2]


def predict_lidar(x, pose: LidarPose):
    """Range and bearing of state(s) ``x`` seen from ``pose``."""
    x = np.asarray(x, dtype=float)
    ex = x[..., 0] - pose.position[0]
    ey = x[..., 1] - pose.position[1]
    r = np.hypot(ex, ey)
    if np.any(r < _COINCIDENT_EPS):
        raise CoincidentWithSensor("state coincides with the LiDAR position")
    b = wrap_angle(np.arctan2(ey, ex))
    if np.ndim(r) == 0:
        return float(r), float(b)
    return r, b


def polar_to_world(r, bearing, pose: LidarPose) -> np.ndarray:
    return pose.position + r * np.array([math.cos(bearing), math.sin(bearing)])


def range_bearing_cov_xy(r, bearing, sigma_r, sigma_theta) -> np.ndarray:
    """Cartesian covariance of a (range, bearing) point via its Jacobian."""
    c, s = math.cos(bearing), math.sin(bearing)
    jac = np.array([[c, -r * s], [s, r * c]])
    return jac @ np.diag([sigma_r**2, sigma_theta**2]) @ jac.T


def camera_covariance(homography, z, sigma_px: float, floor: float = CAMERA_COV_FLOOR) -> np.ndarray:
    """World-plane covariance of a camera detection at world point ``z``.

    Pixel noise sigma_px is pushed through the pixel->world Jacobian at the
    pixel that images ``z``; ``floor`` * I models calibration error.
    """
    from .calibration import apply_homography

    u = apply_homography(homography.inverse(), np.asarray(z, dtype=float))
    jac = homography.jacobian(u)
    return sigma_px**2 * jac @ jac.T + floor * np.eye(2)


# -- likelihoods ---------------------------------------------------------------


def _log_clutter(alpha, density):
    w = (1.0 - alpha) * density
    return math.log(w) if w > 0 else -math.inf


def _confidence_weights(conf):
    keep = conf > 0
    total = conf[keep].sum()
    return keep, (conf[keep] / total if keep.any() else conf[keep])


def _states2d(x):
    x = np.asarray(x, dtype=float)
    return np.atleast_2d(x), x.ndim == 1


def camera_log_likelihood(cset: CameraCandidateSet, x):
    """log L_cam for state ``x`` (4,) or particles (N, 4)."""
    states, single = _states2d(x)
    keep, cbar = _confidence_weights(cset.confidence)
    cov = cset.r_cov[keep]
    a, b, c = cov[:, 0, 0], cov[:, 0, 1], cov[:, 1, 1]
    det = a * c - b * b
    asym = np.abs(cov[:, 0, 1] - cov[:, 1, 0])
    if not (np.all(det > 0) and np.all(a > 0) and np.all(np.isfinite(det))) or np.any(
        asym > 1e-12 + 1e-9 * np.abs(b)
    ):
        raise NondegenerateCovarianceRequired("camera candidate covariance is not SPD")
    inv = np.column_stack([c / det, -b / det, a / det])
    with np.errstate(divide="ignore"):
        log_coef = np.log(cset.alpha * cbar) - LOG_2PI - 0.5 * np.log(det)
    ll = kernels.camera_loglik(
        np.ascontiguousarray(states[:, :2]),
        np.ascontiguousarray(cset.z[keep]),
        inv,
        log_coef,
        _log_clutter(cset.alpha, cset.clutter_density),
    )
    return float(ll[0]) if single else ll


def lidar_log_likelihood(lset: LidarCandidateSet, x, pose: LidarPose):
    """log L_lidar for state ``x`` (4,) or particles (N, 4)."""
    states, single = _states2d(x)
    keep, cbar = _confidence_weights(lset.confidence)
    with np.errstate(divide="ignore"):
        log_coef = np.log(lset.alpha * cbar) - LOG_2PI - math.log(lset.sigma_r * lset.sigma_theta)
    inv_var = np.array([1.0 / lset.sigma_r**2, 1.0 / lset.sigma_theta**2])
    ll, dmin = kernels.lidar_loglik(
        np.ascontiguousarray(states[:, :2]),
        pose.position,
        np.ascontiguousarray(lset.z[keep]),
        inv_var,
        log_coef,
        _log_clutter(lset.alpha, lset.clutter_density),
    )
    if dmin < _COINCIDENT_EPS:
        raise CoincidentWithSensor("a particle coincides with the LiDAR position")
    return float(ll[0]) if single else ll


def log_likelihood(mset, x, pose: LidarPose | None = None):
    """Dispatch on the set's sensor type."""
    if mset.sensor == "camera":
        return camera_log_likelihood(mset, x)
    return lidar_log_likelihood(mset, x, pose)


def log_clutter_level(mset) -> float:
    """log of the clutter-only branch, (1 - alpha) * u."""
    return _log_clutter(mset.alpha, mset.clutter_density)
