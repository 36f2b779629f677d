"""Synthetic scenario generator: truth trajectory plus LiDAR and camera
candidate streams in their own sensor clocks.

The generator produces candidate *sets* (what the detection pipelines would
hand the tracker), not imagery or raw point clouds. Each sensor draws from
its own sub-stream of the master seed, so adding clutter to one sensor never
perturbs the other.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .calibration import Homography
from .errors import BadWaypoints, ConfigError
from .filter import NOMINAL
from .measurements import (
    CAMERA_COV_FLOOR,
    CameraCandidateSet,
    LidarCandidateSet,
    LidarPose,
    summarize_lidar_points,
    wrap_angle,
)
from .timeline import TimeWarp, warp_time

TRUTH_RATE = 10.0
SEED_LABELS = {"lidar": 1, "camera": 2, "calibration": 3}


def sub_rng(seed: int, label: str) -> np.random.Generator:
    """Generator for a named sub-stream of the master seed."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(SEED_LABELS[label],)))


# -- configuration --------------------------------------------------------------


@dataclass(frozen=True)
class DetectCurve:
    """Logistic detection probability p_max / (1 + exp((d - midpoint) / scale))."""

    p_max: float = 0.95
    midpoint: float = 110.0
    scale: float = 5.0

    def __call__(self, d):
        if self.scale <= 0:
            return self.p_max * (np.asarray(d) <= self.midpoint)
        with np.errstate(over="ignore"):
            return self.p_max / (1.0 + np.exp((np.asarray(d, dtype=float) - self.midpoint) / self.scale))


@dataclass(frozen=True)
class ConfidenceModel:
    """Beta-distributed confidence whose mean falls linearly with range."""

    near: float = 0.9
    slope: float = 0.0  # per meter
    lo: float = 0.3
    hi: float = 0.95
    concentration: float = 20.0

    def mean(self, d) -> float:
        return float(np.clip(self.near - self.slope * d, self.lo, self.hi))

    def draw(self, rng, d) -> float:
        m = self.mean(d)
        return float(rng.beta(m * self.concentration, (1.0 - m) * self.concentration))


@dataclass(frozen=True)
class ClockConfig:
    """Sensor clock: t_sensor = offset + integral of (1 + drift) d t_ref.

    ``drift`` lists fractional rate errors applied to consecutive segments of
    ``anchor_spacing`` seconds (cycled), which yields a piecewise-affine warp.
    """

    offset: float = 0.0
    drift: tuple = (0.0,)
    anchor_spacing: float = 30.0

    def warp(self, t_end: float) -> TimeWarp:
        """Sensor -> reference warp with anchors covering [0, t_end]."""
        n = max(1, math.ceil(t_end / self.anchor_spacing))
        anchors = [(self.offset, 0.0)]
        ts = self.offset
        for i in range(n):
            ts += (1.0 + self.drift[i % len(self.drift)]) * self.anchor_spacing
            anchors.append((ts, (i + 1) * self.anchor_spacing))
        return TimeWarp(tuple(anchors))


@dataclass(frozen=True)
class LidarSimConfig:
    rate: float = 10.0
    phase: float = 0.0
    r_max: float = 130.0
    sigma_r: float = 1.0
    sigma_theta: float = math.radians(0.5)
    detect: DetectCurve = DetectCurve(0.95, 110.0, 5.0)
    min_points: int = 3
    mean_extra_points: float = 20.0
    clutter_rate: float = 0.0
    clutter_beta: tuple = (2.0, 8.0)
    confidence: ConfidenceModel = ConfidenceModel()
    dropout: float = 0.0
    clock: ClockConfig = ClockConfig()


@dataclass(frozen=True)
class CameraSimConfig:
    """Pinhole camera over the water plane plus the detector's output model.

    ``position`` is (x, y, height); yaw is the optical axis heading from +x,
    pitch the depression below the horizon. True-detection noise on the
    plane has covariance pixel_noise^2 J J^T + (position_noise_std +
    noise_growth * d)^2 I, with J the pixel->world Jacobian. Reported
    candidate covariances use the nominal model sigma_px^2 J J^T + cov_floor I.
    """

    rate: float = 12.5
    phase: float = 0.0
    position: tuple = (0.0, 0.0, 100.0)
    yaw: float = 0.0
    pitch: float = math.radians(15.0)
    focal: float = 1732.0
    width: int = 1920
    height: int = 1080
    pixel_noise: float = 5.0
    sigma_px: float = 5.0
    position_noise_std: float = 0.5
    noise_growth: float = 0.0
    cov_floor: float = CAMERA_COV_FLOOR
    detect: DetectCurve = DetectCurve(0.95, 900.0, 100.0)
    clutter_rate: float = 0.0
    clutter_beta: tuple = (2.0, 8.0)
    confidence: ConfidenceModel = ConfidenceModel()
    dropout: float = 0.0
    clock: ClockConfig = ClockConfig()


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    waypoints: tuple  # ((t, x, y), ...)
    duration: float | None = None
    lidar_pose: LidarPose = LidarPose((0.0, 0.0), 0.0)
    lidar: LidarSimConfig = LidarSimConfig()
    camera: CameraSimConfig = CameraSimConfig()
    surveillance: tuple = (-500.0, 500.0, -500.0, 500.0)  # xmin, xmax, ymin, ymax
    zone_center: tuple = (0.0, 0.0)
    r1: float = 325.0
    r2: float = 650.0
    bin_width: float = 0.2
    alpha_camera: float = 0.9
    alpha_lidar: float = 0.9
    tracker: dict = field(default_factory=dict)

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float)
        if wp.ndim != 2 or wp.shape[1] != 3 or len(wp) < 2:
            raise BadWaypoints("need at least 2 waypoints of (t, x, y)")
        if not np.all(np.isfinite(wp)) or np.any(np.diff(wp[:, 0]) <= 0):
            raise BadWaypoints("waypoint times must be finite and strictly increasing")
        if self.lidar.rate <= 0 or self.camera.rate <= 0:
            raise ConfigError("sensor rates must be > 0")
        if self.lidar.r_max <= 0:
            raise ConfigError("r_max must be > 0")
        if not 0 < self.r1 < self.r2:
            raise ConfigError("zone radii must satisfy 0 < r1 < r2")
        xmin, xmax, ymin, ymax = self.surveillance
        if not (xmax > xmin and ymax > ymin):
            raise ConfigError("surveillance rectangle is empty")

    @property
    def t_end(self) -> float:
        return float(self.duration) if self.duration is not None else float(self.waypoints[-1][0])

    @property
    def surveillance_area(self) -> float:
        xmin, xmax, ymin, ymax = self.surveillance
        return (xmax - xmin) * (ymax - ymin)

    @property
    def lidar_clutter_density(self) -> float:
        """Uniform density on (0, r_max] x (-pi, pi]."""
        return 1.0 / (self.lidar.r_max * 2.0 * math.pi)

    @property
    def camera_clutter_density(self) -> float:
        return 1.0 / self.surveillance_area


def _sub(cls, d, **conv):
    d = dict(d or {})
    for k, f in conv.items():
        if k in d:
            d[k] = f(d[k])
    unknown = set(d) - set(cls.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**d)


def _clock(d):
    d = dict(d)
    if "drift" in d:
        dr = d["drift"]
        d["drift"] = tuple(dr) if isinstance(dr, (list, tuple)) else (float(dr),)
    return _sub(ClockConfig, d)


def _sensor_conv():
    return {
        "detect": lambda d: _sub(DetectCurve, d),
        "confidence": lambda d: _sub(ConfidenceModel, d),
        "clock": _clock,
        "clutter_beta": tuple,
    }


def config_from_dict(d: dict) -> ScenarioConfig:
    d = dict(d)
    try:
        lidar = dict(d.pop("lidar", {}))
        if "sigma_theta_deg" in lidar:
            lidar["sigma_theta"] = math.radians(lidar.pop("sigma_theta_deg"))
        camera = dict(d.pop("camera", {}))
        for k in ("yaw_deg", "pitch_deg"):
            if k in camera:
                camera[k[:-4]] = math.radians(camera.pop(k))
        pose = d.pop("lidar_pose", {"position": [0, 0], "yaw": 0})
        yaw = math.radians(pose["yaw_deg"]) if "yaw_deg" in pose else pose.get("yaw", 0.0)
        zones = d.pop("zones", {})
        cfg = ScenarioConfig(
            name=d.pop("name", "scenario"),
            seed=int(d.pop("seed", 0)),
            waypoints=tuple(tuple(map(float, w)) for w in d.pop("waypoints")),
            lidar_pose=LidarPose(pose["position"], yaw),
            lidar=_sub(LidarSimConfig, lidar, **_sensor_conv()),
            camera=_sub(CameraSimConfig, camera, position=tuple, **_sensor_conv()),
            surveillance=tuple(d.pop("surveillance", ScenarioConfig.surveillance)),
            zone_center=tuple(zones.get("center", (0.0, 0.0))),
            r1=float(zones.get("r1", 325.0)),
            r2=float(zones.get("r2", 650.0)),
            **d,
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed scenario config: {exc}") from exc
    return cfg


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Inverse of ``config_from_dict`` (angles in radians)."""

    def plain(v):
        if hasattr(v, "__dataclass_fields__"):
            return {k: plain(getattr(v, k)) for k in v.__dataclass_fields__}
        if isinstance(v, (tuple, list, np.ndarray)):
            return [plain(x) for x in v]
        if isinstance(v, np.generic):
            return v.item()
        return v

    return {
        "name": cfg.name,
        "seed": cfg.seed,
        "waypoints": plain(cfg.waypoints),
        "duration": cfg.duration,
        "lidar_pose": {"position": plain(cfg.lidar_pose.position), "yaw": cfg.lidar_pose.yaw},
        "lidar": plain(cfg.lidar),
        "camera": plain(cfg.camera),
        "surveillance": plain(cfg.surveillance),
        "zones": {"center": plain(cfg.zone_center), "r1": cfg.r1, "r2": cfg.r2},
        "bin_width": cfg.bin_width,
        "alpha_camera": cfg.alpha_camera,
        "alpha_lidar": cfg.alpha_lidar,
        "tracker": dict(cfg.tracker),
    }


def load_scenario(path_or_name) -> ScenarioConfig:
    """Load a scenario JSON file, or a bundled scenario by name."""
    p = Path(path_or_name)
    if p.suffix != ".json" and not p.exists():
        res = resources.files("vesseltrack") / "scenarios" / f"{path_or_name}.json"
        if not res.is_file():
            raise ConfigError(f"no scenario file or bundled scenario named {path_or_name!r}")
        text = res.read_text()
    else:
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read scenario config {p}: {exc.strerror}") from exc
    try:
        return config_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario config {path_or_name} is not valid JSON: {exc}") from exc


# -- truth -------------------------------------------------------------------


@dataclass
class TruthTrack:
    t: np.ndarray
    position: np.ndarray
    velocity: np.ndarray

    @property
    def samples(self):
        return list(zip(self.t.tolist(), self.position, self.velocity))

    def __len__(self):
        return len(self.t)


def truth_state(cfg: ScenarioConfig, t):
    """Exact polyline position and segment velocity at time(s) t.

    Before the first waypoint and from the last one on, the vessel sits at
    the end point with zero velocity.
    """
    wp = np.asarray(cfg.waypoints, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    pos = np.column_stack([np.interp(t, wp[:, 0], wp[:, 1]), np.interp(t, wp[:, 0], wp[:, 2])])
    seg = np.clip(np.searchsorted(wp[:, 0], t, side="right") - 1, 0, len(wp) - 2)
    slope = (wp[seg + 1, 1:] - wp[seg, 1:]) / (wp[seg + 1, 0] - wp[seg, 0])[:, None]
    moving = (t >= wp[0, 0]) & (t < wp[-1, 0])
    vel = np.where(moving[:, None], slope, 0.0)
    return pos, vel


def generate_truth(cfg: ScenarioConfig, rate: float = TRUTH_RATE) -> TruthTrack:
    t0 = float(cfg.waypoints[0][0])
    n = int(math.floor((cfg.t_end - t0) * rate + 1e-9)) + 1
    t = t0 + np.arange(n) / rate
    pos, vel = truth_state(cfg, t)
    return TruthTrack(t, pos, vel)


# -- camera geometry -----------------------------------------------------------


class CameraModel:
    """Pinhole camera looking at the z = 0 water plane."""

    def __init__(self, cc: CameraSimConfig):
        self.cc = cc
        self.c = np.asarray(cc.position, dtype=float)
        cy, sy = math.cos(cc.yaw), math.sin(cc.yaw)
        cp, sp = math.cos(cc.pitch), math.sin(cc.pitch)
        fwd = np.array([cp * cy, cp * sy, -sp])
        right = np.array([sy, -cy, 0.0])
        down = np.cross(fwd, right)
        self.rot = np.vstack([right, down, fwd])  # world -> camera axes
        self.k = np.array([[cc.focal, 0.0, cc.width / 2.0], [0.0, cc.focal, cc.height / 2.0], [0.0, 0.0, 1.0]])
        rt = np.column_stack([self.rot[:, 0], self.rot[:, 1], -self.rot @ self.c])
        self.world_to_pixel_h = self.k @ rt
        self.homography = Homography(np.linalg.inv(self.world_to_pixel_h))

    def project(self, p):
        """World plane point(s) (n, 2) -> (pixels (n, 2), depth (n,))."""
        p = np.atleast_2d(np.asarray(p, dtype=float))
        hom = np.column_stack([p, np.ones(len(p))]) @ self.world_to_pixel_h.T
        return hom[:, :2] / hom[:, 2:3], hom[:, 2]

    def in_view(self, p) -> np.ndarray:
        uv, depth = self.project(p)
        return (depth > 0) & (uv[:, 0] >= 0) & (uv[:, 0] <= self.cc.width) & (uv[:, 1] >= 0) & (uv[:, 1] <= self.cc.height)

    def jacobians(self, p) -> np.ndarray:
        """Pixel -> world Jacobians (n, 2, 2) at world point(s) p."""
        uv, _ = self.project(p)
        h = self.homography.h
        hom = np.column_stack([uv, np.ones(len(uv))]) @ h.T
        s = hom[:, 2]
        w = hom[:, :2] / s[:, None]
        return (h[None, :2, :2] - w[:, :, None] * h[None, None, 2, :2]) / s[:, None, None]

    def ground_range(self, p) -> np.ndarray:
        p = np.atleast_2d(np.asarray(p, dtype=float))
        return np.hypot(p[:, 0] - self.c[0], p[:, 1] - self.c[1])

    def pixel_pairs(self, n_grid=(6, 4), margin=0.1):
        """Grid of in-image pixels with their exact world points."""
        cc = self.cc
        us = np.linspace(margin * cc.width, (1 - margin) * cc.width, n_grid[0])
        vs = np.linspace(cc.height * 0.45, (1 - margin) * cc.height, n_grid[1])
        px = np.array([(u, v) for v in vs for u in us])
        hom = np.column_stack([px, np.ones(len(px))]) @ self.homography.h.T
        return px, hom[:, :2] / hom[:, 2:3]


# -- streams -------------------------------------------------------------------


def schedule(rate: float, phase: float, t_end: float) -> np.ndarray:
    """Reference-clock sample times phase + k / rate within [0, t_end)."""
    n = int(math.ceil((t_end - phase) * rate - 1e-9))
    return phase + np.arange(max(n, 0)) / rate


def _emit_times(ts_ref, clock: ClockConfig, t_end: float):
    w = clock.warp(t_end)
    return warp_time(w.inverse(), ts_ref), w


def simulate_lidar(truth_or_cfg, cfg: ScenarioConfig | None = None):
    """LiDAR stream as (t_sensor list, candidate sets, sensor->ref warp)."""
    cfg = truth_or_cfg if cfg is None else cfg
    lc, pose = cfg.lidar, cfg.lidar_pose
    rng = sub_rng(cfg.seed, "lidar")
    t_ref = schedule(lc.rate, lc.phase, cfg.t_end)
    pos, _ = truth_state(cfg, t_ref)
    dx = pos - pose.position
    rng_true = np.hypot(dx[:, 0], dx[:, 1])
    brg_true = np.arctan2(dx[:, 1], dx[:, 0])
    pd = lc.detect(rng_true)
    density = cfg.lidar_clutter_density
    # a noiseless simulated sensor still needs a nonzero nominal model
    kw = dict(
        alpha=cfg.alpha_lidar, clutter_density=density,
        sigma_r=lc.sigma_r or NOMINAL["sigma_r"], sigma_theta=lc.sigma_theta or NOMINAL["sigma_theta"],
    )

    keep_t, sets = [], []
    for k in range(len(t_ref)):
        if lc.dropout > 0 and rng.random() < lc.dropout:
            continue
        z, conf = [], []
        r = rng_true[k]
        if rng.random() < pd[k] and r <= lc.r_max:
            n = lc.min_points + int(rng.poisson(lc.mean_extra_points))
            rr = r + lc.sigma_r * rng.standard_normal(n)
            bb = brg_true[k] + lc.sigma_theta * rng.standard_normal(n)
            rs, bs = summarize_lidar_points(rr, bb)
            if 0 < rs <= lc.r_max:
                z.append((rs, bs))
                conf.append(lc.confidence.draw(rng, r))
        nc = int(rng.poisson(lc.clutter_rate))
        if nc:
            u = rng.random((nc, 2))
            z.extend(zip(lc.r_max * (1.0 - u[:, 0]), wrap_angle(np.pi - 2.0 * np.pi * u[:, 1])))
            conf.extend(rng.beta(*lc.clutter_beta, size=nc).tolist())
        keep_t.append(t_ref[k])
        sets.append(LidarCandidateSet(z or None, conf or None, **kw))
    ts, warp = _emit_times(np.asarray(keep_t), lc.clock, cfg.t_end)
    return list(zip(np.atleast_1d(ts).tolist(), sets)), warp


def simulate_camera(truth_or_cfg, cfg: ScenarioConfig | None = None):
    """Camera stream as (list of (t_sensor, set), sensor->ref warp)."""
    cfg = truth_or_cfg if cfg is None else cfg
    cc = cfg.camera
    cam = CameraModel(cc)
    rng = sub_rng(cfg.seed, "camera")
    t_ref = schedule(cc.rate, cc.phase, cfg.t_end)
    pos, _ = truth_state(cfg, t_ref)
    visible = cam.in_view(pos)
    d_true = cam.ground_range(pos)
    pd = cc.detect(d_true)
    xmin, xmax, ymin, ymax = cfg.surveillance
    kw = dict(alpha=cfg.alpha_camera, clutter_density=cfg.camera_clutter_density)

    jac_true = cam.jacobians(pos)
    keep_t, frames = [], []
    for k in range(len(t_ref)):
        if cc.dropout > 0 and rng.random() < cc.dropout:
            continue
        z, conf = [], []
        if rng.random() < pd[k] and visible[k]:
            s_iso = cc.position_noise_std + cc.noise_growth * d_true[k]
            n = rng.standard_normal(4)
            z.append(pos[k] + cc.pixel_noise * (jac_true[k] @ n[:2]) + s_iso * n[2:])
            conf.append(cc.confidence.draw(rng, d_true[k]))
        nc = int(rng.poisson(cc.clutter_rate))
        if nc:
            u = rng.random((nc, 2))
            z.extend(np.column_stack([xmin + (xmax - xmin) * u[:, 0], ymin + (ymax - ymin) * u[:, 1]]))
            conf.extend(rng.beta(*cc.clutter_beta, size=nc).tolist())
        keep_t.append(t_ref[k])
        frames.append((z, conf))

    # reported covariances for every candidate in one vectorized pass
    all_z = np.array([p for z, _ in frames for p in z]).reshape(-1, 2)
    jacs = cam.jacobians(all_z) if len(all_z) else np.zeros((0, 2, 2))
    all_cov = cc.sigma_px**2 * jacs @ jacs.transpose(0, 2, 1) + cc.cov_floor * np.eye(2)
    sets, at = [], 0
    for z, conf in frames:
        m = len(z)
        if m:
            sets.append(CameraCandidateSet(all_z[at : at + m], all_cov[at : at + m], conf, **kw))
        else:
            sets.append(CameraCandidateSet(**kw))
        at += m
    ts, warp = _emit_times(np.asarray(keep_t), cc.clock, cfg.t_end)
    return list(zip(np.atleast_1d(ts).tolist(), sets)), warp


@dataclass
class Simulation:
    cfg: ScenarioConfig
    truth: TruthTrack
    lidar: list
    camera: list
    warps: dict

    def reference_streams(self) -> dict:
        """Streams with timestamps mapped back onto the reference clock."""
        out = {}
        for s in ("camera", "lidar"):
            ev = getattr(self, s)
            if not ev:
                out[s] = []
                continue
            tr = np.atleast_1d(warp_time(self.warps[s], [t for t, _ in ev]))
            out[s] = list(zip(tr.tolist(), (m for _, m in ev)))
        return out


def simulate(cfg: ScenarioConfig) -> Simulation:
    truth = generate_truth(cfg)
    lidar, lw = simulate_lidar(cfg)
    camera, cw = simulate_camera(cfg)
    return Simulation(cfg, truth, lidar, camera, {"lidar": lw, "camera": cw})


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(cfg, seed=int(seed))
