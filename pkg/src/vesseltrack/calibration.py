"""Static spatial calibration to the world plane.

Pixel -> world uses a planar homography fitted by RANSAC over the normalized
DLT, then refined on the inliers by minimizing world-plane transfer error.
LiDAR scan -> world uses a 2D rigid or similarity transform fitted by RANSAC
over 2-point samples and refined in closed form (Umeyama alignment).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .errors import (
    ConfigError,
    DegenerateGeometry,
    InsufficientCorrespondences,
    NoConsensus,
    PointAtInfinity,
)

_INF_EPS = 1e-12
_COLLINEAR_EPS = 1e-9


@dataclass(frozen=True)
class Homography:
    """3x3 pixel -> world-plane projective map, canonically scaled."""

    h: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float).reshape(3, 3)
        if not np.all(np.isfinite(h)):
            raise DegenerateGeometry("homography has non-finite entries")
        k = int(np.argmax(np.abs(h)))
        h = h / h.flat[k]
        if abs(np.linalg.det(h)) <= 1e-12:
            raise DegenerateGeometry("homography is singular")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    def inverse(self) -> "Homography":
        inv = self.__dict__.get("_inv")
        if inv is None:
            inv = Homography(np.linalg.inv(self.h))
            self.__dict__["_inv"] = inv
        return inv

    def jacobian(self, u) -> np.ndarray:
        """d(world)/d(pixel) at pixel ``u`` (2x2)."""
        a, b, s = self.h @ np.array([u[0], u[1], 1.0])
        if abs(s) <= _INF_EPS:
            raise PointAtInfinity(f"pixel {tuple(u)} maps to infinity")
        p = np.array([a / s, b / s])
        return (self.h[:2, :2] - np.outer(p, self.h[2, :2])) / s


@dataclass(frozen=True)
class PlanarTransform:
    """p_world = kappa * R(theta) @ p_scan + t."""

    theta: float
    t: np.ndarray = field(default_factory=lambda: np.zeros(2))
    kappa: float = 1.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise DegenerateGeometry(f"kappa must be positive, got {self.kappa}")
        t = np.asarray(self.t, dtype=float).reshape(2)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class RansacConfig:
    max_iterations: int = 2000
    inlier_threshold: float = 2.0
    min_inliers: int | None = None
    seed: int = 0
    confidence: float = 0.999  # early stop once an all-inlier sample is this likely

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.inlier_threshold > 0:
            raise ValueError("inlier_threshold must be > 0")
        if not 0 < self.confidence <= 1:
            raise ValueError("confidence must be in (0, 1]")

    def iterations_for(self, inlier_fraction: float, sample_size: int) -> int:
        """Standard adaptive RANSAC budget for the current best inlier ratio."""
        if self.confidence >= 1 or inlier_fraction <= 0:
            return self.max_iterations
        p_good = inlier_fraction**sample_size
        if p_good >= 1:
            return 1
        n = math.log(1 - self.confidence) / math.log(1 - p_good)
        return min(self.max_iterations, max(1, math.ceil(n)))

    def required_inliers(self, sample_size: int) -> int:
        if self.min_inliers is None:
            return sample_size
        if self.min_inliers < sample_size:
            raise ValueError(f"min_inliers must be >= {sample_size}")
        return self.min_inliers


def _as_pairs(src, dst):
    src = np.asarray(src, dtype=float).reshape(-1, 2)
    dst = np.asarray(dst, dtype=float).reshape(-1, 2)
    if src.shape != dst.shape:
        raise ValueError("src and dst must have the same number of points")
    return src, dst


# -- homography -------------------------------------------------------------


def apply_homography(h: Homography, u) -> np.ndarray:
    """Map pixel(s) ``u`` (shape (2,) or (n, 2)) to world meters."""
    u = np.asarray(u, dtype=float)
    pts = np.atleast_2d(u)
    hom = np.column_stack([pts, np.ones(len(pts))]) @ h.h.T
    s = hom[:, 2]
    if np.any(np.abs(s) <= _INF_EPS):
        raise PointAtInfinity("point maps beyond the horizon (|s| <= 1e-12)")
    out = hom[:, :2] / s[:, None]
    return out[0] if u.ndim == 1 else out


def _transfer(hm: np.ndarray, src: np.ndarray) -> np.ndarray:
    hom = np.column_stack([src, np.ones(len(src))]) @ hm.T
    with np.errstate(divide="ignore", invalid="ignore"):
        return hom[:, :2] / hom[:, 2:3]


def _hartley(pts):
    c = pts.mean(axis=0)
    d = np.sqrt(((pts - c) ** 2).sum(axis=1)).mean()
    s = math.sqrt(2.0) / d if d > 0 else 1.0
    return np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])


def dlt_homography(src, dst) -> np.ndarray:
    """Normalized DLT over all given pairs (n >= 4); returns a raw 3x3."""
    src, dst = _as_pairs(src, dst)
    ts, td = _hartley(src), _hartley(dst)
    s = src @ ts[:2, :2].T + ts[:2, 2]
    d = dst @ td[:2, :2].T + td[:2, 2]
    n = len(s)
    a = np.zeros((2 * n, 9))
    x, y = s[:, 0], s[:, 1]
    xp, yp = d[:, 0], d[:, 1]
    a[0::2, 0:3] = np.column_stack([-x, -y, -np.ones(n)])
    a[0::2, 6:9] = np.column_stack([x * xp, y * xp, xp])
    a[1::2, 3:6] = np.column_stack([-x, -y, -np.ones(n)])
    a[1::2, 6:9] = np.column_stack([x * yp, y * yp, yp])
    _, _, vt = np.linalg.svd(a)
    hn = vt[-1].reshape(3, 3)
    return np.linalg.inv(td) @ hn @ ts


def _collinear(p: np.ndarray) -> bool:
    for i, j, k in combinations(range(len(p)), 3):
        e1, e2 = p[j] - p[i], p[k] - p[i]
        cross = abs(e1[0] * e2[1] - e1[1] * e2[0])
        scale = max(e1 @ e1, e2 @ e2, (p[k] - p[j]) @ (p[k] - p[j]))
        if scale == 0 or cross <= _COLLINEAR_EPS * scale:
            return True
    return False


def _refine_homography(hm, src, dst):
    x0 = hm.ravel() / hm.flat[np.argmax(np.abs(hm))]

    def resid(v):
        return (_transfer(v.reshape(3, 3), src) - dst).ravel()

    r0 = resid(x0)
    if not np.all(np.isfinite(r0)) or np.max(np.abs(r0)) < 1e-12:
        return hm
    sol = least_squares(resid, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    cand = sol.x.reshape(3, 3)
    r1 = resid(sol.x)
    if np.all(np.isfinite(r1)) and r1 @ r1 <= r0 @ r0:
        return cand
    return hm


def _draw(rng, n, k, degenerate, max_tries):
    for _ in range(max_tries):
        idx = rng.choice(n, size=k, replace=False)
        if not degenerate(idx):
            return idx
    return None


def estimate_homography(src, dst, cfg: RansacConfig | None = None):
    """Fit pixel -> world homography with RANSAC.

    Returns (Homography, inlier_mask). Minimal samples containing three
    collinear points (in either image) are re-drawn.
    """
    cfg = cfg or RansacConfig()
    src, dst = _as_pairs(src, dst)
    finite = np.all(np.isfinite(src), axis=1) & np.all(np.isfinite(dst), axis=1)
    if finite.sum() < 4:
        raise InsufficientCorrespondences(f"need >= 4 usable pairs, got {int(finite.sum())}")
    need = cfg.required_inliers(4)
    usable = np.flatnonzero(finite)
    rng = np.random.default_rng(cfg.seed)

    def degenerate(idx):
        sel = usable[idx]
        return _collinear(src[sel]) or _collinear(dst[sel])

    best_mask, best_key = None, None
    thr = cfg.inlier_threshold
    budget, it = cfg.max_iterations, 0
    while it < budget:
        it += 1
        idx = _draw(rng, len(usable), 4, degenerate, 100)
        if idx is None:
            break
        sel = usable[idx]
        hm = dlt_homography(src[sel], dst[sel])
        err = np.linalg.norm(_transfer(hm, src) - dst, axis=1)
        mask = np.isfinite(err) & (err <= thr) & finite
        count = int(mask.sum())
        key = (count, -float(np.sum(err[mask] ** 2)))
        if best_key is None or key > best_key:
            best_key, best_mask = key, mask
            budget = cfg.iterations_for(count / len(usable), 4)
    if best_mask is None or best_key[0] < need:
        raise NoConsensus(f"no sample reached {need} inliers")

    hm = dlt_homography(src[best_mask], dst[best_mask])
    hm = _refine_homography(hm, src[best_mask], dst[best_mask])
    h = Homography(hm)
    err = np.linalg.norm(_transfer(h.h, src) - dst, axis=1)
    mask = np.isfinite(err) & (err <= thr) & finite
    return h, mask


# -- planar (LiDAR -> world) -------------------------------------------------


def umeyama_2d(src, dst, with_scale: bool = True) -> PlanarTransform:
    """Closed-form least-squares rigid/similarity alignment src -> dst."""
    src, dst = _as_pairs(src, dst)
    mu_s, mu_d = src.mean(axis=0), dst.mean(axis=0)
    ds, dd = src - mu_s, dst - mu_d
    var_s = (ds**2).sum() / len(src)
    if var_s <= 0:
        raise DegenerateGeometry("all source points coincide")
    cov = dd.T @ ds / len(src)
    u, d, vt = np.linalg.svd(cov)
    sgn = np.eye(2)
    if np.linalg.det(u) * np.linalg.det(vt) < 0:
        sgn[1, 1] = -1.0
    rot = u @ sgn @ vt
    kappa = float(np.trace(np.diag(d) @ sgn) / var_s) if with_scale else 1.0
    t = mu_d - kappa * rot @ mu_s
    return PlanarTransform(math.atan2(rot[1, 0], rot[0, 0]), t, kappa)


def lidar_to_world(tf: PlanarTransform, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return tf.kappa * (p @ tf.rotation.T) + tf.t


def estimate_planar_transform(src, dst, mode: str = "rigid", cfg: RansacConfig | None = None):
    """Fit LiDAR scan -> world transform. ``mode`` is 'rigid' or 'similarity'.

    Returns (PlanarTransform, inlier_mask).
    """
    if mode not in ("rigid", "similarity"):
        raise ValueError(f"mode must be 'rigid' or 'similarity', got {mode!r}")
    cfg = cfg or RansacConfig()
    src, dst = _as_pairs(src, dst)
    if len(src) < 2:
        raise InsufficientCorrespondences(f"need >= 2 pairs, got {len(src)}")
    if np.ptp(src, axis=0).max() == 0:
        raise DegenerateGeometry("all source points coincide")
    need = cfg.required_inliers(2)
    scale = mode == "similarity"
    rng = np.random.default_rng(cfg.seed)

    def degenerate(idx):
        return bool(np.all(src[idx[0]] == src[idx[1]]))

    best_mask, best_key = None, None
    budget, it = cfg.max_iterations, 0
    while it < budget:
        it += 1
        idx = _draw(rng, len(src), 2, degenerate, 100)
        if idx is None:
            break
        tf = umeyama_2d(src[idx], dst[idx], with_scale=scale)
        err = np.linalg.norm(lidar_to_world(tf, src) - dst, axis=1)
        mask = err <= cfg.inlier_threshold
        count = int(mask.sum())
        key = (count, -float(np.sum(err[mask] ** 2)))
        if best_key is None or key > best_key:
            best_key, best_mask = key, mask
            budget = cfg.iterations_for(count / len(src), 2)
    if best_mask is None or best_key[0] < need:
        raise NoConsensus(f"no sample reached {need} inliers")
    tf = umeyama_2d(src[best_mask], dst[best_mask], with_scale=scale)
    err = np.linalg.norm(lidar_to_world(tf, src) - dst, axis=1)
    return tf, err <= cfg.inlier_threshold


def rms_residual(model, src, dst, mask=None) -> float:
    """RMS world-plane residual (meters) over ``mask`` (default: all pairs)."""
    src, dst = _as_pairs(src, dst)
    if isinstance(model, Homography):
        pred = _transfer(model.h, src)
    else:
        pred = lidar_to_world(model, src)
    err = np.linalg.norm(pred - dst, axis=1)
    if mask is not None:
        err = err[np.asarray(mask, dtype=bool)]
    return float(np.sqrt(np.mean(err**2))) if err.size else float("nan")


# -- artifact files -----------------------------------------------------------

SCHEMA = "vesseltrack.calibration/1"


def save_calibration(path, model, inliers: int, rms: float, mode: str | None = None) -> None:
    if isinstance(model, Homography):
        doc = {"schema": SCHEMA, "kind": "homography", "matrix": model.h.tolist()}
    else:
        doc = {
            "schema": SCHEMA,
            "kind": "planar",
            "mode": mode or ("rigid" if model.kappa == 1.0 else "similarity"),
            "theta": model.theta,
            "t": model.t.tolist(),
            "kappa": model.kappa,
        }
    doc["inliers"] = int(inliers)
    doc["rms_residual"] = float(rms)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_calibration(path):
    """Load a calibration artifact; returns Homography or PlanarTransform."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read calibration {path}: {exc}") from exc
    kind = doc.get("kind")
    if kind == "homography":
        return Homography(np.array(doc["matrix"], dtype=float))
    if kind == "planar":
        return PlanarTransform(doc["theta"], np.array(doc["t"]), doc["kappa"])
    raise ConfigError(f"{path}: unknown calibration kind {kind!r}")
