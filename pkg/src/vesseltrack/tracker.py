"""Runs the particle filter over a fused-bin timeline.

Besides the per-bin predict/update/resample/estimate per bin, the runner
keeps a small amount of track bookkeeping so that estimates can be reported
as invalid (NaN) when the filter has nothing to stand on:

* a bin is a *hit* when some applied measurement set is more likely
  target-originated than clutter (posterior target probability >= 0.5);
* a new track is *tentative* until it collects ``confirm_hits`` hits
  (the seeding detection excluded); while tentative, a bin with usable
  detections but no hit re-seeds the filter from that bin;
* a track that goes ``max_coast`` seconds without a hit is dropped and
  re-initialized at the next bin with usable detections.

Only confirmed, non-dropped tracks report finite estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .filter import NOMINAL, InitParams, ProcessNoiseParams, initialize
from .fusion import FusionMode, SensorSuite, available_sensors, run_bin

NONE, TENTATIVE, CONFIRMED = "none", "tentative", "confirmed"
_NAN4 = np.full(4, np.nan)


@dataclass(frozen=True)
class TrackerConfig:
    n_particles: int = NOMINAL["n_particles"]
    resample_threshold: float = NOMINAL["resample_threshold"]
    sigma_a: float = NOMINAL["sigma_a"]
    sigma_v0: float = 2.0
    max_coast: float = 5.0
    hit_threshold: float = 0.5
    confirm_hits: int = 2

    @classmethod
    def from_dict(cls, d: dict) -> "TrackerConfig":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        return cls(**known)


@dataclass
class EstimateRecord:
    index: int
    t_ref: float
    state: np.ndarray
    ess: float = math.nan
    did_resample: bool = False
    selected: tuple = ()
    status: str = NONE


@dataclass
class SelectionRecord:
    index: int
    mode: str
    h_prior: float = math.nan
    h_post: dict = field(default_factory=dict)
    ig: dict = field(default_factory=dict)
    selected: str = ""


@dataclass
class TrackResult:
    mode: FusionMode
    estimates: list
    selections: list

    def positions(self) -> np.ndarray:
        return np.array([r.state[:2] for r in self.estimates]).reshape(-1, 2)


def run_tracker(bins, mode, suite: SensorSuite, cfg: TrackerConfig = TrackerConfig(), seed=0) -> TrackResult:
    """Filter a bin sequence under one fusion configuration."""
    mode = FusionMode(mode)
    rng = np.random.default_rng(seed)
    q = ProcessNoiseParams(cfg.sigma_a)
    init = InitParams(cfg.sigma_v0)
    ps, status, hits = None, NONE, 0
    last_hit = last_t = -math.inf
    estimates, selections = [], []

    for b in bins:
        t = b.t_ref
        usable = any(b.has(s) for s in mode.sensors)
        log = None
        if ps is not None:
            ps, log = run_bin(ps, b, mode, suite, t - last_t, q, cfg.resample_threshold)
            if any(p >= cfg.hit_threshold for p in log.target_prob.values()):
                hits += 1
                last_hit = t
                if hits >= cfg.confirm_hits:
                    status = CONFIRMED
            elif status == TENTATIVE and usable:
                ps = None
            if ps is not None and t - last_hit > cfg.max_coast:
                ps = None
            last_t = t
        reseeded = False
        if ps is None:
            status = NONE
            if usable:
                ps = initialize(b, init, cfg.n_particles, rng, suite.lidar_pose, mode.sensors)
                status, hits, last_hit, last_t, reseeded = TENTATIVE, 0, t, t, True

        valid = status == CONFIRMED and not reseeded and log is not None
        state = log.estimate if valid else _NAN4.copy()
        estimates.append(
            EstimateRecord(
                b.index, t, state,
                ess=log.ess if log else math.nan,
                did_resample=log.did_resample if log else False,
                selected=log.applied if log else (),
                status=status,
            )
        )
        if available_sensors(b):
            sel = SelectionRecord(b.index, mode.value)
            if log is not None and log.report is not None:
                r = log.report
                sel.h_prior, sel.h_post, sel.ig, sel.selected = r.h_prior, r.h_post, r.ig, r.selected
            elif log is not None:
                sel.selected = "+".join(log.applied)
            if reseeded:
                sel.selected = "init"
            selections.append(sel)
    return TrackResult(mode, estimates, selections)
