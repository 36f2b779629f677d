"""Zone-stratified metrics, lost-bin labeling and the Monte Carlo protocol."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyZone
from .fusion import ALL_MODES, FusionMode
from .pipeline import build_bins, sensor_suite, tracker_config
from .simulator import ScenarioConfig, simulate, with_seed
from .tracker import run_tracker

ZONES = (1, 2, 3)
MIN_VALID = 10
Z95 = 1.96


@dataclass(frozen=True)
class ZoneGeometry:
    center: tuple = (0.0, 0.0)
    r1: float = 325.0
    r2: float = 650.0

    def __post_init__(self):
        if not 0 < self.r1 < self.r2:
            raise ValueError("zone radii must satisfy 0 < r1 < r2")

    @classmethod
    def from_scenario(cls, cfg: ScenarioConfig) -> "ZoneGeometry":
        return cls(tuple(cfg.zone_center), cfg.r1, cfg.r2)


def assign_zone(p, geom: ZoneGeometry) -> int:
    d = math.hypot(p[0] - geom.center[0], p[1] - geom.center[1])
    if d <= geom.r1:
        return 1
    return 2 if d <= geom.r2 else 3


def assign_zones(points, geom: ZoneGeometry) -> np.ndarray:
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    d = np.hypot(p[:, 0] - geom.center[0], p[:, 1] - geom.center[1])
    return np.where(d <= geom.r1, 1, np.where(d <= geom.r2, 2, 3))


def position_error(est, truth):
    """Planar Euclidean error; NaN estimates give NaN."""
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    e = np.hypot(est[..., 0] - truth[..., 0], est[..., 1] - truth[..., 1])
    return float(e) if np.ndim(e) == 0 else e


@dataclass(frozen=True)
class LostLabelerConfig:
    e_lost: float = 50.0
    n_consecutive: int = 5

    def __post_init__(self):
        if not self.e_lost > 0:
            raise ValueError("e_lost must be > 0")
        if self.n_consecutive < 1:
            raise ValueError("n_consecutive must be >= 1")


def bad_bins(errors, e_lost: float) -> np.ndarray:
    e = np.asarray(errors, dtype=float)
    return ~(np.isfinite(e) & (e <= e_lost))


def label_lost(errors, cfg: LostLabelerConfig = LostLabelerConfig()) -> np.ndarray:
    """Two-state hysteresis over bad bins with retroactive relabeling.

    Enter LOST after n consecutive bad bins, leave after n consecutive good
    ones; on each switch the trailing n bins take the new label.
    """
    bad = bad_bins(errors, cfg.e_lost)
    n = cfg.n_consecutive
    out = np.zeros(len(bad), dtype=bool)
    lost, run = False, 0
    for k, b in enumerate(bad):
        run = run + 1 if b != lost else 0
        if run >= n:
            lost, run = not lost, 0
            out[k - n + 1 : k + 1] = lost
        else:
            out[k] = lost
    return out


@dataclass
class BinRecord:
    index: int
    t_ref: float
    error: float
    zone: int
    lost: bool
    selected: str = ""


@dataclass
class ZoneMetrics:
    zone: int
    bin_count: int
    valid_count: int
    rmse: float | None
    lost_pct: float


def zone_rmse(records, zone: int, min_valid: int = MIN_VALID):
    """RMSE over the zone's finite-error bins, or None when too few."""
    e = np.array([r.error for r in records if r.zone == zone], dtype=float)
    e = e[np.isfinite(e)]
    if len(e) == 0 or len(e) < min_valid:
        return None
    # scaled so that a zone of identical errors k returns exactly k
    m = float(np.abs(e).max())
    if m == 0.0:
        return 0.0
    return m * float(np.sqrt(np.mean((e / m) ** 2)))


def zone_lost_pct(records, zone: int) -> float:
    lost = [r.lost for r in records if r.zone == zone]
    if not lost:
        raise EmptyZone(f"zone {zone} holds no bins")
    return 100.0 * sum(lost) / len(lost)


@dataclass
class RunReport:
    run: int
    seed: int
    mode: str
    zones: dict
    records: list
    both_available_zone1: int = 0  # adaptive: zone-1 bins scored with both sensors present
    lidar_picks_zone1: int = 0

    @property
    def lidar_share_zone1(self):
        if not self.both_available_zone1:
            return None
        return self.lidar_picks_zone1 / self.both_available_zone1


def evaluate_run(bins, result, geom: ZoneGeometry, lost_cfg=LostLabelerConfig(), min_valid=MIN_VALID, run=0, seed=0):
    """Score one tracker run against the truth stored in ``bins``."""
    truth = np.array([b.truth for b in bins], dtype=float).reshape(-1, 2)
    est = result.positions()
    errors = position_error(est, truth)
    zones = assign_zones(truth, geom)
    lost = label_lost(errors, lost_cfg)
    sel = {s.index: s.selected for s in result.selections}
    records = [
        BinRecord(b.index, b.t_ref, float(e), int(z), bool(l), sel.get(b.index, ""))
        for b, e, z, l in zip(bins, errors, zones, lost)
    ]
    metrics = {}
    for z in ZONES:
        try:
            pct = zone_lost_pct(records, z)
        except EmptyZone as exc:
            raise EmptyZone(f"run {run}, mode {result.mode.value}: {exc}") from None
        metrics[z] = ZoneMetrics(
            z, int((zones == z).sum()), int(np.isfinite(errors[zones == z]).sum()), zone_rmse(records, z, min_valid), pct
        )
    rep = RunReport(run, seed, result.mode.value, metrics, records)
    if result.mode is FusionMode.ADAPTIVE:
        both = [
            sel[b.index]
            for b, z in zip(bins, zones)
            if z == 1 and b.has("lidar") and b.has("camera") and sel.get(b.index) in ("lidar", "camera")
        ]
        rep.both_available_zone1 = len(both)
        rep.lidar_picks_zone1 = sum(s == "lidar" for s in both)
    return rep


# -- Monte Carlo ----------------------------------------------------------------


def run_seeds(master_seed: int, run: int) -> tuple[int, int]:
    """(simulation seed, filter seed) for run ``run`` of a sweep."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(run),))
    sim, filt = ss.generate_state(2, dtype=np.uint64)
    return int(sim), int(filt)


def mean_ci(values):
    """Mean and normal-approximation 95% interval; None when empty."""
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if len(v) == 0:
        return None, None, 0
    m = float(np.mean(v))
    half = Z95 * float(np.std(v, ddof=1)) / math.sqrt(len(v)) if len(v) > 1 else 0.0
    return m, (m - half, m + half), len(v)


@dataclass
class AggregateRow:
    mode: str
    zone: int
    bins_mean: float
    rmse_mean: float | None
    rmse_ci: tuple | None
    rmse_defined_runs: int
    lost_pct_mean: float
    lost_pct_ci: tuple


@dataclass
class AggregateReport:
    scenario: str
    master_seed: int
    n_runs: int
    modes: list
    rows: list
    lidar_share_zone1: dict = field(default_factory=dict)
    runs: list = field(default_factory=list)

    def row(self, mode, zone) -> AggregateRow:
        mode = FusionMode(mode).value
        for r in self.rows:
            if r.mode == mode and r.zone == zone:
                return r
        raise KeyError((mode, zone))


def aggregate(runs, modes, n_runs, scenario="", master_seed=0) -> AggregateReport:
    """Reduce per-run reports in run order.

    A (mode, zone) RMSE is reported only when at least half of the runs
    define it; the mean then covers the defining runs.
    """
    rows = []
    for mode in modes:
        mode = FusionMode(mode).value
        mine = [r for r in runs if r.mode == mode]
        for z in ZONES:
            zm = [r.zones[z] for r in mine]
            rm, rci, nd = mean_ci([m.rmse for m in zm])
            if nd * 2 < len(zm):
                rm, rci = None, None
            lm, lci, _ = mean_ci([m.lost_pct for m in zm])
            rows.append(AggregateRow(mode, z, float(np.mean([m.bin_count for m in zm])), rm, rci, nd, lm, lci))
    share = {}
    ad = [r for r in runs if r.mode == FusionMode.ADAPTIVE.value]
    if ad:
        picks = sum(r.lidar_picks_zone1 for r in ad)
        total = sum(r.both_available_zone1 for r in ad)
        m, ci, _ = mean_ci([r.lidar_share_zone1 for r in ad])
        share = {"pooled": picks / total if total else None, "mean": m, "ci": ci, "bins": total}
    return AggregateReport(scenario, int(master_seed), int(n_runs), [FusionMode(m).value for m in modes], rows, share, list(runs))


def run_monte_carlo(
    scenario: ScenarioConfig,
    modes=ALL_MODES,
    n_runs: int = 200,
    master_seed: int | None = None,
    geom: ZoneGeometry | None = None,
    lost_cfg: LostLabelerConfig = LostLabelerConfig(),
    min_valid: int = MIN_VALID,
    suite=None,
    tracker_cfg=None,
    progress=None,
) -> AggregateReport:
    """Simulate, track and score ``n_runs`` runs of every mode.

    Each run re-simulates the scenario from its own seed; within a run all
    modes share the binned timeline and the filter seed.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    master = scenario.seed if master_seed is None else int(master_seed)
    geom = geom or ZoneGeometry.from_scenario(scenario)
    suite = suite or sensor_suite(scenario)
    tcfg = tracker_cfg or tracker_config(scenario)
    modes = [FusionMode(m) for m in modes]
    runs = []
    for r in range(n_runs):
        sim_seed, filt_seed = run_seeds(master, r)
        bins = build_bins(simulate(with_seed(scenario, sim_seed)))
        for mode in modes:
            res = run_tracker(bins, mode, suite, tcfg, seed=filt_seed)
            runs.append(evaluate_run(bins, res, geom, lost_cfg, min_valid, run=r, seed=filt_seed))
        if progress:
            progress(r + 1, n_runs)
    return aggregate(runs, modes, n_runs, scenario.name, master)
