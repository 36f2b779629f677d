import math
from itertools import product

import numpy as np
import pytest

from conftest import small_scenario
from oracles import lost_labels_reference
from vesseltrack.errors import EmptyZone
from vesseltrack.evaluation import (
    BinRecord,
    LostLabelerConfig,
    ZoneGeometry,
    aggregate,
    assign_zone,
    assign_zones,
    label_lost,
    mean_ci,
    position_error,
    run_monte_carlo,
    run_seeds,
    zone_lost_pct,
    zone_rmse,
)
from vesseltrack.fusion import FusionMode

GEOM = ZoneGeometry((0.0, 0.0), 325.0, 650.0)


def rec(errors, zone=1, lost=None):
    lost = lost or [False] * len(errors)
    return [BinRecord(i, 0.2 * i, e, zone, l) for i, (e, l) in enumerate(zip(errors, lost))]


class TestZones:
    def test_examples(self):
        assert assign_zone((325.0, 0.0), GEOM) == 1
        assert assign_zone((300.0, 400.0), GEOM) == 2
        assert assign_zone((0.0, -651.0), GEOM) == 3

    def test_vectorized_matches_scalar(self):
        pts = np.random.default_rng(0).uniform(-900, 900, (500, 2))
        assert assign_zones(pts, GEOM).tolist() == [assign_zone(p, GEOM) for p in pts]

    def test_bad_geometry(self):
        with pytest.raises(ValueError):
            ZoneGeometry((0, 0), 500.0, 400.0)


def test_position_error_examples():
    assert position_error([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert position_error([4.0, 6.0], [1.0, 2.0]) == 5.0
    assert math.isnan(position_error([math.nan, 0.0], [0.0, 0.0]))


class TestLostLabeler:
    def test_all_good(self):
        assert not label_lost([10.0] * 20).any()

    def test_four_bad(self):
        assert not label_lost([100.0] * 4 + [1.0] * 10).any()

    def test_seven_bad_seven_good(self):
        out = label_lost([100.0] * 7 + [1.0] * 7)
        assert out.tolist() == [True] * 7 + [False] * 7

    def test_nan_is_bad(self):
        assert label_lost([math.nan] * 5).all()

    def test_boundary_is_good(self):
        assert not label_lost([50.0] * 6).any()

    def test_exhaustive_against_oracle(self):
        cfg = LostLabelerConfig(50.0, 5)
        for n in range(15):
            for bits in product((False, True), repeat=n):
                errs = [100.0 if b else 0.0 for b in bits]
                assert label_lost(errs, cfg).tolist() == lost_labels_reference(bits, 5), bits

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_other_window_lengths(self, n):
        rng = np.random.default_rng(n)
        for _ in range(300):
            bits = (rng.random(int(rng.integers(0, 30))) < 0.5).tolist()
            got = label_lost([100.0 if b else 0.0 for b in bits], LostLabelerConfig(50.0, n))
            assert got.tolist() == lost_labels_reference(bits, n)


class TestZoneMetrics:
    def test_rmse_example(self):
        assert zone_rmse(rec([3.0, 4.0]), 1, min_valid=1) == pytest.approx(math.sqrt(12.5))

    def test_rmse_undefined(self):
        assert zone_rmse(rec([math.nan] * 20), 1) is None
        assert zone_rmse(rec([1.0] * 9), 1, min_valid=10) is None
        assert zone_rmse(rec([1.0] * 3), 2, min_valid=0) is None

    def test_rmse_nan_excluded(self):
        errs = [3.0, math.nan, 4.0, math.nan] * 5
        finite = [e for e in errs if not math.isnan(e)]
        ref = math.sqrt(sum(e * e for e in finite) / len(finite))
        assert zone_rmse(rec(errs), 1) == pytest.approx(ref, rel=1e-15)

    @pytest.mark.parametrize("k", [0.0, 0.1, 2.5, 17.0, 1e3])
    def test_rmse_constant(self, k):
        assert zone_rmse(rec([k] * 12), 1) == k

    def test_lost_pct(self):
        assert zone_lost_pct(rec([1.0] * 4), 1) == 0.0
        assert zone_lost_pct(rec([1.0] * 4, lost=[True] * 4), 1) == 100.0
        assert zone_lost_pct(rec([1.0] * 12, lost=[True] * 3 + [False] * 9), 1) == 25.0
        with pytest.raises(EmptyZone):
            zone_lost_pct(rec([1.0] * 4), 3)


class TestMonteCarlo:
    def test_run_seeds_distinct_and_stable(self):
        seeds = [run_seeds(7, r) for r in range(50)]
        assert len({s for pair in seeds for s in pair}) == 100
        assert run_seeds(7, 3) == seeds[3]

    def test_mean_ci(self):
        m, ci, n = mean_ci([2.0])
        assert (m, ci, n) == (2.0, (2.0, 2.0), 1)
        m, ci, n = mean_ci([1.0, 3.0, None])
        half = 1.96 * math.sqrt(2) / math.sqrt(2)
        assert m == 2.0 and ci == pytest.approx((2 - half, 2 + half)) and n == 2
        assert mean_ci([None]) == (None, None, 0)

    @pytest.fixture(scope="class")
    @classmethod
    def sweep(cls):
        cfg = small_scenario(
            waypoints=((0.0, 20.0, -40.0), (10.0, 20.0, -10.0), (20.0, 400.0, 0.0), (30.0, 800.0, 0.0)),
            surveillance=(-100.0, 900.0, -200.0, 200.0),
        )
        return cfg, run_monte_carlo(cfg, n_runs=3, master_seed=5)

    def test_shape(self, sweep):
        _, rep = sweep
        assert len(rep.rows) == 12 and len(rep.runs) == 12
        assert rep.modes == [m.value for m in FusionMode]

    def test_deterministic(self, sweep):
        cfg, rep = sweep
        again = run_monte_carlo(cfg, n_runs=3, master_seed=5)
        assert again.rows == rep.rows and again.lidar_share_zone1 == rep.lidar_share_zone1

    def test_single_run_ci_zero(self, sweep):
        cfg, _ = sweep
        rep = run_monte_carlo(cfg, [FusionMode.CAMERA_ONLY], n_runs=1, master_seed=5)
        for row in rep.rows:
            assert row.lost_pct_ci == (row.lost_pct_mean, row.lost_pct_mean)
            if row.rmse_mean is not None:
                assert row.rmse_ci == (row.rmse_mean, row.rmse_mean)

    def test_permutation_invariant(self, sweep):
        _, rep = sweep
        shuffled = list(reversed(rep.runs))
        again = aggregate(shuffled, rep.modes, rep.n_runs, rep.scenario, rep.master_seed)
        for a, b in zip(rep.rows, again.rows):
            assert a.lost_pct_mean == pytest.approx(b.lost_pct_mean, rel=1e-12)
            assert (a.rmse_mean is None) == (b.rmse_mean is None)
            if a.rmse_mean is not None:
                assert a.rmse_mean == pytest.approx(b.rmse_mean, rel=1e-12)

    def test_aggregate_rmse_needs_majority(self, sweep):
        _, rep = sweep
        for row in rep.rows:
            assert (row.rmse_mean is not None) == (2 * row.rmse_defined_runs >= rep.n_runs)
