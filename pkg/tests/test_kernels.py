import math

import numpy as np
import pytest

from vesseltrack.kernels import get_backend

numba_mod = pytest.importorskip("numba")
NP, NB = get_backend("numpy"), get_backend("numba")


@pytest.fixture
def data():
    rng = np.random.default_rng(0)
    n = 257
    pos = rng.normal(0, 30, (n, 2))
    lw = rng.normal(0, 3, n)
    return dict(
        rng=rng,
        pos=pos,
        states=np.column_stack([pos, rng.normal(0, 2, (n, 2))]),
        lw=lw,
        z=rng.normal(0, 30, (3, 2)),
        inv_cov=np.tile([0.2, 0.01, 0.3], (3, 1)),
        log_coef=np.array([-3.0, -4.0, -np.inf]),
    )


def test_camera_loglik(data):
    args = (data["pos"], data["z"], data["inv_cov"], data["log_coef"], -12.0)
    assert np.allclose(NP.camera_loglik(*args), NB.camera_loglik(*args), rtol=1e-12, atol=1e-12)


def test_camera_no_candidates(data):
    args = (data["pos"], np.zeros((0, 2)), np.zeros((0, 3)), np.zeros(0), -12.0)
    assert np.array_equal(NP.camera_loglik(*args), NB.camera_loglik(*args))


def test_lidar_loglik(data):
    lz = np.array([[20.0, 0.3], [50.0, math.pi - 0.01]])
    args = (data["pos"], np.array([1.0, -2.0]), lz, np.array([1.0, 1 / 0.01**2]), np.array([-3.0, -4.0]), -9.0)
    a, da = NP.lidar_loglik(*args)
    b, db = NB.lidar_loglik(*args)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12) and da == pytest.approx(db)


def test_normalize_and_entropy(data):
    a, na = NP.normalize_log_weights(data["lw"])
    b, nb = NB.normalize_log_weights(data["lw"])
    assert np.allclose(a, b, atol=1e-12) and na == pytest.approx(nb, abs=1e-12)
    assert NP.entropy_bits(a) == pytest.approx(NB.entropy_bits(b), abs=1e-12)


def test_systematic_identical(data):
    rng = data["rng"]
    for _ in range(50):
        w = rng.dirichlet(np.full(40, 0.4))
        u = rng.random()
        assert np.array_equal(NP.systematic_indices(w, u), NB.systematic_indices(w, u))


def test_cv_predict_bitwise(data):
    acc = data["rng"].normal(0, 3, (len(data["states"]), 2))
    assert np.array_equal(NP.cv_predict(data["states"], acc, 0.2), NB.cv_predict(data["states"], acc, 0.2))
