"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--n 1000] [--repeat 200] [--tracker]

Kernel timings are per call, best of ``--repeat``. With ``--tracker`` a full
adaptive run over the bundled scenario is also timed under each backend (in
a subprocess, since the backend is chosen at import time).
"""

import argparse
import math
import os
import subprocess
import sys
import timeit

import numpy as np

from vesseltrack.kernels import get_backend

TRACKER_SNIPPET = """
import time
from vesseltrack.simulator import load_scenario, simulate
from vesseltrack.pipeline import build_bins, sensor_suite, tracker_config
from vesseltrack.tracker import run_tracker
cfg = load_scenario("marina-baseline")
bins = build_bins(simulate(cfg))
suite, tc = sensor_suite(cfg), tracker_config(cfg)
run_tracker(bins[:50], "adaptive", suite, tc, seed=0)  # warm-up / JIT
t = time.perf_counter()
run_tracker(bins, "adaptive", suite, tc, seed=0)
print(time.perf_counter() - t, len(bins))
"""


def cases(n, rng):
    pos = rng.normal(0, 30, (n, 2))
    states = np.column_stack([pos, rng.normal(0, 2, (n, 2))])
    z = rng.normal(0, 30, (4, 2))
    inv_cov = np.tile([0.2, 0.01, 0.3], (4, 1))
    log_coef = np.full(4, -3.0)
    lz = np.column_stack([rng.uniform(10, 100, 3), rng.uniform(-math.pi, math.pi, 3)])
    sensor = np.array([-120.0, 5.0])
    inv_var = np.array([1.0, 1.0 / math.radians(0.5) ** 2])
    lw = rng.normal(0, 3, n)
    lw -= np.log(np.exp(lw).sum())
    w = np.exp(lw)
    acc = rng.normal(0, 3, (n, 2))
    return {
        "camera_loglik": lambda k: k.camera_loglik(pos, z, inv_cov, log_coef, -12.0),
        "lidar_loglik": lambda k: k.lidar_loglik(pos, sensor, lz, inv_var, log_coef[:3], -9.0),
        "systematic_indices": lambda k: k.systematic_indices(w, 0.37),
        "normalize_log_weights": lambda k: k.normalize_log_weights(lw),
        "entropy_bits": lambda k: k.entropy_bits(lw),
        "cv_predict": lambda k: k.cv_predict(states, acc, 0.2),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--tracker", action="store_true")
    args = ap.parse_args()

    backends = {"numpy": get_backend("numpy"), "numba": get_backend("numba")}
    table = cases(args.n, np.random.default_rng(0))
    print(f"N = {args.n} particles, best of {args.repeat} calls (microseconds)")
    print(f"{'kernel':<24}{'numpy':>10}{'numba':>10}{'speedup':>10}")
    for name, fn in table.items():
        fn(backends["numba"])  # compile outside the timed region
        t = {b: min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) * 1e6 for b, k in backends.items()}
        print(f"{name:<24}{t['numpy']:>10.1f}{t['numba']:>10.1f}{t['numpy'] / t['numba']:>9.1f}x")

    if args.tracker:
        print("\nfull adaptive run on marina-baseline")
        for flag in ("1", "0"):
            env = dict(os.environ, VESSELTRACK_DISABLE_NUMBA=flag)
            out = subprocess.run([sys.executable, "-c", TRACKER_SNIPPET], env=env, capture_output=True, text=True, check=True)
            secs, nb = out.stdout.split()
            label = "numpy" if flag == "1" else "numba"
            print(f"  {label:<6} {float(secs):6.2f} s for {nb} bins ({1e3 * float(secs) / int(nb):.3f} ms/bin)")


if __name__ == "__main__":
    main()
