"""Regenerate the bundled marina-baseline scenario.

The truth path is a control polygon smoothed by Chaikin corner cutting, so
heading changes are spread over many short legs; leg times follow from
speeds interpolated along the path.

    python tools/make_marina_baseline.py > src/vesseltrack/scenarios/marina-baseline.json
"""

import json
import math
import sys

import numpy as np

# (x, y, speed m/s)
CONTROL = [
    (200, 35, 4), (235, 70, 4), (200, 105, 4), (165, 70, 4), (200, 35, 4), (240, 40, 4.5),
    (300, 20, 5.5), (420, 40, 7), (560, 70, 8), (760, 40, 8), (900, 10, 7),
    (960, -40, 6), (930, -100, 6), (860, -110, 7), (700, -80, 8), (560, -70, 8),
    (420, -30, 7), (320, 10, 5.5), (250, 40, 4.5), (215, 75, 4),
]


def chaikin(p, n=5):
    for _ in range(n):
        q = [p[0]]
        for a, b in zip(p[:-1], p[1:]):
            q += [0.75 * a + 0.25 * b, 0.25 * a + 0.75 * b]
        q.append(p[-1])
        p = np.array(q)
    return p


def waypoints():
    ctrl = np.array(CONTROL, dtype=float)
    path = chaikin(ctrl)
    # speed: interpolate control speeds along cumulative control-polygon length
    seg = np.hypot(*np.diff(ctrl[:, :2], axis=0).T)
    s_ctrl = np.concatenate([[0], np.cumsum(seg)]) / seg.sum()
    seg_p = np.hypot(*np.diff(path[:, :2], axis=0).T)
    s_path = np.concatenate([[0], np.cumsum(seg_p)]) / seg_p.sum()
    speed = np.interp(s_path, s_ctrl, ctrl[:, 2])
    t = [0.0]
    for k, d in enumerate(seg_p):
        t.append(t[-1] + d / (0.5 * (speed[k] + speed[k + 1])))
    out, last = [], -1.0
    for ti, (x, y) in zip(t, path[:, :2]):
        ti = round(ti, 2)
        if ti > last:
            out.append([ti, round(float(x), 3), round(float(y), 3)])
            last = ti
    return out


CONFIG = {
    "name": "marina-baseline",
    "seed": 20240611,
    "bin_width": 0.2,
    "zones": {"center": [0.0, 0.0], "r1": 325.0, "r2": 650.0},
    "surveillance": [100.0, 1100.0, -250.0, 250.0],
    "lidar_pose": {"position": [240.0, 20.0], "yaw": 0.35},
    "lidar": {
        "rate": 10.0, "phase": 0.03, "r_max": 130.0, "sigma_r": 1.0, "sigma_theta_deg": 0.5,
        "detect": {"p_max": 0.95, "midpoint": 110.0, "scale": 5.0},
        "min_points": 3, "mean_extra_points": 20.0,
        "clutter_rate": 0.02, "clutter_beta": [2.0, 8.0],
        "confidence": {"near": 0.9, "slope": 0.001, "lo": 0.5, "hi": 0.95, "concentration": 20.0},
        "dropout": 0.0,
        "clock": {"offset": 0.42, "drift": [4e-5, -2e-5, 6e-5], "anchor_spacing": 30.0},
    },
    "camera": {
        "rate": 12.5, "phase": 0.0, "position": [-60.0, -90.0, 100.0], "yaw_deg": 14.0, "pitch_deg": 15.0,
        "focal": 1732.0, "width": 1920, "height": 1080,
        "pixel_noise": 5.0, "sigma_px": 5.0, "position_noise_std": 0.5, "noise_growth": 0.0, "cov_floor": 0.25,
        "detect": {"p_max": 0.95, "midpoint": 900.0, "scale": 100.0},
        "clutter_rate": 0.5, "clutter_beta": [2.0, 8.0],
        "confidence": {"near": 0.9, "slope": 0.0004, "lo": 0.4, "hi": 0.95, "concentration": 20.0},
        "dropout": 0.0,
        "clock": {"offset": -1.7, "drift": [-3e-5, 5e-5], "anchor_spacing": 30.0},
    },
    "tracker": {
        "n_particles": 1000, "resample_threshold": 0.5, "sigma_a": 3.0,
        "sigma_v0": 2.0, "max_coast": 5.0, "hit_threshold": 0.5,
    },
}


def main():
    cfg = dict(CONFIG)
    cfg["waypoints"] = waypoints()
    json.dump(cfg, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
