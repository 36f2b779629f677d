"""Columnar text files and JSON documents written by the command line.

Every table is tab-separated: a ``# schema: vesseltrack.<kind>/<version>``
line, a header row, then data rows. Floats use ``repr`` so files round-trip
exactly and are byte-stable for identical inputs.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .measurements import CameraCandidateSet, LidarCandidateSet
from .timeline import TimeWarp

SCHEMA_VERSION = 1

COLUMNS = {
    "streams": ("sensor", "t_sensor", "frame", "n_candidates"),
    "candidates": ("sensor", "frame", "z1", "z2", "confidence", "r11", "r12", "r22"),
    "truth": ("t", "x", "y", "vx", "vy"),
    "pairs": ("src_x", "src_y", "dst_x", "dst_y"),
    "estimates": ("bin", "t_ref", "p_x", "p_y", "v_x", "v_y", "ess", "did_resample", "selected_sensors", "status"),
    "selection": ("bin", "mode", "h_prior", "h_post_cam", "h_post_lidar", "i_cam", "i_lidar", "selected"),
    "runs": ("run", "seed", "mode", "zone", "bins", "valid_bins", "rmse", "lost_pct"),
    "zone_summary": ("metric", "zone", "mode", "mean", "ci_low", "ci_high"),
}


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path, kind: str, rows) -> None:
    cols = COLUMNS[kind]
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: vesseltrack.{kind}/{SCHEMA_VERSION}\n")
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def read_table(path, kind: str) -> list[dict]:
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    with fh:
        first = fh.readline().strip()
        expect = f"# schema: vesseltrack.{kind}/"
        if not first.startswith(expect):
            raise ConfigError(f"{path}: expected a '{expect}N' schema line")
        rows = list(csv.DictReader(fh, delimiter="\t"))
    if rows and set(COLUMNS[kind]) - set(rows[0]):
        raise ConfigError(f"{path}: missing columns {sorted(set(COLUMNS[kind]) - set(rows[0]))}")
    return rows


def _f(s):
    return math.nan if s == "" else float(s)


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


# -- measurement streams ---------------------------------------------------------


def write_streams(out_dir, streams: dict) -> None:
    """streams: sensor -> list of (t_sensor, candidate set)."""
    out_dir = Path(out_dir)
    srow, crow = [], []
    for sensor in ("camera", "lidar"):
        for frame, (t, mset) in enumerate(streams.get(sensor, [])):
            srow.append((sensor, float(t), frame, len(mset)))
            for j in range(len(mset)):
                if sensor == "camera":
                    r = mset.r_cov[j]
                    crow.append((sensor, frame, *map(float, mset.z[j]), float(mset.confidence[j]), float(r[0, 0]), float(r[0, 1]), float(r[1, 1])))
                else:
                    crow.append((sensor, frame, *map(float, mset.z[j]), float(mset.confidence[j]), None, None, None))
    write_table(out_dir / "streams.tsv", "streams", srow)
    write_table(out_dir / "candidates.tsv", "candidates", crow)


def read_streams(in_dir, camera_kw: dict, lidar_kw: dict) -> dict:
    """Rebuild candidate sets; ``*_kw`` carry the per-sensor set parameters
    (alpha, clutter density, LiDAR sigmas) that are not stored per row."""
    in_dir = Path(in_dir)
    cands: dict = {}
    for r in read_table(in_dir / "candidates.tsv", "candidates"):
        cands.setdefault((r["sensor"], int(r["frame"])), []).append(r)
    out = {"camera": [], "lidar": []}
    for r in read_table(in_dir / "streams.tsv", "streams"):
        sensor, frame = r["sensor"], int(r["frame"])
        rows = cands.get((sensor, frame), [])
        if len(rows) != int(r["n_candidates"]):
            raise ConfigError(f"{sensor} frame {frame}: candidate count mismatch")
        z = [(_f(c["z1"]), _f(c["z2"])) for c in rows] or None
        conf = [_f(c["confidence"]) for c in rows] or None
        if sensor == "camera":
            cov = [[[_f(c["r11"]), _f(c["r12"])], [_f(c["r12"]), _f(c["r22"])]] for c in rows] or None
            mset = CameraCandidateSet(z, cov, conf, **camera_kw)
        elif sensor == "lidar":
            mset = LidarCandidateSet(z, conf, **lidar_kw)
        else:
            raise ConfigError(f"unknown sensor {sensor!r} in streams file")
        out[sensor].append((float(r["t_sensor"]), mset))
    return out


def write_truth(path, truth) -> None:
    rows = ((float(t), *map(float, p), *map(float, v)) for t, p, v in zip(truth.t, truth.position, truth.velocity))
    write_table(path, "truth", rows)


def read_truth(path):
    rows = read_table(path, "truth")
    t = np.array([_f(r["t"]) for r in rows])
    pos = np.array([[_f(r["x"]), _f(r["y"])] for r in rows]).reshape(-1, 2)
    vel = np.array([[_f(r["vx"]), _f(r["vy"])] for r in rows]).reshape(-1, 2)
    return t, pos, vel


def write_warps(path, warps: dict) -> None:
    write_json(path, {"schema": "vesseltrack.warps/1", **{k: [list(a) for a in w.anchors] for k, w in warps.items()}})


def read_warps(path) -> dict:
    try:
        d = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    return {k: TimeWarp(tuple(map(tuple, v))) for k, v in d.items() if k in ("camera", "lidar")}


def write_pairs(path, src, dst) -> None:
    write_table(path, "pairs", ((*map(float, s), *map(float, d)) for s, d in zip(src, dst)))


def read_pairs(path):
    rows = read_table(path, "pairs")
    src = np.array([[_f(r["src_x"]), _f(r["src_y"])] for r in rows]).reshape(-1, 2)
    dst = np.array([[_f(r["dst_x"]), _f(r["dst_y"])] for r in rows]).reshape(-1, 2)
    return src, dst


# -- tracker and evaluation outputs ----------------------------------------------


def write_estimates(path, result) -> None:
    rows = (
        (r.index, r.t_ref, *map(float, r.state), r.ess, r.did_resample, "+".join(r.selected), r.status)
        for r in result.estimates
    )
    write_table(path, "estimates", rows)


def write_selection(path, result) -> None:
    rows = (
        (
            s.index, s.mode, s.h_prior,
            s.h_post.get("camera"), s.h_post.get("lidar"),
            s.ig.get("camera"), s.ig.get("lidar"),
            s.selected,
        )
        for s in result.selections
    )
    write_table(path, "selection", rows)


def report_dict(rep) -> dict:
    rows = [
        {
            "mode": r.mode,
            "zone": r.zone,
            "bins_mean": r.bins_mean,
            "rmse_mean": r.rmse_mean,
            "rmse_ci95": list(r.rmse_ci) if r.rmse_ci else None,
            "rmse_defined_runs": r.rmse_defined_runs,
            "lost_pct_mean": r.lost_pct_mean,
            "lost_pct_ci95": list(r.lost_pct_ci),
        }
        for r in rep.rows
    ]
    share = dict(rep.lidar_share_zone1)
    if share.get("ci") is not None:
        share["ci"] = list(share["ci"])
    return {
        "schema": "vesseltrack.report/1",
        "scenario": rep.scenario,
        "master_seed": rep.master_seed,
        "n_runs": rep.n_runs,
        "modes": rep.modes,
        "rows": rows,
        "adaptive_lidar_share_zone1": share,
    }


def write_report(out_dir, rep) -> None:
    out_dir = Path(out_dir)
    write_json(out_dir / "report.json", report_dict(rep))
    write_table(
        out_dir / "runs.tsv",
        "runs",
        (
            (r.run, r.seed, r.mode, z, m.bin_count, m.valid_count, m.rmse, m.lost_pct)
            for r in rep.runs
            for z, m in sorted(r.zones.items())
        ),
    )
    summary = []
    for metric in ("rmse", "lost_pct"):
        for row in sorted(rep.rows, key=lambda r: (r.zone, rep.modes.index(r.mode))):
            mean, ci = getattr(row, f"{metric}_mean"), getattr(row, f"{metric}_ci")
            summary.append((metric, row.zone, row.mode, mean, ci[0] if ci else None, ci[1] if ci else None))
    write_table(out_dir / "zone_summary.tsv", "zone_summary", summary)


def summary_text(rep) -> str:
    """Human-readable aggregate table."""
    lines = [f"scenario {rep.scenario}  runs {rep.n_runs}  master seed {rep.master_seed}"]
    lines.append(f"{'mode':<12} {'zone':>4} {'bins':>7} {'RMSE [m]':>22} {'Lost %':>22}")
    for r in rep.rows:
        rm = "undefined" if r.rmse_mean is None else f"{r.rmse_mean:8.2f} [{r.rmse_ci[0]:.2f}, {r.rmse_ci[1]:.2f}]"
        lp = f"{r.lost_pct_mean:6.1f} [{r.lost_pct_ci[0]:.1f}, {r.lost_pct_ci[1]:.1f}]"
        lines.append(f"{r.mode:<12} {r.zone:>4} {r.bins_mean:7.1f} {rm:>22} {lp:>22}")
    share = rep.lidar_share_zone1
    if share.get("pooled") is not None:
        lines.append(f"adaptive LiDAR share in zone-1 dual-sensor bins: {100 * share['pooled']:.1f}% of {share['bins']}")
    return "\n".join(lines)
