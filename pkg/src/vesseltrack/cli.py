"""Command-line entry point: ``vesseltrack simulate|calibrate|track|evaluate``.

Exit codes: 0 success, 2 usage error, otherwise the ``exit_code`` of the
raised error family (see ``vesseltrack.errors``).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import formats
from .calibration import (
    Homography,
    RansacConfig,
    estimate_homography,
    estimate_planar_transform,
    load_calibration,
    rms_residual,
    save_calibration,
)
from .errors import ConfigError, NoDetectionInBin, VesselTrackError
from .evaluation import run_monte_carlo
from .fusion import ALL_MODES, FusionMode
from .measurements import LidarPose
from .pipeline import sensor_suite, tracker_config
from .simulator import (
    CameraModel,
    config_from_dict,
    config_to_dict,
    load_scenario,
    simulate,
    sub_rng,
    with_seed,
)
from .timeline import attach_truth, bin_measurements, warp_time
from .tracker import run_tracker

DEFAULT_SCENARIO = "marina-baseline"


def _out_dir(path) -> Path:
    if path is None:
        raise ConfigError("--out is required")
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {p}: {exc.strerror}") from exc
    return p


def _modes(arg, default):
    if arg is None:
        return list(default)
    if arg == "all":
        return list(ALL_MODES)
    try:
        return [FusionMode(m) for m in arg.split(",")]
    except ValueError as exc:
        raise ConfigError(f"unknown mode in {arg!r}; choose from {[m.value for m in ALL_MODES]}") from exc


def _load_manifest(path) -> tuple[dict, Path]:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {p}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest {p} is not valid JSON: {exc}") from exc
    return doc, p.parent


# -- simulate ------------------------------------------------------------------


def calibration_pairs(cfg, n_outliers=3):
    """Noisy correspondence sets for both calibrations, with a few gross
    outliers (50 m) mixed in."""
    rng = sub_rng(cfg.seed, "calibration")
    cam = CameraModel(cfg.camera)
    px, world = cam.pixel_pairs((8, 5))
    px = px + 0.5 * rng.standard_normal(px.shape)
    world = world.copy()
    world[:n_outliers] += 50.0
    pose = cfg.lidar_pose
    scan = rng.uniform(-100, 100, size=(30, 2))
    c, s = np.cos(pose.yaw), np.sin(pose.yaw)
    lw = scan @ np.array([[c, -s], [s, c]]).T + pose.position + 0.05 * rng.standard_normal(scan.shape)
    lw[:n_outliers] += 50.0
    return (px, world), (scan, lw)


def cmd_simulate(args) -> int:
    cfg = load_scenario(args.config or DEFAULT_SCENARIO)
    if args.seed is not None:
        cfg = with_seed(cfg, args.seed)
    out = _out_dir(args.out)
    sim = simulate(cfg)
    formats.write_json(out / "scenario.json", config_to_dict(cfg))
    formats.write_streams(out, {"camera": sim.camera, "lidar": sim.lidar})
    formats.write_truth(out / "truth.tsv", sim.truth)
    formats.write_warps(out / "warps.json", sim.warps)
    (cpx, cw), (ls, lw) = calibration_pairs(cfg)
    formats.write_pairs(out / "pairs_camera.tsv", cpx, cw)
    formats.write_pairs(out / "pairs_lidar.tsv", ls, lw)
    print(f"{cfg.name}: {len(sim.lidar)} lidar scans, {len(sim.camera)} camera frames, {len(sim.truth)} truth samples -> {out}")
    return 0


# -- calibrate -----------------------------------------------------------------


def cmd_calibrate(args) -> int:
    if args.config is None:
        raise ConfigError("--config (correspondence pairs file) is required")
    src, dst = formats.read_pairs(args.config)
    rcfg = RansacConfig(inlier_threshold=args.threshold, seed=0 if args.seed is None else args.seed)
    if args.kind == "homography":
        model, mask = estimate_homography(src, dst, rcfg)
        mode = None
    else:
        model, mask = estimate_planar_transform(src, dst, args.kind, rcfg)
        mode = args.kind
    rms = rms_residual(model, src, dst, mask)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        save_calibration(args.out, model, int(mask.sum()), rms, mode)
    print(f"kind: {args.kind}  inliers: {int(mask.sum())}/{len(mask)}  rms_residual: {rms:.6g} m")
    return 0


# -- track ---------------------------------------------------------------------


def _track_inputs(config):
    """Resolve (scenario, streams dir, calibration overrides, manifest) from
    a simulate output directory or a manifest file."""
    p = Path(config)
    manifest, base = {}, p
    if p.is_file():
        manifest, base = _load_manifest(p)
        stream_dir = base / manifest.get("streams", ".")
    elif p.is_dir():
        stream_dir = p
    else:
        raise ConfigError(f"no such manifest or stream directory: {p}")
    try:
        scen = config_from_dict(json.loads((stream_dir / "scenario.json").read_text()))
    except OSError as exc:
        raise ConfigError(f"cannot read {stream_dir / 'scenario.json'}: {exc.strerror}") from exc
    calib = {k: base / v for k, v in manifest.get("calibration", {}).items()}
    return scen, stream_dir, calib, manifest


def _suite(scen, calib):
    homography = lidar_pose = None
    if "camera" in calib:
        homography = load_calibration(calib["camera"])
        if not isinstance(homography, Homography):
            raise ConfigError(f"{calib['camera']} is not a homography artifact")
    if "lidar" in calib:
        tf = load_calibration(calib["lidar"])
        if isinstance(tf, Homography):
            raise ConfigError(f"{calib['lidar']} is not a planar artifact")
        lidar_pose = LidarPose.from_transform(tf)
    return sensor_suite(scen, homography, lidar_pose)


def load_bins(scen, stream_dir):
    cam_kw = dict(alpha=scen.alpha_camera, clutter_density=scen.camera_clutter_density)
    lid_kw = dict(
        alpha=scen.alpha_lidar, clutter_density=scen.lidar_clutter_density,
        sigma_r=scen.lidar.sigma_r, sigma_theta=scen.lidar.sigma_theta,
    )
    streams = formats.read_streams(stream_dir, cam_kw, lid_kw)
    warps = formats.read_warps(stream_dir / "warps.json")
    ref = {}
    for s, ev in streams.items():
        if not ev:
            ref[s] = []
            continue
        tr = np.atleast_1d(warp_time(warps[s], [t for t, _ in ev]))
        ref[s] = list(zip(tr.tolist(), (m for _, m in ev)))
    bins = bin_measurements(ref, scen.bin_width, 0.0)
    truth_path = stream_dir / "truth.tsv"
    if truth_path.exists():
        t, pos, _ = formats.read_truth(truth_path)
        attach_truth(bins, t, pos)
    return bins


def cmd_track(args) -> int:
    if args.config is None:
        raise ConfigError("--config (simulate output directory or manifest) is required")
    scen, stream_dir, calib, manifest = _track_inputs(args.config)
    modes = _modes(args.mode or manifest.get("mode") or ",".join(manifest.get("modes", [])) or None, [FusionMode.ADAPTIVE])
    seed = args.seed if args.seed is not None else manifest.get("seed", scen.seed)
    out = _out_dir(args.out or (Path(args.config).parent / manifest["out"] if "out" in manifest else None))
    bins = load_bins(scen, stream_dir)
    suite = _suite(scen, calib)
    tcfg = tracker_config(scen)
    for mode in modes:
        if not any(b.has(s) for b in bins for s in mode.sensors):
            raise NoDetectionInBin(f"no bin holds a {'/'.join(mode.sensors)} detection; {mode.value} cannot start")
        res = run_tracker(bins, mode, suite, tcfg, seed=seed)
        formats.write_estimates(out / f"estimates_{mode.value}.tsv", res)
        formats.write_selection(out / f"selection_{mode.value}.tsv", res)
        valid = sum(bool(np.isfinite(r.state[0])) for r in res.estimates)
        print(f"{mode.value}: {len(res.estimates)} bins, {valid} with valid estimates, {len(res.selections)} selection rows")
    return 0


# -- evaluate ------------------------------------------------------------------


def cmd_evaluate(args) -> int:
    manifest, base = {}, Path(".")
    p = Path(args.config) if args.config else None
    if p is not None and p.is_file():
        doc, base = _load_manifest(p)
        if "scenario" in doc:
            manifest = doc
    if manifest:
        ref = manifest["scenario"]
        scen = load_scenario(base / ref if (base / ref).exists() else ref)
    else:
        scen = load_scenario(args.config or DEFAULT_SCENARIO)
    modes = _modes(args.mode or (",".join(manifest["modes"]) if "modes" in manifest else None), ALL_MODES)
    n_runs = args.runs if args.runs is not None else int(manifest.get("n_runs", 200))
    seed = args.seed if args.seed is not None else manifest.get("seed", scen.seed)
    plots = args.plots or bool(manifest.get("plots", False))
    out = _out_dir(args.out or (base / manifest["out"] if "out" in manifest else None))
    calib = {k: base / v for k, v in manifest.get("calibration", {}).items()}

    def progress(done, total):
        if args.verbose:
            print(f"  run {done}/{total}", file=sys.stderr)

    rep = run_monte_carlo(scen, modes, n_runs, seed, suite=_suite(scen, calib), progress=progress)
    formats.write_report(out, rep)
    text = formats.summary_text(rep)
    (out / "summary.txt").write_text(text + "\n")
    if plots:
        from .plots import save_plots

        save_plots(rep, out)
    print(text)
    return 0


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vesseltrack", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed_help):
        p.add_argument("--config", help="input file or directory")
        p.add_argument("--out", help="output path")
        p.add_argument("--seed", type=int, help=seed_help)

    p = sub.add_parser("simulate", help="generate truth and sensor streams from a scenario")
    common(p, "override the scenario seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="fit a calibration from a correspondence pairs file")
    common(p, "RANSAC seed")
    p.add_argument("--kind", choices=("homography", "rigid", "similarity"), default="homography")
    p.add_argument("--threshold", type=float, default=2.0, help="RANSAC inlier threshold [m]")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("track", help="run the particle filter over simulated streams")
    common(p, "filter seed")
    p.add_argument("--mode", help="lidar-only, camera-only, all-sensors, adaptive, a comma list, or 'all'")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("evaluate", help="Monte Carlo sweep with zone metrics")
    common(p, "master seed")
    p.add_argument("--mode", help="modes to evaluate (default: all)")
    p.add_argument("--runs", type=int, help="number of Monte Carlo runs (default 200)")
    p.add_argument("--plots", action="store_true", help="also write SVG figures")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_evaluate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VesselTrackError as exc:
        print(f"vesseltrack {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
