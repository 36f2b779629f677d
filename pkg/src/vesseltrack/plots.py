"""Static SVG figures of the aggregate report: RMSE and Lost% by zone."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_COLORS = {"lidar-only": "#1f77b4", "camera-only": "#ff7f0e", "all-sensors": "#2ca02c", "adaptive": "#d62728"}


def _bars(ax, rep, attr, ylabel):
    n = len(rep.modes)
    width = 0.8 / n
    for i, mode in enumerate(rep.modes):
        for z in (1, 2, 3):
            row = rep.row(mode, z)
            x = z - 0.4 + width * (i + 0.5)
            mean, ci = getattr(row, f"{attr}_mean"), getattr(row, f"{attr}_ci")
            if mean is None:
                ax.text(x, 0, "n/a", ha="center", va="bottom", fontsize=7, rotation=90)
                continue
            err = [[mean - ci[0]], [ci[1] - mean]]
            ax.bar(x, mean, width, color=_COLORS.get(mode, "grey"), yerr=err, capsize=2,
                   label=mode if z == 1 else None)
    ax.set_xticks([1, 2, 3], ["Zone 1", "Zone 2", "Zone 3"])
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)


def save_plots(rep, out_dir) -> list[Path]:
    """Write rmse_by_zone.svg and lost_by_zone.svg; returns the paths."""
    out_dir = Path(out_dir)
    paths = []
    with plt.rc_context({"svg.hashsalt": "vesseltrack", "svg.fonttype": "none"}):
        for name, attr, label in (
            ("rmse_by_zone.svg", "rmse", "RMSE [m]"),
            ("lost_by_zone.svg", "lost_pct", "Lost bins [%]"),
        ):
            fig, ax = plt.subplots(figsize=(6, 3.5))
            _bars(ax, rep, attr, label)
            ax.set_title(f"{rep.scenario}: {label} by zone ({rep.n_runs} runs, 95% CI)", fontsize=9)
            fig.tight_layout()
            path = out_dir / name
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            paths.append(path)
    return paths
