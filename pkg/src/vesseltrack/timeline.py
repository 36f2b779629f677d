"""Clock alignment and fused time binning."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import InvalidWarp

# Guard against (t - t0) / w landing just below an integer through round-off.
_BIN_EPS = 1e-9


@dataclass(frozen=True)
class TimeWarp:
    """Piecewise-affine map from a sensor clock to the reference clock.

    ``anchors`` is a sequence of (t_sensor, t_ref) pairs, both strictly
    increasing. Outside the anchor span the boundary segment is extended.
    """

    anchors: tuple

    def __post_init__(self):
        a = np.asarray(self.anchors, dtype=float)
        if a.ndim != 2 or a.shape[1] != 2 or len(a) < 2:
            raise InvalidWarp("a time warp needs at least 2 (t_sensor, t_ref) anchors")
        if not np.all(np.isfinite(a)):
            raise InvalidWarp("anchor times must be finite")
        if np.any(np.diff(a[:, 0]) <= 0) or np.any(np.diff(a[:, 1]) <= 0):
            raise InvalidWarp("anchor times must be strictly increasing on both clocks")
        object.__setattr__(self, "anchors", tuple(map(tuple, a.tolist())))

    @property
    def slopes(self) -> np.ndarray:
        a = np.asarray(self.anchors)
        return np.diff(a[:, 1]) / np.diff(a[:, 0])

    def inverse(self) -> "TimeWarp":
        return TimeWarp(tuple((g, s) for s, g in self.anchors))


def warp_time(w: TimeWarp, t_sensor):
    """Map sensor-clock time(s) onto the reference clock."""
    a = np.asarray(w.anchors)
    ts, tg = a[:, 0], a[:, 1]
    slopes = w.slopes
    t = np.asarray(t_sensor, dtype=float)
    seg = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2)
    out = tg[seg] + slopes[seg] * (t - ts[seg])
    # evaluate from the last anchor so it is reproduced exactly too
    tail = t >= ts[-1]
    out = np.where(tail, tg[-1] + slopes[-1] * (t - ts[-1]), out)
    return float(out) if out.ndim == 0 else out


@dataclass
class FusedBin:
    """One synchronized slot; each sensor slot holds at most one set.

    ``camera_time`` / ``lidar_time`` keep the reference time of the retained
    set so a list of bins can be re-binned.
    """

    index: int
    t_start: float
    width: float
    camera: Any = None
    lidar: Any = None
    camera_time: float | None = None
    lidar_time: float | None = None
    truth: np.ndarray | None = None

    @property
    def t_ref(self) -> float:
        """Reference time the bin's estimate refers to (bin close)."""
        return self.t_start + self.width

    def has(self, sensor: str) -> bool:
        """True when the slot holds a set with at least one candidate."""
        s = self.camera if sensor == "camera" else self.lidar
        return s is not None and len(s) > 0

    @property
    def is_empty(self) -> bool:
        return self.camera is None and self.lidar is None


def default_t0(times, bin_width: float) -> float:
    return math.floor(min(times) / bin_width + _BIN_EPS) * bin_width


def bin_index(t, t0: float, bin_width: float):
    return np.floor((np.asarray(t, dtype=float) - t0) / bin_width + _BIN_EPS).astype(int)


def bin_measurements(streams: dict, bin_width: float = 0.2, t0: float | None = None) -> list[FusedBin]:
    """Group reference-time measurement sets into fixed-width bins.

    ``streams`` maps sensor name ('camera' / 'lidar') to a list of
    (t_ref, measurement_set). Per (sensor, bin) the latest set holding at
    least one candidate is kept; a bin that only saw empty sets keeps the
    latest empty one. Every index between the first and last occupied bin is
    emitted, empty or not.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be > 0")
    all_t = [t for events in streams.values() for t, _ in events]
    if not all_t:
        return []
    if t0 is None:
        t0 = default_t0(all_t, bin_width)

    slots: dict[tuple[str, int], tuple[float, int, Any]] = {}
    for sensor, events in streams.items():
        if sensor not in ("camera", "lidar"):
            raise ValueError(f"unknown sensor {sensor!r}")
        for order, (t, mset) in enumerate(events):
            k = int(bin_index(t, t0, bin_width))
            rank = (len(mset) > 0, t, order)
            prev = slots.get((sensor, k))
            if prev is None or rank > prev[0]:
                slots[(sensor, k)] = (rank, t, mset)

    ks = [k for _, k in slots]
    first, last = min(ks), max(ks)
    bins = [FusedBin(k, t0 + k * bin_width, bin_width) for k in range(first, last + 1)]
    for (sensor, k), (_, t, mset) in slots.items():
        b = bins[k - first]
        setattr(b, sensor, mset)
        setattr(b, f"{sensor}_time", t)
    return bins


def rebin(bins: list[FusedBin], bin_width: float | None = None, t0: float | None = None) -> list[FusedBin]:
    """Re-run binning over the sets retained in ``bins``."""
    if not bins:
        return []
    width = bins[0].width if bin_width is None else bin_width
    if t0 is None:
        t0 = bins[0].t_start - bins[0].index * bins[0].width
    streams = {"camera": [], "lidar": []}
    for b in bins:
        if b.camera is not None:
            streams["camera"].append((b.camera_time, b.camera))
        if b.lidar is not None:
            streams["lidar"].append((b.lidar_time, b.lidar))
    out = bin_measurements(streams, width, t0)
    truth = {b.index: b.truth for b in bins}
    for b in out:
        b.truth = truth.get(b.index)
    return out


def interpolate_positions(times, positions, t) -> np.ndarray:
    """Linear interpolation of 2D positions; clamps outside the sample span."""
    times = np.asarray(times, dtype=float)
    positions = np.asarray(positions, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.stack([np.interp(t, times, positions[:, 0]), np.interp(t, times, positions[:, 1])], axis=-1)


def attach_truth(bins: list[FusedBin], times, positions) -> None:
    """Set each bin's truth to the interpolated position at its close time."""
    if not bins:
        return
    tq = np.array([b.t_ref for b in bins])
    pts = interpolate_positions(times, positions, tq)
    for b, p in zip(bins, pts):
        b.truth = p
