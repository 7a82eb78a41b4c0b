"""Sudden-death interval and sudden-birth detection on concurrence traces.

A death interval is a maximal run of consecutive samples with C <= eps that
lasts at least min_duration; isolated zeros of an oscillating concurrence
(which the maps render as thin dark lines) are filtered out by the duration
cut. A birth event is the first sample after such an interval where the
concurrence is positive again.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .master_eq import Trajectory


@dataclass(frozen=True)
class DetectorConfig:
    """Zero threshold and minimum gap length for death detection."""

    eps: float = 1e-4
    min_duration: float = 0.2

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.min_duration <= 0:
            raise ValueError("min_duration must be positive")


@dataclass(frozen=True)
class DeathInterval:
    """Closed time window on which the concurrence is zero to tolerance."""

    t_start: float
    t_end: float

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


def _check_sampling(times: np.ndarray, cfg: DetectorConfig) -> None:
    if len(times) == 0:
        raise ValueError("empty trajectory")
    if len(times) > 1:
        gap = float(np.max(np.diff(times)))
        if cfg.min_duration <= gap:
            raise ValueError(
                f"min_duration {cfg.min_duration} must exceed the sampling "
                f"interval {gap:.6g}; a single sample cannot count as a death"
            )


def _zero_runs(concurrence: np.ndarray, eps: float) -> list[tuple[int, int]]:
    """Maximal index runs [i, j] (inclusive) with C <= eps."""
    below = concurrence <= eps
    runs = []
    start = None
    for i, flag in enumerate(below):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(below) - 1))
    return runs


def detect_death_intervals(traj: Trajectory, cfg: DetectorConfig = DetectorConfig()) -> list[DeathInterval]:
    """Maximal C <= eps sample runs lasting at least min_duration."""
    times = traj.times
    _check_sampling(times, cfg)
    intervals = []
    for i, j in _zero_runs(traj.concurrence, cfg.eps):
        t0, t1 = float(times[i]), float(times[j])
        if t1 - t0 >= cfg.min_duration:
            intervals.append(DeathInterval(t0, t1))
    return intervals


def detect_birth_events(intervals: list[DeathInterval], traj: Trajectory,
                        cfg: DetectorConfig = DetectorConfig()) -> list[float]:
    """First post-interval sample time with C > eps, per reviving interval.

    Intervals running into the end of the trajectory produce no event.
    """
    times = traj.times
    if len(times) == 0:
        raise ValueError("empty trajectory")
    t_end = float(times[-1])
    births = []
    for iv in intervals:
        if iv.t_end >= t_end:
            continue
        after = np.nonzero((times > iv.t_end) & (traj.concurrence > cfg.eps))[0]
        if after.size:
            births.append(float(times[after[0]]))
    return births


def envelope(traj: Trajectory, window: float) -> np.ndarray:
    """Per-window concurrence maxima as an (n, 2) array of (t, C) pairs.

    The trace is cut into consecutive windows of the given width and each
    window contributes the sample at which C is largest; for an oscillating
    C this traces the peak envelope. The window must be wider than the
    sampling interval (in practice: wider than one oscillation period).
    """
    times = traj.times
    if len(times) == 0:
        raise ValueError("empty trajectory")
    if len(times) > 1 and window <= float(np.max(np.diff(times))):
        raise ValueError(f"window {window} must exceed the sampling interval")
    c = traj.concurrence
    t0 = float(times[0])
    bins = np.floor((times - t0) / window).astype(int)
    points = []
    for b in np.unique(bins):
        idx = np.nonzero(bins == b)[0]
        best = idx[np.argmax(c[idx])]
        points.append((float(times[best]), float(c[best])))
    return np.array(points)


EVENT_COLUMNS = ("t_start", "t_end", "duration", "birth_time")


def write_event_csv(intervals: list[DeathInterval], traj: Trajectory, path,
                    cfg: DetectorConfig = DetectorConfig(),
                    echo: dict | None = None) -> None:
    """Event report: one row per death interval, birth_time empty when none."""
    births = {iv: None for iv in intervals}
    t_last = float(traj.times[-1]) if len(traj.times) else None
    for iv in intervals:
        if t_last is not None and iv.t_end < t_last:
            after = np.nonzero((traj.times > iv.t_end) & (traj.concurrence > cfg.eps))[0]
            if after.size:
                births[iv] = float(traj.times[after[0]])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for key, val in (echo or {}).items():
            fh.write(f"# {key}={val}\n")
        fh.write(",".join(EVENT_COLUMNS) + "\n")
        for iv in intervals:
            birth = births[iv]
            birth_txt = f"{birth:.17g}" if birth is not None else ""
            fh.write(f"{iv.t_start:.17g},{iv.t_end:.17g},{iv.duration:.17g},{birth_txt}\n")
