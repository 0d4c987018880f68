"""Resampling, feature scaling and sliding-window construction.

Each raw track becomes an evenly spaced series (default 5 s) with features
ordered (lat, lon, speed, course). Course is an angle in tenths of degrees and
is interpolated along the shortest circular path so a north crossing never
fabricates a southbound heading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TrackTooShort
from .ingest import RawTrack

FEATURES = ("lat", "lon", "speed", "course")
K = len(FEATURES)
COURSE_MOD = 3600.0  # tenths of degrees


@dataclass
class RegularTrack:
    """Evenly spaced multivariate series; sample i is at start_time + i*period."""

    vessel_id: str
    start_time: int  # epoch seconds
    period: float  # seconds
    features: np.ndarray  # shape (n, 4), columns = FEATURES
    max_raw_gap: float = 0.0  # diagnostics: largest gap (s) in the raw track

    def __len__(self) -> int:
        return len(self.features)

    def time_of(self, i: int) -> float:
        return self.start_time + i * self.period


@dataclass
class ScalerParams:
    """Per-feature min/max fitted on the training prefix only."""

    min: np.ndarray  # shape (4,)
    max: np.ndarray  # shape (4,)


@dataclass
class WindowSet:
    """Sliding windows over the scaled training prefix.

    inputs[i] = scaled rows t..t+m-1, targets[i] = (lat, lon) of row t+m.
    """

    inputs: np.ndarray  # shape (count, m, 4)
    targets: np.ndarray  # shape (count, 2)
    window_size: int

    def __len__(self) -> int:
        return len(self.inputs)


def _unwrap_course(course: np.ndarray) -> np.ndarray:
    """Cumulative angle with steps wrapped into (-1800, 1800]."""
    deltas = np.diff(course)
    deltas = (deltas + COURSE_MOD / 2) % COURSE_MOD - COURSE_MOD / 2
    return np.concatenate(([course[0]], course[0] + np.cumsum(deltas)))


def resample(track: RawTrack, period: float = 5.0) -> RegularTrack:
    """Linear interpolation onto a grid anchored at the first raw timestamp."""
    if len(track) < 2:
        raise TrackTooShort(f"vessel {track.vessel_id}: need >= 2 messages, have {len(track)}")
    if period <= 0:
        raise ValueError("period must be > 0")
    t = np.array([m.t for m in track.messages], dtype=np.float64)
    t0, t1 = t[0], t[-1]
    n = int(np.floor((t1 - t0) / period)) + 1
    grid = t0 + period * np.arange(n)
    # np.interp needs strictly increasing x; collapse duplicate timestamps
    # keeping the last message of each tie (ties are already object_id-ordered).
    keep = np.concatenate((t[1:] != t[:-1], [True]))
    tk = t[keep]
    cols = {}
    for name in ("lat", "lon", "speed"):
        vals = np.array([getattr(m, name) for m in track.messages], dtype=np.float64)[keep]
        cols[name] = np.interp(grid, tk, vals)
    course = np.array([m.course for m in track.messages], dtype=np.float64)[keep]
    cols["course"] = np.interp(grid, tk, _unwrap_course(course)) % COURSE_MOD
    feats = np.column_stack([cols[name] for name in FEATURES])
    gap = float(np.max(np.diff(tk))) if len(tk) > 1 else 0.0
    return RegularTrack(
        vessel_id=track.vessel_id,
        start_time=int(t0),
        period=period,
        features=feats,
        max_raw_gap=gap,
    )


def fit_scaler(series: RegularTrack, train_len: int) -> ScalerParams:
    """Min/max over the first train_len samples only (no test leakage)."""
    if not 1 <= train_len <= len(series):
        raise ValueError(f"train_len {train_len} outside [1, {len(series)}]")
    prefix = series.features[:train_len]
    return ScalerParams(min=prefix.min(axis=0), max=prefix.max(axis=0))


def scale(x: np.ndarray, p: ScalerParams) -> np.ndarray:
    """(x - min) / (max - min) per feature; 0.0 where the feature is constant."""
    span = p.max - p.min
    safe = np.where(span == 0, 1.0, span)
    out = (x - p.min) / safe
    return np.where(span == 0, 0.0, out)


def unscale(y: np.ndarray, p: ScalerParams) -> np.ndarray:
    """Invert `scale` for the (lat, lon) components."""
    y = np.asarray(y, dtype=np.float64)
    return p.min[:2] + y * (p.max[:2] - p.min[:2])


def make_windows(scaled: np.ndarray, m: int, train_len: int) -> WindowSet:
    """Build train_len - m (input, target) pairs from the scaled series rows."""
    if train_len <= m:
        raise TrackTooShort(f"train_len {train_len} must exceed window size {m}")
    count = train_len - m
    inputs = np.stack([scaled[t : t + m] for t in range(count)])
    targets = scaled[m : m + count, :2].copy()
    return WindowSet(inputs=inputs, targets=targets, window_size=m)
