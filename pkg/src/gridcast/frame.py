"""Timestamped multi-channel series and the windowed samples cut from them."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .errors import (
    DuplicateChannel,
    LengthMismatch,
    MissingFeature,
    NonFiniteWindow,
    NonMonotonicTimestamps,
    TooShort,
)

#: Feature order of the model input, hour-of-day first.
FEATURES: tuple[str, ...] = ("hour", "P", "V", "I", "PPV", "T")
TARGET = "P"
IMPUTED_CHANNELS: tuple[str, ...] = ("V", "I", "PPV")
SECONDS_PER_HOUR = 3600


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TimeSeriesFrame:
    """Immutable table of epoch-second timestamps and named float channels.

    Use :func:`make_frame` to build one; it validates lengths and ordering.
    Missing values are stored as NaN.
    """

    timestamps: np.ndarray
    channels: Mapping[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.timestamps)

    def __contains__(self, name: str) -> bool:
        return name in self.channels

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.channels)

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        """Stack the named channels as columns of an ``(N, len(names))`` array."""
        missing = [n for n in names if n not in self.channels]
        if missing:
            raise MissingFeature(f"frame lacks channels {missing}")
        if not names:
            return np.empty((len(self), 0))
        return np.column_stack([self.channels[n] for n in names])

    def with_channels(self, updates: Mapping[str, Iterable[float]]) -> TimeSeriesFrame:
        """Return a new frame with channels added or replaced."""
        merged = dict(self.channels)
        merged.update(updates)
        return make_frame(self.timestamps, merged)

    def select(self, names: Sequence[str]) -> TimeSeriesFrame:
        return make_frame(self.timestamps, {n: self.channels[n] for n in names})

    def rows(self, start: int | None = None, stop: int | None = None) -> TimeSeriesFrame:
        sl = slice(start, stop)
        return make_frame(self.timestamps[sl], {n: v[sl] for n, v in self.channels.items()})


def make_frame(
    timestamps: Iterable[int],
    channels: Mapping[str, Iterable[float]] | Iterable[tuple[str, Iterable[float]]],
) -> TimeSeriesFrame:
    """Validate inputs and build a :class:`TimeSeriesFrame`.

    ``channels`` may be a mapping or a sequence of ``(name, values)`` pairs;
    the latter is how duplicate names can reach this function.
    """
    ts = _frozen(timestamps, np.int64)
    if ts.ndim != 1:
        raise LengthMismatch("timestamps must be one-dimensional")
    if len(ts) > 1 and not np.all(np.diff(ts) > 0):
        raise NonMonotonicTimestamps("timestamps must be strictly increasing")

    pairs = channels.items() if isinstance(channels, Mapping) else channels
    out: dict[str, np.ndarray] = {}
    for name, values in pairs:
        if name in out:
            raise DuplicateChannel(f"channel {name!r} given twice")
        arr = _frozen(values, np.float64)
        if arr.shape != ts.shape:
            raise LengthMismatch(
                f"channel {name!r} has length {arr.size}, timestamps have {ts.size}"
            )
        out[name] = arr
    return TimeSeriesFrame(ts, MappingProxyType(out))


def hour_of_day(timestamps: np.ndarray) -> np.ndarray:
    return (np.asarray(timestamps, dtype=np.int64) // SECONDS_PER_HOUR) % 24


def encode_time_feature(frame: TimeSeriesFrame) -> TimeSeriesFrame:
    """Add an ``hour`` channel holding the UTC hour of day (0..23)."""
    return frame.with_channels({"hour": hour_of_day(frame.timestamps).astype(np.float64)})


@dataclass(frozen=True)
class FeatureSpec:
    features: tuple[str, ...] = FEATURES
    target: str = TARGET
    window: int = 24

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if self.target not in self.features:
            raise MissingFeature(f"target {self.target!r} not among features")
        if len(set(self.features)) != len(self.features):
            raise DuplicateChannel("feature names must be unique")
        if self.window < 1:
            raise ValueError("window length must be >= 1")

    @property
    def target_index(self) -> int:
        return self.features.index(self.target)

    @property
    def n_features(self) -> int:
        return len(self.features)


@dataclass(frozen=True)
class WindowSample:
    inputs: np.ndarray = field(repr=False)
    target: float

    def __post_init__(self):
        arr = _frozen(self.inputs, np.float64)
        if arr.ndim != 2:
            raise ValueError("inputs must be an L x D matrix")
        if not np.all(np.isfinite(arr)) or not np.isfinite(self.target):
            raise NonFiniteWindow("window sample contains non-finite values")
        object.__setattr__(self, "inputs", arr)
        object.__setattr__(self, "target", float(self.target))


def window_arrays(
    frame: TimeSeriesFrame, spec: FeatureSpec, drop_nonfinite: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Stride-1 windows as arrays ``X`` of shape (N-L, L, D) and ``y`` of shape (N-L,).

    With ``drop_nonfinite`` windows touching a NaN are skipped instead of
    raising :class:`NonFiniteWindow`.
    """
    L = spec.window
    n = len(frame)
    if n < L + 1:
        raise TooShort(f"need at least {L + 1} rows for window {L}, got {n}")
    feats = frame.matrix(spec.features)
    target = frame[spec.target]
    X = np.lib.stride_tricks.sliding_window_view(feats, L, axis=0)[: n - L]
    X = np.ascontiguousarray(X.transpose(0, 2, 1))
    y = np.array(target[L:], dtype=np.float64)
    ok = np.isfinite(X).all(axis=(1, 2)) & np.isfinite(y)
    if not ok.all():
        if not drop_nonfinite:
            raise NonFiniteWindow(f"{int((~ok).sum())} windows contain non-finite values")
        X, y = X[ok], y[ok]
    return X, y


def sliding_windows(frame: TimeSeriesFrame, spec: FeatureSpec) -> list[WindowSample]:
    X, y = window_arrays(frame, spec)
    return [WindowSample(x, t) for x, t in zip(X, y)]


def stack_windows(samples: Sequence[WindowSample]) -> tuple[np.ndarray, np.ndarray]:
    if not samples:
        return np.empty((0, 0, 0)), np.empty(0)
    X = np.stack([s.inputs for s in samples])
    y = np.array([s.target for s in samples], dtype=np.float64)
    return X, y
