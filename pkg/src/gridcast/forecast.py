"""Recursive day-ahead forecasting from temperature-only test inputs."""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    ImputerMissingChannel,
    InvalidRequest,
    NonFiniteOutput,
    ScalerMissingChannel,
)
from .frame import (
    IMPUTED_CHANNELS,
    SECONDS_PER_HOUR,
    FeatureSpec,
    TimeSeriesFrame,
    hour_of_day,
    make_frame,
)
from .network import NetworkWeights, forward
from .preprocess import ImputationModel, ScalerParams, inverse_transform_target

log = logging.getLogger(__name__)

HORIZON = 24


@dataclass(frozen=True)
class ForecastRequest:
    """``history`` holds normalized, fully featured hourly rows; temperatures are raw."""

    history: TimeSeriesFrame
    future_temps: np.ndarray
    future_timestamps: np.ndarray

    def __post_init__(self):
        temps = np.asarray(self.future_temps, dtype=np.float64)
        stamps = np.asarray(self.future_timestamps, dtype=np.int64)
        if temps.shape != stamps.shape or temps.ndim != 1 or temps.size == 0:
            raise InvalidRequest("future temperatures and timestamps must be equal-length vectors")
        if np.any(np.diff(stamps) != SECONDS_PER_HOUR):
            raise InvalidRequest("future timestamps must be hourly spaced")
        if len(self.history) and stamps[0] != self.history.timestamps[-1] + SECONDS_PER_HOUR:
            raise InvalidRequest("future timestamps must continue the history")
        object.__setattr__(self, "future_temps", temps)
        object.__setattr__(self, "future_timestamps", stamps)

    @property
    def horizon(self) -> int:
        return self.future_temps.size


@dataclass(frozen=True)
class ForecastResult:
    predictions: np.ndarray
    latency_seconds: float
    normalized: np.ndarray = field(repr=False)
    rows: np.ndarray = field(repr=False)  # future feature rows with P filled in
    timestamps: np.ndarray = field(repr=False)


def build_future_rows(
    temps,
    timestamps,
    imputer: ImputationModel,
    scaler: ScalerParams,
    features: Sequence[str] = FeatureSpec().features,
    target: str = "P",
) -> np.ndarray:
    """Normalized feature rows for the horizon; the target column is NaN (pending)."""
    temps = np.asarray(temps, dtype=np.float64)
    stamps = np.asarray(timestamps, dtype=np.int64)
    missing = [f for f in features if f not in scaler.stats]
    if missing:
        raise ScalerMissingChannel(f"scaler lacks {missing}")
    rows = np.empty((temps.size, len(features)))
    for k, name in enumerate(features):
        if name == target:
            rows[:, k] = np.nan
            continue
        if name == "hour":
            raw = hour_of_day(stamps).astype(np.float64)
        elif name == "T":
            raw = temps
        elif name in imputer.rules:
            raw = imputer.rules[name](temps)
        elif name in IMPUTED_CHANNELS:
            raise ImputerMissingChannel(f"imputer has no rule for {name!r}")
        else:
            raise ImputerMissingChannel(f"cannot reconstruct feature {name!r} from temperature")
        rows[:, k] = scaler.scale_values(name, raw)
    return rows


def recursive_forecast(
    w: NetworkWeights,
    req: ForecastRequest,
    imputer: ImputationModel,
    scaler: ScalerParams,
    spec: FeatureSpec | None = None,
) -> ForecastResult:
    """Roll an L-row window forward, feeding each one-step prediction back as P."""
    start = time.perf_counter()
    spec = spec or FeatureSpec(window=w.window)
    L, D = spec.window, spec.n_features
    if (w.window, w.input_dim) != (L, D):
        raise DimensionMismatch(
            f"weights expect window {w.window} x {w.input_dim}, features give {L} x {D}"
        )
    if len(req.history) < L:
        raise InvalidRequest(f"history has {len(req.history)} rows, window needs {L}")
    window = np.array(req.history.matrix(spec.features)[-L:])
    rows = build_future_rows(
        req.future_temps, req.future_timestamps, imputer, scaler, spec.features, spec.target
    )
    p = spec.target_index
    normalized = np.empty(req.horizon)
    for j in range(req.horizon):
        yhat, _ = forward(window, w)
        if not np.isfinite(yhat):
            raise NonFiniteOutput(
                f"step {j}: prediction {yhat}; window range "
                f"[{np.nanmin(window):.3g}, {np.nanmax(window):.3g}]"
            )
        normalized[j] = yhat
        rows[j, p] = yhat
        window = np.vstack([window[1:], rows[j]])
    predictions = inverse_transform_target(normalized, scaler, spec.target)
    latency = time.perf_counter() - start
    return ForecastResult(predictions, latency, normalized, rows, req.future_timestamps)


@dataclass(frozen=True)
class ForecastDay:
    timestamps: np.ndarray
    temps: np.ndarray
    truth: np.ndarray | None = None  # raw watts


def forecast_days(
    w: NetworkWeights,
    history: TimeSeriesFrame,
    days: Sequence[ForecastDay],
    imputer: ImputationModel,
    scaler: ScalerParams,
    refresh_with_truth: bool = False,
    spec: FeatureSpec | None = None,
) -> list[ForecastResult]:
    """Forecast consecutive days, each seeded from the window left by the previous one.

    With ``refresh_with_truth`` a day's released ground truth replaces its
    predicted P before the window moves on.
    """
    spec = spec or FeatureSpec(window=w.window)
    ts = history.timestamps
    mat = history.matrix(spec.features)
    p = spec.target_index
    results = []
    for day in days:
        hist = make_frame(ts, {f: mat[:, k] for k, f in enumerate(spec.features)})
        res = recursive_forecast(w, ForecastRequest(hist, day.temps, day.timestamps), imputer, scaler, spec)
        results.append(res)
        rows = res.rows.copy()
        if refresh_with_truth and day.truth is not None:
            rows[:, p] = scaler.scale_values(spec.target, day.truth)
        ts = np.concatenate([ts, day.timestamps])[-spec.window :]
        mat = np.vstack([mat, rows])[-spec.window :]
    return results
