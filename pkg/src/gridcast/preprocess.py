"""Resolution matching, test-time imputation and normalization."""

from __future__ import annotations

import enum
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import (
    ConstantChannel,
    DegenerateDesign,
    EmptyFrame,
    GroupTooLarge,
    InsufficientData,
    MissingChannel,
    MissingTargetStats,
    MissingTemperature,
    UnknownChannel,
    ZeroVariance,
)
from .frame import IMPUTED_CHANNELS, TARGET, TimeSeriesFrame, make_frame

PREDICTOR = "T"
POLY_DEGREE = 3


def downsample_hourly(frame: TimeSeriesFrame, group: int = 12) -> TimeSeriesFrame:
    """Average every ``group`` consecutive rows; a trailing partial group is dropped.

    Each output row is stamped with the first timestamp of its group.
    """
    n = len(frame)
    if n == 0:
        raise EmptyFrame("cannot downsample an empty frame")
    if group < 1:
        raise ValueError("group must be positive")
    if group > n:
        raise GroupTooLarge(f"group {group} exceeds frame length {n}")
    k = n // group
    m = k * group
    ts = frame.timestamps[:m:group]
    channels = {
        name: values[:m].reshape(k, group).mean(axis=1)
        for name, values in frame.channels.items()
    }
    return make_frame(ts, channels)


# --- imputation -------------------------------------------------------------


@dataclass(frozen=True)
class MeanFill:
    mean: float

    def __call__(self, temperature: np.ndarray) -> np.ndarray:
        return np.full(np.shape(temperature), self.mean, dtype=np.float64)


@dataclass(frozen=True)
class PolyFill:
    """Cubic in temperature, ``coef[k]`` multiplies ``T**k``."""

    coef: tuple[float, float, float, float]

    def __post_init__(self):
        coef = tuple(float(c) for c in self.coef)
        if len(coef) != POLY_DEGREE + 1 or not np.all(np.isfinite(coef)):
            raise ValueError("PolyFill needs four finite coefficients")
        object.__setattr__(self, "coef", coef)

    def __call__(self, temperature: np.ndarray) -> np.ndarray:
        t = np.asarray(temperature, dtype=np.float64)
        out = np.full(t.shape, self.coef[-1])
        for c in self.coef[-2::-1]:
            out = out * t + c
        return out


Rule = MeanFill | PolyFill


@dataclass(frozen=True)
class ImputationModel:
    rules: Mapping[str, Rule]

    def __post_init__(self):
        object.__setattr__(self, "rules", dict(self.rules))


def _finite(values: np.ndarray) -> np.ndarray:
    return values[np.isfinite(values)]


def fit_mean_imputer(
    train: TimeSeriesFrame, channels: Sequence[str] = IMPUTED_CHANNELS
) -> ImputationModel:
    """Constant fill with each channel's training mean (NaNs ignored)."""
    if len(train) == 0:
        raise EmptyFrame("training frame is empty")
    rules = {}
    for name in channels:
        if name not in train:
            raise MissingChannel(f"training frame lacks {name!r}")
        vals = _finite(train[name])
        if vals.size == 0:
            raise EmptyFrame(f"channel {name!r} has no finite values")
        rules[name] = MeanFill(float(vals.mean()))
    return ImputationModel(rules)


def _scaled_to_raw(gamma: np.ndarray, center: float, scale: float) -> np.ndarray:
    # sum_k gamma_k ((T - c)/s)^k  ->  sum_j beta_j T^j
    beta = np.zeros_like(gamma)
    for k, g in enumerate(gamma):
        for j in range(k + 1):
            beta[j] += g * comb(k, j) * (-center) ** (k - j) / scale**k
    return beta


def fit_cubic(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Least-squares cubic ``y ~ b0 + b1 t + b2 t^2 + b3 t^3``.

    The design is built on centred, range-scaled ``t`` and solved by QR; a
    rank-deficient factorization falls back to the SVD minimum-norm solution.
    Coefficients are returned for the raw variable.
    """
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if t.size < POLY_DEGREE + 1:
        raise InsufficientData(f"need at least {POLY_DEGREE + 1} rows, got {t.size}")
    if np.unique(t).size < POLY_DEGREE + 1:
        raise DegenerateDesign("need at least 4 distinct temperature values")
    center = float(t.mean())
    scale = float(t.max() - t.min()) / 2.0
    u = (t - center) / scale
    A = np.vander(u, POLY_DEGREE + 1, increasing=True)
    q, r = np.linalg.qr(A)
    diag = np.abs(np.diag(r))
    if diag.min() <= diag.max() * A.shape[0] * np.finfo(float).eps:
        gamma = np.linalg.lstsq(A, y, rcond=None)[0]
    else:
        gamma = np.linalg.solve(r, q.T @ y)
    return _scaled_to_raw(gamma, center, scale)


def fit_poly_imputer(
    train: TimeSeriesFrame, channels: Sequence[str] = IMPUTED_CHANNELS
) -> ImputationModel:
    if PREDICTOR not in train:
        raise MissingTemperature("training frame lacks temperature")
    rules = {}
    for name in channels:
        if name not in train:
            raise MissingChannel(f"training frame lacks {name!r}")
        t, y = train[PREDICTOR], train[name]
        ok = np.isfinite(t) & np.isfinite(y)
        rules[name] = PolyFill(tuple(fit_cubic(t[ok], y[ok])))
    return ImputationModel(rules)


def impute(frame: TimeSeriesFrame, model: ImputationModel) -> TimeSeriesFrame:
    """Write every channel governed by ``model``; other channels pass through."""
    if PREDICTOR not in frame:
        raise MissingTemperature("frame lacks temperature")
    t = frame[PREDICTOR]
    return frame.with_channels({name: rule(t) for name, rule in model.rules.items()})


# --- normalization ----------------------------------------------------------


class ScaleMethod(str, enum.Enum):
    STANDARD = "standard"
    MINMAX = "minmax"
    ZSCORE = "zscore"


# Standard uses the population deviation, ZScore the sample deviation.
DDOF = {ScaleMethod.STANDARD: 0, ScaleMethod.ZSCORE: 1}


@dataclass(frozen=True)
class ChannelStats:
    """``loc``/``scale`` are mean/std or min/(max - min) depending on the method."""

    loc: float
    scale: float


@dataclass(frozen=True)
class ScalerParams:
    method: ScaleMethod
    stats: Mapping[str, ChannelStats]

    def __post_init__(self):
        object.__setattr__(self, "method", ScaleMethod(self.method))
        object.__setattr__(self, "stats", dict(self.stats))
        for name, st in self.stats.items():
            if not st.scale > 0:
                raise ZeroVariance(f"non-positive scale for {name!r}")

    @property
    def ddof(self) -> int | None:
        return DDOF.get(self.method)

    def describe(self, name: str) -> dict[str, float]:
        st = self.stats[name]
        if self.method is ScaleMethod.MINMAX:
            return {"min": st.loc, "max": st.loc + st.scale}
        return {"mean": st.loc, "std": st.scale}

    def scale_values(self, name: str, values) -> np.ndarray:
        if name not in self.stats:
            raise UnknownChannel(f"no scaler stats for {name!r}")
        st = self.stats[name]
        return (np.asarray(values, dtype=np.float64) - st.loc) / st.scale

    def unscale_values(self, name: str, values) -> np.ndarray:
        st = self.stats[name]
        return np.asarray(values, dtype=np.float64) * st.scale + st.loc


def fit_scaler(
    train: TimeSeriesFrame, method: ScaleMethod | str, channels: Sequence[str] | None = None
) -> ScalerParams:
    """Per-channel statistics from the training frame (NaNs ignored)."""
    method = ScaleMethod(method)
    if len(train) == 0:
        raise EmptyFrame("training frame is empty")
    names = train.names if channels is None else tuple(channels)
    stats = {}
    for name in names:
        if name not in train:
            raise MissingChannel(f"training frame lacks {name!r}")
        vals = _finite(train[name])
        if vals.size == 0:
            raise EmptyFrame(f"channel {name!r} has no finite values")
        if method is ScaleMethod.MINMAX:
            lo, hi = float(vals.min()), float(vals.max())
            if not hi > lo:
                raise ConstantChannel(f"channel {name!r} is constant")
            stats[name] = ChannelStats(lo, hi - lo)
        else:
            ddof = DDOF[method]
            if vals.size <= ddof:
                raise InsufficientData(f"channel {name!r} needs more than {ddof} rows")
            sd = float(vals.std(ddof=ddof))
            if not sd > 0:
                raise ZeroVariance(f"channel {name!r} has zero variance")
            stats[name] = ChannelStats(float(vals.mean()), sd)
    return ScalerParams(method, stats)


def transform(frame: TimeSeriesFrame, params: ScalerParams) -> TimeSeriesFrame:
    unknown = [n for n in frame.names if n not in params.stats]
    if unknown:
        raise UnknownChannel(f"no scaler stats for {unknown}")
    return make_frame(
        frame.timestamps, {n: params.scale_values(n, v) for n, v in frame.channels.items()}
    )


def inverse_transform_target(values, params: ScalerParams, target: str = TARGET) -> np.ndarray:
    if target not in params.stats:
        raise MissingTargetStats(f"scaler has no stats for {target!r}")
    return params.unscale_values(target, values)
