"""Day-ahead error metrics: RMSE, MAE, MAPE, range-normalized accuracy, latency."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np

from .errors import Empty, LengthMismatch, NonPositiveEps, ZeroRange

DEFAULT_EPS = 1e-8


def _pair(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    yhat = np.asarray(yhat, dtype=np.float64).reshape(-1)
    if y.shape != yhat.shape:
        raise LengthMismatch(f"{y.size} targets vs {yhat.size} predictions")
    if y.size == 0:
        raise Empty("metrics need at least one point")
    return y, yhat


def rmse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def mae(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def mape(y, yhat, eps: float = DEFAULT_EPS) -> float:
    """Percent error with the denominator clamped to ``max(|y|, eps)``."""
    if not eps > 0:
        raise NonPositiveEps("eps must be positive")
    y, yhat = _pair(y, yhat)
    return float(100.0 * np.mean(np.abs(y - yhat) / np.maximum(np.abs(y), eps)))


def normalized_accuracy(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    span = float(y.max() - y.min())
    if not span > 0:
        raise ZeroRange("ground truth is flat; accuracy is undefined")
    return float(100.0 * (1.0 - mae(y, yhat) / span))


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    mae: float
    mape: float
    accuracy: float
    latency: float
    horizon: int

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate_day(y, yhat, latency: float, eps: float = DEFAULT_EPS) -> MetricReport:
    y, yhat = _pair(y, yhat)
    return MetricReport(
        rmse=rmse(y, yhat),
        mae=mae(y, yhat),
        mape=mape(y, yhat, eps),
        accuracy=normalized_accuracy(y, yhat),
        latency=float(latency),
        horizon=int(y.size),
    )


def aggregate(reports: Sequence[MetricReport]) -> MetricReport:
    """Unweighted mean of every metric across days."""
    if not reports:
        raise Empty("nothing to aggregate")
    fields = ("rmse", "mae", "mape", "accuracy", "latency")
    means = {f: float(np.mean([getattr(r, f) for r in reports])) for f in fields}
    return MetricReport(**means, horizon=reports[0].horizon)
