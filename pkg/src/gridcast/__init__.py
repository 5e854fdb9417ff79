"""Lightweight day-ahead power forecasting for smart buildings.

Hourly resolution matching, temperature-driven test-time imputation,
normalization, a BiGRU-LSTM forecaster trained from scratch, recursive
24-hour prediction and the day-ahead metric suite.
"""

from .frame import FEATURES, FeatureSpec, TimeSeriesFrame, WindowSample, make_frame
from .kernels import BACKEND
from .network import NetworkWeights, init_weights
from .training import TrainConfig, fit

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "FEATURES",
    "FeatureSpec",
    "NetworkWeights",
    "TimeSeriesFrame",
    "TrainConfig",
    "WindowSample",
    "fit",
    "init_weights",
    "make_frame",
]
