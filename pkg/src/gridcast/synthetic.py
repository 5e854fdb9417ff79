"""Synthetic smart-building dataset in a three-split layout (train, validation, test).

One contiguous 5-minute series is generated and split into a training year,
a 40-day validation block and a 5-day hourly test block. Power follows a
seasonal daily sine with a mild heating load; after hourly averaging its
noise has standard deviation ``noise_frac`` times the clean power range.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .frame import TimeSeriesFrame, make_frame
from .preprocess import downsample_hourly

STEP_SECONDS = 300
PER_HOUR = 12
PER_DAY = 288


@dataclass(frozen=True)
class SyntheticDataset:
    d1: TimeSeriesFrame  # 5-min, all channels
    d2: TimeSeriesFrame  # 5-min, all channels
    d3: TimeSeriesFrame  # hourly, T only
    d3_truth: TimeSeriesFrame  # hourly, P only
    power_range: float


def _epoch(day: str) -> int:
    return int(datetime.fromisoformat(day).replace(tzinfo=timezone.utc).timestamp())


def generate(
    seed: int = 0,
    test_start: str = "2025-01-06",
    train_days: int = 365,
    val_days: int = 40,
    test_days: int = 5,
    noise_frac: float = 0.05,
    level_shift: float = 0.0,
) -> SyntheticDataset:
    """Build the three splits.

    ``level_shift`` applies :func:`shift_level` to the result.
    """
    rng = np.random.default_rng(seed)
    t0 = _epoch(test_start) - (train_days + val_days) * 86400
    n = (train_days + val_days + test_days) * PER_DAY
    ts = t0 + STEP_SECONDS * np.arange(n, dtype=np.int64)

    hours = (ts % 86400) / 3600.0
    day_of_year = np.array(
        [datetime.fromtimestamp(int(s), timezone.utc).timetuple().tm_yday for s in ts[::PER_DAY]]
    ).repeat(PER_DAY)[:n] + hours / 24.0
    season = np.cos(2 * np.pi * (day_of_year - 15.0) / 365.25)  # +1 mid-January
    daily = np.sin(2 * np.pi * (hours - 9.0) / 24.0)

    temp_clean = 15.0 - 6.0 * season + 4.0 * daily
    p_clean = (
        2000.0
        + 250.0 * season
        + (900.0 + 150.0 * season) * np.sin(2 * np.pi * (hours - 8.0) / 24.0)
        - 25.0 * (temp_clean - 15.0)
    )
    span = float(p_clean.max() - p_clean.min())
    # i.i.d. 5-min noise, averaged over 12 samples per hour
    sigma = noise_frac * span * np.sqrt(PER_HOUR)
    power = p_clean + rng.normal(0.0, sigma, n)
    temp = temp_clean + rng.normal(0.0, 0.3 * np.sqrt(PER_HOUR), n)
    sun = np.clip(np.sin(np.pi * (hours - 6.0) / 12.0), 0.0, None)
    pv = np.clip(1200.0 * sun * (0.65 - 0.35 * season) + rng.normal(0.0, 40.0, n), 0.0, None)
    volt = 230.0 + 2.0 * np.sin(2 * np.pi * hours / 24.0) - 0.001 * (power - 2000.0)
    volt = volt + rng.normal(0.0, 0.5, n)
    current = power / volt + rng.normal(0.0, 0.05, n)

    full = make_frame(ts, {"P": power, "V": volt, "I": current, "PPV": pv, "T": temp})
    a = train_days * PER_DAY
    b = a + val_days * PER_DAY
    test = downsample_hourly(full.rows(b, None), PER_HOUR)
    ds = SyntheticDataset(
        d1=full.rows(0, a),
        d2=full.rows(a, b),
        d3=test.select(["T"]),
        d3_truth=test.select(["P"]),
        power_range=span,
    )
    return shift_level(ds, level_shift) if level_shift else ds


def shift_level(ds: SyntheticDataset, frac: float) -> SyntheticDataset:
    """Raise P by ``frac`` times the power range from one day before the test block on.

    The forecast window therefore already sees the new level. Only P moves;
    the other channels and all noise draws are untouched.
    """
    delta = frac * ds.power_range
    shift_from = len(ds.d2) - PER_DAY
    p2 = np.array(ds.d2["P"])
    p2[shift_from:] += delta
    return SyntheticDataset(
        d1=ds.d1,
        d2=ds.d2.with_channels({"P": p2}),
        d3=ds.d3,
        d3_truth=ds.d3_truth.with_channels({"P": ds.d3_truth["P"] + delta}),
        power_range=ds.power_range,
    )
