import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gridcast.errors import Empty, LengthMismatch, NonPositiveEps, ZeroRange
from gridcast.metrics import aggregate, evaluate_day, mae, mape, normalized_accuracy, rmse

FIXTURES = Path(__file__).parent / "fixtures"
PUBLISHED_STANDARD_RMSE = [630.8, 523.3, 518.8, 611.5, 721.1]


def day2():
    doc = json.loads((FIXTURES / "day2_standard.json").read_text())
    return np.array(doc["y"]), np.array(doc["yhat"])


def test_rmse_examples():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert round(rmse([0, 0], [3, 4]), 4) == 3.5355
    assert rmse([5.0] * 7, [2.5] * 7) == pytest.approx(2.5, abs=1e-15)


def test_mae_examples():
    assert mae([0, 0], [3, -3]) == 3.0
    assert mae([1.0], [1.0]) == 0.0


def test_mape_examples():
    assert mape([100.0], [90.0], eps=1e-8) == pytest.approx(10.0, abs=1e-12)
    assert mape([0.0], [1.0], eps=1.0) == 100.0
    assert mape([3.0, 4.0], [3.0, 4.0]) == 0.0


def test_accuracy_examples():
    assert normalized_accuracy([0, 1000], [100, 900]) == pytest.approx(90.0, abs=1e-12)
    assert normalized_accuracy([1, 2, 3], [1, 2, 3]) == 100.0
    with pytest.raises(ZeroRange):
        normalized_accuracy([5.0] * 24, np.arange(24.0))


def test_errors():
    with pytest.raises(LengthMismatch):
        rmse([1, 2], [1])
    with pytest.raises(Empty):
        mae([], [])
    with pytest.raises(NonPositiveEps):
        mape([1.0], [1.0], eps=0.0)
    with pytest.raises(Empty):
        aggregate([])


def test_day2_fixture_report():
    y, yhat = day2()
    assert y.size == 24
    rep = evaluate_day(y, yhat, latency=0.1)
    assert round(rep.rmse, 4) == 523.3
    assert round(rep.mae, 4) == 397.5
    assert round(rep.mape, 4) == 20.9500
    assert round(rep.accuracy, 4) == 77.9167  # range 1800 W
    assert rep.horizon == 24 and rep.latency == 0.1


def test_published_mean_rmse():
    # aggregate() over reports carrying the published per-day values
    reps = [evaluate_day([0.0, 2 * v], [v, v], 0.0) for v in PUBLISHED_STANDARD_RMSE]
    assert [round(r.rmse, 4) for r in reps] == PUBLISHED_STANDARD_RMSE
    assert round(aggregate(reps).rmse, 1) == 601.1
    assert round(aggregate(reps).rmse, 1) != 601.9  # the headline figure is not the per-day mean


def test_perfect_days_aggregate():
    y = np.linspace(100, 2000, 24)
    reps = [evaluate_day(y, y, 0.05 * k) for k in range(5)]
    agg = aggregate(reps)
    assert all(r.accuracy == 100.0 for r in reps)
    assert agg.accuracy == 100.0 and agg.rmse == 0.0
    assert agg.latency == pytest.approx(0.1)


vec = arrays(np.float64, 24, elements=st.floats(-5e3, 5e3, allow_nan=False))


@settings(max_examples=200, deadline=None)
@given(vec, vec)
def test_rmse_dominates_mae(y, yhat):
    assert rmse(y, yhat) >= mae(y, yhat) - 1e-9


@settings(max_examples=100, deadline=None)
@given(vec, vec, st.randoms(use_true_random=False))
def test_permutation_invariance(y, yhat, rnd):
    idx = list(range(24))
    rnd.shuffle(idx)
    for f in (rmse, mae, mape):
        assert f(y[idx], yhat[idx]) == pytest.approx(f(y, yhat), rel=1e-12, abs=1e-9)
    if np.ptp(y) > 0:
        assert normalized_accuracy(y[idx], yhat[idx]) == pytest.approx(normalized_accuracy(y, yhat), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(vec, vec, st.floats(0.1, 100.0))
def test_scaling(y, yhat, c):
    assert rmse(c * y, c * yhat) == pytest.approx(c * rmse(y, yhat), rel=1e-9, abs=1e-9)
    assert mae(c * y, c * yhat) == pytest.approx(c * mae(y, yhat), rel=1e-9, abs=1e-9)
    assert mape(c * y, c * yhat, eps=c * 1e-3) == pytest.approx(mape(y, yhat, eps=1e-3), rel=1e-9)
    if np.ptp(y) > 1e-6:
        assert normalized_accuracy(c * y, c * yhat) == pytest.approx(
            normalized_accuracy(y, yhat), rel=1e-9, abs=1e-9
        )


def test_accuracy_100_only_when_exact():
    y = np.arange(24.0)
    assert normalized_accuracy(y, y) == 100.0
    bumped = y.copy()
    bumped[3] += 1e-6
    assert normalized_accuracy(y, bumped) < 100.0
    assert not math.isnan(normalized_accuracy(y, bumped))
