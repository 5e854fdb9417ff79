import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridcast.errors import (
    DuplicateChannel,
    LengthMismatch,
    MissingFeature,
    NonFiniteWindow,
    NonMonotonicTimestamps,
    TooShort,
)
from gridcast.frame import (
    FeatureSpec,
    WindowSample,
    encode_time_feature,
    hour_of_day,
    make_frame,
    sliding_windows,
    stack_windows,
    window_arrays,
)


def hourly(n, start=1736121600, **extra):
    ts = start + 3600 * np.arange(n)
    chans = {"P": np.arange(n, dtype=float), "T": np.linspace(0, 1, n)}
    chans.update(extra)
    return make_frame(ts, chans)


def test_make_frame_examples():
    f = make_frame([0, 3600], {"T": [12.0, 13.0]})
    assert len(f) == 2 and f.names == ("T",)
    with pytest.raises(NonMonotonicTimestamps):
        make_frame([0, 0], {"T": [1, 2]})
    with pytest.raises(LengthMismatch):
        make_frame([0, 300, 600], {"T": [1, 2]})
    with pytest.raises(DuplicateChannel):
        make_frame([0, 1], [("T", [1, 2]), ("T", [3, 4])])


def test_frame_is_immutable():
    f = make_frame([0, 3600], {"T": [12.0, 13.0]})
    with pytest.raises(ValueError):
        f["T"][0] = 1.0
    with pytest.raises(ValueError):
        f.timestamps[0] = 5
    g = f.with_channels({"T": [1.0, 2.0]})
    assert f["T"][0] == 12.0 and g["T"][0] == 1.0


def test_hour_encoding():
    assert hour_of_day(np.array([1736121600]))[0] == 0
    assert hour_of_day(np.array([1736121600 + 13 * 3600]))[0] == 13
    a, b = hour_of_day(np.array([1736121600 + 7 * 3600, 1736121600 + 31 * 3600]))
    assert a == b == 7


def test_encode_is_idempotent():
    f = encode_time_feature(hourly(30))
    g = encode_time_feature(f)
    np.testing.assert_array_equal(f["hour"], g["hour"])
    assert f["hour"][:3].tolist() == [0.0, 1.0, 2.0]


def test_window_counts():
    spec = FeatureSpec(("P", "T"), "P", 24)
    one = sliding_windows(hourly(25), spec)
    assert len(one) == 1 and one[0].target == 24.0
    assert len(sliding_windows(hourly(48), spec)) == 24
    with pytest.raises(TooShort):
        sliding_windows(hourly(24), spec)


def test_window_targets_by_hand():
    f = make_frame([0, 1, 2, 3], {"P": [1.0, 2.0, 3.0, 4.0]})
    s = sliding_windows(f, FeatureSpec(("P",), "P", 2))
    assert [w.target for w in s] == [3.0, 4.0]
    np.testing.assert_array_equal(s[1].inputs[:, 0], [2.0, 3.0])


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 80), st.integers(1, 12))
def test_window_offsets(n, L):
    if n < L + 1:
        return
    f = hourly(n)
    spec = FeatureSpec(("T", "P"), "P", L)
    X, y = window_arrays(f, spec)
    assert X.shape == (n - L, L, 2)
    for k in range(n - L):
        assert X[k, -1, 1] == f["P"][k + L - 1]
        assert y[k] == f["P"][k + L]
    Xs, ys = stack_windows(sliding_windows(f, spec))
    np.testing.assert_array_equal(X, Xs)
    np.testing.assert_array_equal(y, ys)


def test_nonfinite_windows():
    p = np.arange(10.0)
    p[4] = np.nan
    f = make_frame(np.arange(10), {"P": p})
    spec = FeatureSpec(("P",), "P", 2)
    with pytest.raises(NonFiniteWindow):
        window_arrays(f, spec)
    X, y = window_arrays(f, spec, drop_nonfinite=True)
    assert len(y) == 8 - 3
    with pytest.raises(NonFiniteWindow):
        WindowSample(np.array([[np.nan]]), 1.0)


def test_spec_validation():
    assert FeatureSpec().features == ("hour", "P", "V", "I", "PPV", "T")
    assert FeatureSpec().window == 24 and FeatureSpec().target_index == 1
    with pytest.raises(MissingFeature):
        FeatureSpec(("T",), "P", 3)
    with pytest.raises(MissingFeature):
        hourly(3).matrix(["V"])
