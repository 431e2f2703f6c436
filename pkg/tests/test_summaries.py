from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from hxmonitor.degradation import DegradationParams, FailureMode
from hxmonitor.observation import DegradationTheta, ObservationSeries, OperatingConditions, simulate
from hxmonitor.summaries import (
    FEATURES,
    N_SUMMARIES,
    SIGNALS,
    SUMMARY_NAMES,
    SummaryError,
    derive_signals,
    features,
    summarize,
)

QUIET = OperatingConditions(noise_temp=0.0, noise_flow=0.0)


def test_ordering_contract():
    assert SIGNALS == ("hot_dT", "cold_dT", "flow_loss", "t_hot_out", "t_cold_out")
    assert FEATURES == ("mean", "std", "early_late", "range", "slope")
    assert N_SUMMARIES == 25
    assert SUMMARY_NAMES[0] == "hot_dT__mean"
    assert SUMMARY_NAMES[3] == "hot_dT__range"
    assert SUMMARY_NAMES[12] == "flow_loss__early_late"
    assert SUMMARY_NAMES[24] == "t_cold_out__slope"


def test_constant_signal_features():
    assert features(np.full(10, 3.5)).tolist() == [3.5, 0.0, 0.0, 0.0, 0.0]


def test_ramp_features():
    f = features(np.arange(1, 101, dtype=float))
    assert f[0] == pytest.approx(50.5, abs=1e-12)
    assert f[2] == pytest.approx(75.0, abs=1e-12)
    assert f[4] == pytest.approx(1.0, abs=1e-12)
    assert f[1] == pytest.approx(np.sqrt((100 ** 2 - 1) / 12), rel=1e-12)
    assert f[3] == 99.0


def test_spike_features():
    x = np.zeros(100)
    x[49] = 2.5
    f = features(x)
    assert f[3] == 2.5
    # OLS slope of a single spike near the middle is tiny
    assert abs(f[4]) < 1e-3


def test_too_short():
    with pytest.raises(SummaryError):
        features(np.zeros(3))


def test_signal_definitions():
    a = np.arange(6 * 8, dtype=float).reshape(6, 8) ** 1.5
    s = derive_signals(ObservationSeries.from_array(a))
    assert np.array_equal(s[0], a[0] - a[1])
    assert np.array_equal(s[1], a[3] - a[2])
    assert np.array_equal(s[2], a[4] - a[5])
    assert np.array_equal(s[3], a[1]) and np.array_equal(s[4], a[3])


def test_leak_flow_signal_identity():
    theta = DegradationTheta(FailureMode.LEAKAGE, DegradationParams(18, 0.01, 1e-3, 1.0))
    latent, obs = simulate(theta, QUIET, np.random.default_rng(0))
    assert np.allclose(derive_signals(obs)[2], QUIET.hot_inlet.mass_flow * latent.leak_fraction, rtol=0, atol=1e-15)


def test_clean_run_equal_capacity_rates_gives_equal_deltas():
    theta = DegradationTheta(FailureMode.NONE, DegradationParams(18, 0.01, 1e-3, 1.0))
    _, obs = simulate(theta, QUIET, np.random.default_rng(0))
    s = derive_signals(obs)
    assert np.allclose(s[0], s[1], rtol=1e-12)
    v = summarize(obs)
    assert v[2] == 0 and v[7] == 0 and v[12] == 0


def test_identical_series_identical_vectors():
    theta = DegradationTheta(FailureMode.FOULING, DegradationParams(18, 0.03, 1e-3, 0.5))
    _, a = simulate(theta, OperatingConditions(), np.random.default_rng(1))
    _, b = simulate(theta, OperatingConditions(), np.random.default_rng(1))
    assert summarize(a).tobytes() == summarize(b).tobytes()


def test_permutation_invariant_features():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(6, 40))
    p = a[:, rng.permutation(40)]
    fa = summarize(a).reshape(5, 5)
    fp = summarize(p).reshape(5, 5)
    for j in (0, 1, 3):
        assert np.allclose(fa[:, j], fp[:, j], rtol=1e-12)
    assert not np.allclose(fa[:, 4], fp[:, 4])


def test_batched_matches_single():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 6, 20))
    assert np.allclose(summarize(a), np.stack([summarize(x) for x in a]), rtol=0, atol=0)


# which signals each channel feeds
_FEEDS = {0: (0,), 1: (0, 3), 2: (1,), 3: (1, 4), 4: (2,), 5: (2,)}


@settings(max_examples=50)
@given(arrays(float, (6, 12), elements=st.floats(-100, 100)), st.integers(0, 5), st.floats(-50, 50))
def test_translation_covariance(a, channel, c):
    b = a.copy()
    b[channel] += c
    fa, fb = summarize(a).reshape(5, 5), summarize(b).reshape(5, 5)
    for sig in range(5):
        tol = 1e-9 * (1 + np.abs(a).max() + abs(c))
        # spread, drift and trend features never move
        assert np.allclose(fa[sig, 1:], fb[sig, 1:], atol=tol)
        if sig not in _FEEDS[channel]:
            assert np.allclose(fa[sig, 0], fb[sig, 0], atol=0)
        else:
            assert abs(abs(fb[sig, 0] - fa[sig, 0]) - abs(c)) <= tol


def test_finite_for_noisy_records():
    theta = DegradationTheta(FailureMode.BOTH, DegradationParams(10, 0.1, 5e-3, 3.0))
    _, obs = simulate(theta, replace(OperatingConditions(), noise_temp=2.0), np.random.default_rng(4))
    assert np.all(np.isfinite(summarize(obs)))
