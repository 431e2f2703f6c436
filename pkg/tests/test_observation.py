from dataclasses import replace

import numpy as np
import pytest

from hxmonitor.degradation import DegradationParams, FailureMode
from hxmonitor.observation import (
    CHANNELS,
    DegradationTheta,
    ObservationSeries,
    OperatingConditions,
    heat_duty,
    read_sidecar,
    simulate,
    simulate_batch,
)
from hxmonitor.thermal import ExchangerConductance, FluidStream, solve_steady_state

COND = OperatingConditions()
QUIET = replace(COND, noise_temp=0.0, noise_flow=0.0)
S3 = DegradationTheta(FailureMode.FOULING, DegradationParams(18, 0.05, 1e-3, 3.0))
LEAK = DegradationTheta(FailureMode.LEAKAGE, DegradationParams(18, 0.01, 1e-3, 1.0))


def test_conditions_validation():
    with pytest.raises(ValueError):
        OperatingConditions(horizon=1)
    with pytest.raises(ValueError):
        OperatingConditions(noise_temp=-0.1)
    assert list(COND.noise_sigmas) == [0.5] * 4 + [0.01] * 2


def test_conditions_roundtrip():
    assert OperatingConditions.from_dict(COND.to_dict()) == COND


def test_series_validation():
    with pytest.raises(ValueError):
        ObservationSeries(*[np.zeros(5)] * 5, np.zeros(4))
    with pytest.raises(ValueError):
        ObservationSeries(*[np.zeros(5)] * 5, np.array([0, 0, np.nan, 0, 0]))
    with pytest.raises(ValueError):
        ObservationSeries.from_array(np.zeros((5, 10)))


def test_no_failure_without_noise_is_constant_clean_state():
    _, obs = simulate(DegradationTheta(FailureMode.NONE, DegradationParams(18, 0.05, 1e-3, 3.0)), QUIET,
                      np.random.default_rng(0))
    clean = solve_steady_state(COND.hot_inlet, COND.cold_inlet, ExchangerConductance(COND.ua_clean))
    a = obs.to_array()
    assert np.all(a == a[:, :1])
    assert a[1, 0] == pytest.approx(clean.t_hot_out, abs=1e-12)
    assert a[3, 0] == pytest.approx(clean.t_cold_out, abs=1e-12)


def test_leak_without_noise_reports_diverted_flow():
    latent, obs = simulate(LEAK, QUIET, np.random.default_rng(1))
    assert np.array_equal(obs.m_hot_out, COND.hot_inlet.mass_flow * (1 - latent.leak_fraction))
    after = obs.m_hot_out[int(LEAK.params.tau):]
    assert np.all(np.diff(after) < 0)


def test_fouling_matches_independent_ntu_evaluation():
    latent, obs = simulate(S3, QUIET, np.random.default_rng(2))
    duty = heat_duty(obs, QUIET)
    assert duty[-1] < duty[0]
    # independent evaluation at the final fouling factor
    ua = COND.ua_clean / (1 + latent.fouling_factor[-1])
    c = COND.hot_inlet.mass_flow * COND.hot_inlet.specific_heat
    ntu = ua / c
    eps = ntu / (1 + ntu)
    t_hot_out = COND.hot_inlet.inlet_temp - eps * (COND.hot_inlet.inlet_temp - COND.cold_inlet.inlet_temp)
    assert obs.t_hot_out[-1] == pytest.approx(t_hot_out, abs=1e-9)
    clean_dt = COND.hot_inlet.inlet_temp - obs.t_hot_out[0]
    assert COND.hot_inlet.inlet_temp - obs.t_hot_out[-1] < clean_dt


def test_noise_free_energy_balance():
    _, obs = simulate(DegradationTheta(FailureMode.BOTH, DegradationParams(30, 0.05, 2e-3, 2.0)), QUIET,
                      np.random.default_rng(3))
    cp = COND.hot_inlet.specific_heat
    q_hot = obs.m_hot_out * cp * (obs.t_hot_in - obs.t_hot_out)
    q_cold = COND.cold_inlet.mass_flow * COND.cold_inlet.specific_heat * (obs.t_cold_out - obs.t_cold_in)
    assert np.allclose(q_hot, q_cold, rtol=1e-12, atol=1e-9)


def test_fouling_duty_non_increasing_where_fouling_grows():
    latent, obs = simulate(S3, QUIET, np.random.default_rng(4))
    duty = heat_duty(obs, QUIET)
    grows = np.diff(latent.fouling_factor) > 0
    assert np.all(np.diff(duty)[grows] <= 1e-9)


def test_noise_variance():
    cond = replace(COND, horizon=10_000)
    theta = DegradationTheta(FailureMode.NONE, DegradationParams(18, 0.01, 1e-3, 1.0))
    _, noisy = simulate(theta, cond, np.random.default_rng(5))
    _, clean = simulate(theta, replace(cond, noise_temp=0.0, noise_flow=0.0), np.random.default_rng(5))
    resid = noisy.to_array() - clean.to_array()
    for ch in range(4):
        assert resid[ch].var() == pytest.approx(cond.noise_temp ** 2, rel=0.05)
    for ch in (4, 5):
        assert resid[ch].var() == pytest.approx(cond.noise_flow ** 2, rel=0.05)


def test_simulate_is_deterministic():
    a = simulate(S3, COND, np.random.default_rng(6))[1].to_array()
    b = simulate(S3, COND, np.random.default_rng(6))[1].to_array()
    assert a.tobytes() == b.tobytes()


def test_batch_matches_single_simulation():
    rng = np.random.default_rng(7)
    y = simulate_batch([1], [18.0], [0.05], [1e-3], [3.0], COND, rng)
    _, obs = simulate(S3, COND, np.random.default_rng(7))
    assert y.shape == (1, 6, 100)
    assert np.allclose(y[0], obs.to_array(), rtol=0, atol=1e-12)


def test_csv_roundtrip(tmp_path):
    _, obs = simulate(S3, COND, np.random.default_rng(8))
    p = obs.to_csv(tmp_path / "rec.csv", {"theta": S3.to_dict(), "seed": 8})
    back = ObservationSeries.from_csv(p)
    assert back.to_array().tobytes() == obs.to_array().tobytes()
    meta = read_sidecar(p)
    assert meta["format"] == "hxmonitor-record/1"
    assert DegradationTheta.from_dict(meta["theta"]) == S3
    assert p.read_text().splitlines()[0] == ",".join(("t",) + CHANNELS)


def test_csv_rejects_wrong_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,a,b,c,d,e,f\n1,1,1,1,1,1,1\n")
    with pytest.raises(ValueError):
        ObservationSeries.from_csv(p)


def test_nonstandard_inlets():
    cond = replace(QUIET, hot_inlet=FluidStream(2.0, 3000.0, 400.0))
    _, obs = simulate(S3, cond, np.random.default_rng(9))
    assert np.all(obs.t_hot_in == 400.0) and np.all(obs.m_hot_in == 2.0)
