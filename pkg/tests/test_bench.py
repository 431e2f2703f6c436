import csv

import numpy as np
import pytest

from hxmonitor.bench import (ACCURACY_HEADER, COST_HEADER, RECORD_HEADER, SCATTER_HEADER, SUMMARY_HEADER,
                             BenchmarkReport, break_even_calls, engine_seed, predictive_bands, run_benchmark)
from hxmonitor.degradation import FailureMode
from hxmonitor.ensemble import PosteriorEnsemble
from hxmonitor.mcmc import ChainConfig, run_mcmc
from hxmonitor.model import PriorSpec
from hxmonitor.npe.engine import TrainingConfig, generate_training_set, train
from hxmonitor.observation import OperatingConditions
from hxmonitor.scenarios import DEFAULT_SCENARIOS, ScenarioSpec, realizations

T = 30
COND, SPEC = OperatingConditions(horizon=T), PriorSpec(horizon=T)
TINY_CHAINS = ChainConfig(n_chains=2, n_warmup=20, n_samples=20)
SCENARIOS = (ScenarioSpec("foul", "fouling", 10, beta_f=0.05, lam=2.0),
             ScenarioSpec("leak", "leakage", 10, beta_l=0.001),
             ScenarioSpec("quiet", "none", 10))


@pytest.fixture(scope="module")
def posterior():
    ts = generate_training_set(500, SPEC, COND, seed=1)
    return train(ts, TrainingConfig(n_layers=1, n_hidden=8, max_epochs=3))


@pytest.fixture(scope="module")
def report(posterior):
    return run_benchmark(SCENARIOS, COND, SPEC, posterior, TINY_CHAINS, n_realizations=2, n_samples=200, seed=4)


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# --- cost accounting -------------------------------------------------------------------

@pytest.mark.parametrize("upfront, amortized, reference, expected", [
    (5000, 0.0, 900, 6),
    (1800, 0.0, 900, 3),     # equality does not break even
    (0, 0.0, 1.0, 1),
    (10.0, 0.5, 2.0, 7),
    (10.0, 2.0, 2.0, None),
    (10.0, 3.0, 2.0, None),
])
def test_break_even_calls(upfront, amortized, reference, expected):
    assert break_even_calls(upfront, amortized, reference) == expected


def test_break_even_is_minimal():
    for up, a, r in [(123.4, 0.01, 7.7), (5000, 0, 901), (3.0, 1.0, 1.5)]:
        n = break_even_calls(up, a, r)
        assert up + n * a < n * r
        assert n == 1 or up + (n - 1) * a >= (n - 1) * r


def test_engine_seeds_distinct():
    seeds = {engine_seed(0, s, i, e) for s in range(3) for i in range(5) for e in ("mcmc", "npe")}
    assert len(seeds) == 30


# --- benchmark runs ---------------------------------------------------------------------

def test_report_structure(report):
    assert len(report.records) == 3 * 2 * 2
    assert report.failures == []
    npe = [r for r in report.records if r["engine"] == "npe"]
    assert all(r["simulator_calls"] == 0 for r in npe)
    foul = [r for r in npe if r["scenario"] == "foul"]
    assert all(r["w1_tau"] is not None and r["w1_tau"] >= 0 for r in foul)
    mc = [r for r in report.records if r["engine"] == "mcmc"]
    assert all(r["transitions"] == 2 * 40 for r in mc)
    assert report.break_even == break_even_calls(500, 0.0, 80)
    assert report.speedup > 0


def test_csv_outputs_have_pinned_headers(report, tmp_path):
    paths = report.to_csv(tmp_path)
    expected = {"records.csv": RECORD_HEADER, "accuracy.csv": ACCURACY_HEADER, "cost.csv": COST_HEADER,
                "summary.csv": SUMMARY_HEADER, "medians_scatter.csv": SCATTER_HEADER}
    assert set(expected) <= set(paths)
    for name, header in expected.items():
        assert tuple(_read(tmp_path / name)[0]) == header
    assert len(_read(tmp_path / "records.csv")) == 1 + len(report.records)
    acc = _read(tmp_path / "accuracy.csv")
    assert [row[0] for row in acc[1:]] == ["foul", "leak", "quiet"]
    assert not (tmp_path / "failures.csv").exists()


def test_benchmark_reproducible(posterior, report):
    again = run_benchmark(SCENARIOS, COND, SPEC, posterior, TINY_CHAINS, n_realizations=2, n_samples=200, seed=4)
    keys = [k for k in RECORD_HEADER if k != "wall_time"]
    for a, b in zip(report.records, again.records):
        assert [a[k] for k in keys] == [b[k] for k in keys]


def test_subset_reproduces_same_records(posterior, report):
    sub = run_benchmark(SCENARIOS[1:2], COND, SPEC, posterior, TINY_CHAINS, engines=("npe",), n_realizations=2,
                        n_samples=200, seed=4, scenario_indices=[1])
    full = [r for r in report.records if r["scenario"] == "leak" and r["engine"] == "npe"]
    assert [r["median_tau"] for r in sub.records] == [r["median_tau"] for r in full]


def test_engine_failures_recorded(posterior, tmp_path):
    wrong = OperatingConditions(horizon=T + 5)
    rep = run_benchmark(SCENARIOS[:1], wrong, PriorSpec(horizon=T + 5), posterior, TINY_CHAINS, engines=("npe",),
                        n_realizations=2)
    assert len(rep.failures) == 2 and rep.records == []
    rep.to_csv(tmp_path)
    assert len(_read(tmp_path / "failures.csv")) == 3


def test_npe_needs_posterior():
    with pytest.raises(ValueError):
        run_benchmark(SCENARIOS, COND, SPEC, None, engines=("npe",))


def test_accuracy_helpers():
    rep = BenchmarkReport(records=[{"engine": "npe", "scenario": "a", "correct": c} for c in (1, 1, 0, 1)])
    assert rep.accuracy("a", "npe") == 0.75
    assert rep.false_positive_rate("a", "npe") == 0.25
    assert np.isnan(rep.accuracy("a", "mcmc"))


# --- predictive bands ---------------------------------------------------------------------

def test_bands_from_prior_latents_ordered():
    rng = np.random.default_rng(0)
    n = 300
    ens = PosteriorEnsemble(np.full(n, 3), {"tau": rng.uniform(5, 10, n), "beta_f": np.full(n, 0.05),
                                            "beta_l": np.full(n, 1e-3), "lam": np.full(n, 2.0)}, np.zeros(n), "t")
    b = predictive_bands(ens, T, n_draws=200)
    assert not b.from_latents
    assert b.fouling.shape == b.leak.shape == (3, T)
    assert np.all(np.diff(b.fouling, axis=0) >= 0) and np.all(np.diff(b.leak, axis=0) >= 0)
    assert np.all(b.fouling[:, 0] < 0.05)


def test_bands_csv(tmp_path):
    n = 50
    ens = PosteriorEnsemble(np.ones(n), {"tau": np.full(n, 5.0), "beta_f": np.full(n, 0.05),
                                         "beta_l": np.full(n, 1e-3), "lam": np.full(n, 2.0)}, np.zeros(n), "t")
    b = predictive_bands(ens, T)
    rows = _read(b.to_csv(tmp_path / "bands.csv", truth=(np.zeros(T), np.zeros(T))))
    assert rows[0][:4] == ["t", "fouling_q0.025", "fouling_q0.5", "fouling_q0.975"]
    assert rows[0][-2:] == ["fouling_true", "leak_true"]
    assert len(rows) == T + 1


@pytest.mark.slow
def test_inferred_fouling_band_contains_truth():
    cond, spec = OperatingConditions(), PriorSpec()
    sc = DEFAULT_SCENARIOS[1]
    for i, (lat, obs) in enumerate(realizations(sc, cond, 0, 1, 3, spec)):
        ens = run_mcmc(obs, cond, spec, ChainConfig(rng_seed=i), keep_latents=True)
        b = predictive_bands(ens, cond.horizon, seed=i)
        assert b.from_latents
        assert b.contains("fouling", lat.fouling_factor).mean() >= 0.8
        assert ens.predicted_mode == FailureMode.FOULING
