import numpy as np
import pytest

from hxmonitor.diagnostics import DegenerateChainError, diagnostics, ess_bulk, split_rhat


def test_constant_chain_is_degenerate():
    x = np.ones((4, 100))
    with pytest.raises(DegenerateChainError):
        split_rhat(x)
    with pytest.raises(DegenerateChainError):
        ess_bulk(x)


def test_one_stuck_chain_is_degenerate():
    x = np.random.default_rng(0).normal(size=(4, 100))
    x[2] = 0.3
    with pytest.raises(DegenerateChainError):
        diagnostics(x)


@pytest.mark.parametrize("shape", [(1, 100), (4, 3), (400,)])
def test_bad_shapes_rejected(shape):
    with pytest.raises(ValueError):
        split_rhat(np.random.default_rng(0).normal(size=shape))


@pytest.mark.parametrize("seed", range(5))
def test_iid_draws_look_converged(seed):
    x = np.random.default_rng(seed).normal(size=(4, 3000))
    assert 0.99 <= split_rhat(x) <= 1.01
    assert ess_bulk(x) > 6000


def test_offset_chain_flags_nonconvergence():
    x = np.random.default_rng(1).normal(size=(4, 1000))
    x[0] += 10.0
    assert split_rhat(x) > 1.5


def test_trend_within_chains_flags_nonconvergence():
    # Split R-hat catches drift even when all chains agree with each other.
    rng = np.random.default_rng(2)
    x = rng.normal(size=(4, 1000)) + np.linspace(0, 4, 1000)
    assert split_rhat(x) > 1.2


def test_ess_of_ar1_matches_theory():
    # AR(1) with coefficient phi has integrated autocorrelation (1+phi)/(1-phi).
    phi, n, m = 0.8, 20000, 4
    rng = np.random.default_rng(3)
    e = rng.normal(size=(m, n))
    x = np.empty_like(e)
    x[:, 0] = e[:, 0] / np.sqrt(1 - phi**2)
    for t in range(1, n):
        x[:, t] = phi * x[:, t - 1] + e[:, t]
    expected = m * n * (1 - phi) / (1 + phi)
    assert ess_bulk(x) == pytest.approx(expected, rel=0.15)


def test_rank_invariance():
    x = np.random.default_rng(4).normal(size=(4, 500))
    assert split_rhat(np.exp(x)) == pytest.approx(split_rhat(x), abs=1e-12)
    assert ess_bulk(x**3) == pytest.approx(ess_bulk(x), abs=1e-9)


def test_diagnostics_dict_shape():
    rng = np.random.default_rng(5)
    d = diagnostics({"a": rng.normal(size=(4, 200)), "b": rng.normal(size=(4, 200))})
    assert set(d) == {"a", "b"}
    assert set(d["a"]) == {"r_hat", "ess"}
    assert set(diagnostics(rng.normal(size=(2, 50)))) == {"x"}
