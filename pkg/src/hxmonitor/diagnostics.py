"""Rank-normalized split-R-hat and bulk effective sample size."""

from __future__ import annotations

import numpy as np
from scipy import stats


class DegenerateChainError(ValueError):
    """A chain has zero variance, so R-hat / ESS are undefined."""


def _as_chains(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError(f"expected (n_chains >= 2, n_draws), got shape {x.shape}")
    if x.shape[1] < 4:
        raise ValueError("need at least 4 draws per chain")
    if np.any(np.var(x, axis=1) == 0):
        raise DegenerateChainError("zero-variance chain")
    return x


def _split(x):
    half = x.shape[1] // 2
    return np.concatenate([x[:, :half], x[:, -half:]], axis=0)


def _rank_normalize(x):
    r = stats.rankdata(x, method="average").reshape(x.shape)
    return stats.norm.ppf((r - 0.375) / (x.size + 0.25))


def _rhat(x):
    m, n = x.shape
    w = np.mean(np.var(x, axis=1, ddof=1))
    b = n * np.var(np.mean(x, axis=1), ddof=1)
    return float(np.sqrt(((n - 1) / n * w + b / n) / w))


def _autocov(x):
    n = x.shape[1]
    xc = x - x.mean(axis=1, keepdims=True)
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(xc, size, axis=1)
    return np.fft.irfft(f * np.conj(f), size, axis=1)[:, :n] / n


def _ess(x):
    m, n = x.shape
    acov = _autocov(x)
    chain_mean = x.mean(axis=1)
    mean_var = np.mean(acov[:, 0]) * n / (n - 1)
    var_plus = mean_var * (n - 1) / n + np.var(chain_mean, ddof=1)
    rho = np.zeros(n)
    rho[0] = 1.0
    even = 1.0
    odd = 1.0 - (mean_var - np.mean(acov[:, 1])) / var_plus
    rho[1] = odd
    t = 1
    while t < n - 3 and even + odd > 0:
        even = 1.0 - (mean_var - np.mean(acov[:, t + 1])) / var_plus
        odd = 1.0 - (mean_var - np.mean(acov[:, t + 2])) / var_plus
        if even + odd >= 0:
            rho[t + 1], rho[t + 2] = even, odd
        t += 2
    max_t = t - 2
    if even > 0:
        rho[max_t + 1] = even
    # Geyer's initial monotone sequence
    t = 1
    while t <= max_t - 2:
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]:
            rho[t + 1] = rho[t + 2] = 0.5 * (rho[t - 1] + rho[t])
        t += 2
    total = m * n
    tau = -1.0 + 2.0 * np.sum(rho[: max_t + 1]) + np.sum(rho[max_t + 1: max_t + 2])
    return float(total / max(tau, 1.0 / np.log10(total)))


def split_rhat(chains) -> float:
    """Rank-normalized split R-hat of draws shaped (n_chains, n_draws)."""
    x = _split(_as_chains(chains))
    return _rhat(_rank_normalize(x))


def ess_bulk(chains) -> float:
    x = _split(_as_chains(chains))
    return _ess(_rank_normalize(x))


def diagnostics(chains) -> dict:
    """Map ``name -> {"r_hat", "ess"}`` for a dict of (n_chains, n_draws) arrays.

    A bare array is treated as a single parameter named ``"x"``.
    """
    if not isinstance(chains, dict):
        chains = {"x": chains}
    return {name: {"r_hat": split_rhat(x), "ess": ess_bulk(x)} for name, x in chains.items()}
