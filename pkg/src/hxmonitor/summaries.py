"""25-dimensional summary statistics of a sensor record.

Five derived signals, five features each, in a fixed order::

    signals : hot_dT, cold_dT, flow_loss, t_hot_out, t_cold_out
    features: mean, std, early_late, range, slope

so the feature ``f`` of signal ``s`` sits at index ``5 * s + f``.
``std`` is the population standard deviation, ``early_late`` is the mean of
the last ``ceil(T/4)`` values minus the mean of the first ``ceil(T/4)``, and
``slope`` is the least-squares slope against the integer time index.
"""

from __future__ import annotations

import numpy as np

from .observation import ObservationSeries

SIGNALS = ("hot_dT", "cold_dT", "flow_loss", "t_hot_out", "t_cold_out")
FEATURES = ("mean", "std", "early_late", "range", "slope")
SUMMARY_NAMES = tuple(f"{s}__{f}" for s in SIGNALS for f in FEATURES)
N_SUMMARIES = len(SUMMARY_NAMES)


class SummaryError(ValueError):
    pass


def derive_signals(obs) -> np.ndarray:
    """The five signals as an array of shape ``(..., 5, T)``.

    Accepts an :class:`ObservationSeries` or a raw channel array ``(..., 6, T)``.
    """
    a = obs.to_array() if isinstance(obs, ObservationSeries) else np.asarray(obs, dtype=float)
    t_hot_in, t_hot_out, t_cold_in, t_cold_out, m_in, m_out = (a[..., i, :] for i in range(6))
    return np.stack([t_hot_in - t_hot_out, t_cold_out - t_cold_in, m_in - m_out,
                     t_hot_out, t_cold_out], axis=-2)


def features(signal) -> np.ndarray:
    """The five features along the last axis; output shape ``signal.shape[:-1] + (5,)``."""
    x = np.asarray(signal, dtype=float)
    T = x.shape[-1]
    if T < 4:
        raise SummaryError(f"need at least 4 timesteps, got {T}")
    q = -(-T // 4)
    t = np.arange(1, T + 1, dtype=float)
    tc = t - t.mean()
    mean = x.mean(axis=-1)
    return np.stack([
        mean,
        x.std(axis=-1),
        x[..., -q:].mean(axis=-1) - x[..., :q].mean(axis=-1),
        x.max(axis=-1) - x.min(axis=-1),
        (x - mean[..., None]) @ tc / (tc @ tc),
    ], axis=-1)


def summarize(obs) -> np.ndarray:
    """Summary vector of length 25 (or ``(..., 25)`` for batched channel arrays)."""
    f = features(derive_signals(obs))
    return f.reshape(f.shape[:-2] + (N_SUMMARIES,))
