"""Stochastic fouling and leakage trajectories.

Fouling is a discretized compound-Poisson process whose Bernoulli arrivals
are relaxed through a steep sigmoid so the trajectory stays a smooth function
of the latent uniforms.  Leakage grows through exponential increments and
saturates at ``LEAK_MAX``.  Both are switched on by a logistic changepoint
gate centred at ``tau``.

Every sampler here is a thin wrapper around the ``*_from_latents`` kernels,
which map standardized latent draws ``(u, e_j, e_l)`` to trajectories and
broadcast over any leading batch dimensions.  The MCMC engine calls the same
kernels, so generation and likelihood can never drift apart.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

LEAK_MAX = 0.95
# Largest representable leak fraction strictly below LEAK_MAX.
_LEAK_CEIL = np.nextafter(LEAK_MAX, 0.0)

K_GATE = 2.0
K_RELAX = 1000.0

_EXP_CLAMP = 700.0


class FailureMode(enum.IntEnum):
    NONE = 0
    FOULING = 1
    LEAKAGE = 2
    BOTH = 3

    @property
    def g_f(self) -> int:
        return int(self in (FailureMode.FOULING, FailureMode.BOTH))

    @property
    def g_l(self) -> int:
        return int(self in (FailureMode.LEAKAGE, FailureMode.BOTH))

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value) -> "FailureMode":
        if isinstance(value, FailureMode):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        try:
            return cls[str(value).strip().upper()]
        except KeyError:
            raise ValueError(f"unknown failure mode {value!r}") from None


# g_f, g_l lookup indexed by mode label
GATE_F = np.array([m.g_f for m in FailureMode], dtype=float)
GATE_L = np.array([m.g_l for m in FailureMode], dtype=float)


@dataclass(frozen=True)
class DegradationParams:
    tau: float
    beta_f: float
    beta_l: float
    lam: float
    k_gate: float = K_GATE
    k_relax: float = K_RELAX

    def __post_init__(self):
        for name in ("tau", "beta_f", "beta_l", "lam", "k_gate", "k_relax"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value}")


@dataclass
class LatentTrajectory:
    fouling_factor: np.ndarray
    leak_fraction: np.ndarray
    jump_gates: np.ndarray
    jump_sizes: np.ndarray
    leak_increments: np.ndarray


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(x, -_EXP_CLAMP, _EXP_CLAMP)))


def sigmoid_gate(t, tau, k):
    """Logistic onset gate ``1 / (1 + exp(-k (t - tau)))``."""
    return _sigmoid(k * (np.asarray(t, dtype=float) - tau))


def jump_probability(lam):
    """Per-step arrival probability ``1 - exp(-lam)`` of a Poisson stream."""
    return -np.expm1(-np.asarray(lam, dtype=float))


def relaxed_indicator(p_jump, u, k):
    """Smooth stand-in for ``1{u < p_jump}``."""
    return _sigmoid(k * (p_jump - np.asarray(u, dtype=float)))


def time_index(horizon: int) -> np.ndarray:
    return np.arange(1, horizon + 1, dtype=float)


def fouling_from_latents(tau, beta_f, lam, u, e_j, g_f, k_gate=K_GATE, k_relax=K_RELAX):
    """Fouling factor R(t) from latent uniforms ``u`` and unit exponentials ``e_j``.

    Scalars ``tau, beta_f, lam, g_f`` may be arrays of batch shape ``B``;
    ``u`` and ``e_j`` then have shape ``B + (T,)``.  Returns
    ``(R, gates, sizes)`` with ``sizes = beta_f * e_j``.
    """
    u = np.asarray(u, dtype=float)
    t = time_index(u.shape[-1])
    tau = np.asarray(tau, dtype=float)[..., None]
    gate = sigmoid_gate(t, tau, k_gate)
    p = jump_probability(np.asarray(lam, dtype=float)[..., None])
    ind = relaxed_indicator(p, u, k_relax)
    sizes = np.asarray(beta_f, dtype=float)[..., None] * e_j
    inc = gate * ind * sizes * np.asarray(g_f, dtype=float)[..., None]
    return np.cumsum(inc, axis=-1), ind, sizes


def leak_from_latents(tau, beta_l, e_l, g_l, k_gate=K_GATE):
    """Leak fraction L(t) from unit exponentials ``e_l``; returns ``(L, increments)``."""
    e_l = np.asarray(e_l, dtype=float)
    t = time_index(e_l.shape[-1])
    gate = sigmoid_gate(t, np.asarray(tau, dtype=float)[..., None], k_gate)
    inc = np.asarray(beta_l, dtype=float)[..., None] * e_l
    total = np.cumsum(gate * inc * np.asarray(g_l, dtype=float)[..., None], axis=-1)
    leak = LEAK_MAX * -np.expm1(-total)
    return np.minimum(leak, _LEAK_CEIL), inc


def draw_latents(rng: np.random.Generator, horizon: int, size=()):
    """Standardized latent draws ``(u, e_j, e_l)``, each of shape ``size + (T,)``."""
    if isinstance(size, (int, np.integer)):
        size = (int(size),)
    shape = tuple(size) + (horizon,)
    u = rng.random(shape)
    e_j = rng.standard_exponential(shape)
    e_l = rng.standard_exponential(shape)
    return u, e_j, e_l


def sample_fouling_trajectory(params: DegradationParams, mode: FailureMode, horizon: int, rng: np.random.Generator):
    """Draw R(t); returns ``(R, gates, sizes)``."""
    if horizon < 2:
        raise ValueError("horizon must be >= 2")
    u = rng.random(horizon)
    e_j = rng.standard_exponential(horizon)
    return fouling_from_latents(params.tau, params.beta_f, params.lam, u, e_j,
                                FailureMode.parse(mode).g_f, params.k_gate, params.k_relax)


def sample_leak_trajectory(params: DegradationParams, mode: FailureMode, horizon: int, rng: np.random.Generator):
    """Draw L(t); returns ``(L, increments)``."""
    if horizon < 2:
        raise ValueError("horizon must be >= 2")
    e_l = rng.standard_exponential(horizon)
    return leak_from_latents(params.tau, params.beta_l, e_l, FailureMode.parse(mode).g_l, params.k_gate)


def latent_trajectory(params: DegradationParams, mode: FailureMode, u, e_j, e_l) -> LatentTrajectory:
    mode = FailureMode.parse(mode)
    r, gates, sizes = fouling_from_latents(params.tau, params.beta_f, params.lam, u, e_j,
                                           mode.g_f, params.k_gate, params.k_relax)
    leak, inc = leak_from_latents(params.tau, params.beta_l, e_l, mode.g_l, params.k_gate)
    return LatentTrajectory(r, leak, gates, sizes, inc)


def effective_ua(ua_clean, r_t):
    return ua_clean / (1.0 + r_t)


def effective_hot_flow(m_in, l_t):
    return m_in * (1.0 - l_t)


def expected_fouling_slope(params: DegradationParams, mode: FailureMode) -> float:
    """Mean post-onset growth of R per timestep, ``(1 - e^-lam) beta_f g_f``."""
    return float(jump_probability(params.lam)) * params.beta_f * FailureMode.parse(mode).g_f
