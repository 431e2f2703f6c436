"""Priors, the inference target, and the joint log-density used by MCMC.

The joint density is written in the standardized latent coordinates the
sampler moves in: jump uniforms ``u`` on (0, 1), and unit exponentials
``e_j``, ``e_l`` with ``J = beta_f * e_j`` and ``dL = beta_l * e_l``.  This
is the jump-size density of the physical model times the Jacobian of that
rescaling, so the posterior over (mode, tau, beta_f, beta_l, lam) is the
same as in the natural coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .degradation import K_GATE, K_RELAX, DegradationParams, FailureMode
from .observation import DegradationTheta, ObservationSeries, OperatingConditions, noise_free_batch

PARAM_NAMES = ("tau", "beta_f", "beta_l", "lam")
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class PriorSpec:
    mode_probs: tuple = (0.4, 0.2, 0.2, 0.2)
    horizon: int = 100
    beta_f_median: float = 0.015
    beta_f_sigma: float = 1.0
    beta_l_median: float = 0.0004
    beta_l_sigma: float = 0.4
    lam_median: float = 2.0
    lam_sigma: float = 0.5

    def __post_init__(self):
        p = np.asarray(self.mode_probs, dtype=float)
        if p.shape != (4,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"mode_probs must be 4 non-negative numbers summing to 1, got {self.mode_probs}")
        if self.horizon < 3:
            raise ValueError("horizon must be >= 3 for a non-empty changepoint interval")
        for name in ("beta_f_median", "beta_f_sigma", "beta_l_median", "beta_l_sigma", "lam_median", "lam_sigma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @property
    def tau_bounds(self) -> tuple[float, float]:
        return 1.0, float(self.horizon - 1)

    @property
    def lognormals(self) -> dict:
        """``name -> (mu, sigma)`` of the log-normal priors."""
        return {
            "beta_f": (np.log(self.beta_f_median), self.beta_f_sigma),
            "beta_l": (np.log(self.beta_l_median), self.beta_l_sigma),
            "lam": (np.log(self.lam_median), self.lam_sigma),
        }


@dataclass
class Latents:
    """Standardized latent draws, each of length T."""

    u: np.ndarray
    e_j: np.ndarray
    e_l: np.ndarray

    def check(self, horizon: int):
        for name in ("u", "e_j", "e_l"):
            arr = np.asarray(getattr(self, name))
            if arr.shape[-1] != horizon:
                raise DimensionError(f"latent {name} has length {arr.shape[-1]}, expected {horizon}")


def sample_prior_arrays(spec: PriorSpec, rng: np.random.Generator, n: int) -> dict:
    """``n`` prior draws as arrays: ``mode`` (int labels) and the four parameters."""
    lo, hi = spec.tau_bounds
    ln = spec.lognormals
    return {
        "mode": rng.choice(4, size=n, p=np.asarray(spec.mode_probs)),
        "tau": rng.uniform(lo, hi, size=n),
        "beta_f": rng.lognormal(*ln["beta_f"], size=n),
        "beta_l": rng.lognormal(*ln["beta_l"], size=n),
        "lam": rng.lognormal(*ln["lam"], size=n),
    }


def sample_prior(spec: PriorSpec, rng: np.random.Generator, k_gate=K_GATE, k_relax=K_RELAX) -> DegradationTheta:
    d = sample_prior_arrays(spec, rng, 1)
    params = DegradationParams(float(d["tau"][0]), float(d["beta_f"][0]), float(d["beta_l"][0]),
                               float(d["lam"][0]), k_gate, k_relax)
    return DegradationTheta(FailureMode(int(d["mode"][0])), params)


def _lognormal_logpdf(x, mu, sigma):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lx = np.log(x)
        out = -lx - np.log(sigma) - _LOG_SQRT_2PI - 0.5 * ((lx - mu) / sigma) ** 2
    return np.where(x > 0, out, -np.inf)


def log_prior_arrays(spec: PriorSpec, mode, tau, beta_f, beta_l, lam):
    """Elementwise log prior; ``-inf`` outside the support."""
    lo, hi = spec.tau_bounds
    mode = np.asarray(mode)
    with np.errstate(divide="ignore"):
        log_pm = np.log(np.asarray(spec.mode_probs, dtype=float))
    tau = np.asarray(tau, dtype=float)
    lp = np.where((tau >= lo) & (tau <= hi), -np.log(hi - lo), -np.inf)
    ln = spec.lognormals
    lp = lp + _lognormal_logpdf(beta_f, *ln["beta_f"])
    lp = lp + _lognormal_logpdf(beta_l, *ln["beta_l"])
    lp = lp + _lognormal_logpdf(lam, *ln["lam"])
    return lp + log_pm[mode]


def log_prior(theta: DegradationTheta, spec: PriorSpec) -> float:
    p = theta.params
    return float(log_prior_arrays(spec, int(theta.mode), p.tau, p.beta_f, p.beta_l, p.lam))


def latent_log_density(u, e_j, e_l):
    """Summed log-density of standardized latents over the last axis."""
    u = np.asarray(u, dtype=float)
    inside = np.all((u > 0) & (u < 1), axis=-1) & np.all(e_j >= 0, axis=-1) & np.all(e_l >= 0, axis=-1)
    return np.where(inside, -(np.sum(e_j, axis=-1) + np.sum(e_l, axis=-1)), -np.inf)


def gaussian_loglik(obs_arr, mean, sigmas):
    """Independent Gaussian log-likelihood of (..., 6, T) channels."""
    z = (obs_arr - mean) / sigmas[:, None]
    T = obs_arr.shape[-1]
    return -0.5 * np.sum(z * z, axis=(-2, -1)) - T * np.sum(np.log(sigmas) + _LOG_SQRT_2PI)


def log_joint_arrays(spec: PriorSpec, cond: OperatingConditions, obs_arr, mode, tau, beta_f, beta_l, lam,
                     u, e_j, e_l, k_gate=K_GATE, k_relax=K_RELAX):
    """Batched joint log-density; parameters have batch shape B, latents B + (T,)."""
    sig = cond.noise_sigmas
    if np.any(sig <= 0):
        raise ValueError("log_joint needs strictly positive noise levels")
    lp = log_prior_arrays(spec, mode, tau, beta_f, beta_l, lam)
    lp = lp + latent_log_density(u, e_j, e_l)
    safe = np.isfinite(lp)
    # keep out-of-support points from feeding nan into the simulator
    tau_s = np.where(safe, tau, spec.tau_bounds[0])
    mean, _, _ = noise_free_batch(mode, tau_s, np.where(safe, beta_f, 1.0), np.where(safe, beta_l, 1.0),
                                  np.where(safe, lam, 1.0), np.clip(u, 0, 1), np.abs(e_j), np.abs(e_l),
                                  cond, k_gate, k_relax)
    return np.where(safe, lp + gaussian_loglik(obs_arr, mean, sig), -np.inf)


def log_joint(theta: DegradationTheta, latents: Latents, obs: ObservationSeries,
              cond: OperatingConditions, spec: PriorSpec) -> float:
    """Log prior + latent log-density + Gaussian log-likelihood of all six channels."""
    T = obs.horizon
    if T != cond.horizon or T != spec.horizon:
        raise DimensionError(f"record length {T} does not match horizon {cond.horizon}/{spec.horizon}")
    latents.check(T)
    p = theta.params
    return float(log_joint_arrays(spec, cond, obs.to_array(), int(theta.mode), p.tau, p.beta_f, p.beta_l,
                                  p.lam, latents.u, latents.e_j, latents.e_l, p.k_gate, p.k_relax))


def transform_params(tau, beta_f, beta_l, lam, horizon: int) -> np.ndarray:
    """Unconstrained coordinates ``(logit((tau-1)/(T-2)), log beta_f, log beta_l, log lam)``."""
    s = (np.asarray(tau, dtype=float) - 1.0) / (horizon - 2)
    return np.stack([np.log(s) - np.log1p(-s), np.log(beta_f), np.log(beta_l), np.log(lam)], axis=-1)


def untransform_params(x, horizon: int) -> dict:
    x = np.asarray(x, dtype=float)
    s = 1.0 / (1.0 + np.exp(-x[..., 0]))
    return {"tau": 1.0 + (horizon - 2) * s, "beta_f": np.exp(x[..., 1]),
            "beta_l": np.exp(x[..., 2]), "lam": np.exp(x[..., 3])}
