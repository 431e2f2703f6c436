"""Reference posterior sampler: Metropolis-within-Gibbs with latent augmentation.

Each sweep of a chain does, in order:

1. an exact Gibbs draw of the failure mode from its conditional given the
   current continuous state (the joint density is evaluated under all four
   modes);
2. an exact prior draw of the global parameters the current mode switches
   off (they do not enter the likelihood);
3. an adaptive Gaussian random-walk proposal on the global block
   ``(logit tau, log beta_f, log beta_l, log lam)``;
4. moves that change one global parameter while holding the physical
   trajectory (nearly) fixed: an integer changepoint shift that rolls the
   latents with ``tau``, a continuous onset move that compensates the gate
   through the jump and leak sizes, a rescaling of ``lam`` that keeps the
   pattern of jump arrivals, and rescalings of ``beta_f``/``beta_l`` that
   keep the increments;
5. random-walk proposals on the latent arrays (logit ``u``, log ``e_j``,
   log ``e_l``) in contiguous sub-blocks;
6. single-site moves compiled with numba: independence refreshes of each
   step's latents from their prior, swaps of latents between nearby steps,
   and split/merge of adjacent fouling jumps.

Proposal scales adapt by Robbins-Monro toward ``target_accept`` during
warmup, the global block additionally learns its covariance, and everything
is frozen once warmup ends.  Chains run vectorized side by side but each owns
its random stream, so a chain's output does not depend on how many chains
run with it.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from ._kernels import log_target, pack_constants, site_moves
from .degradation import K_GATE, K_RELAX, FailureMode
from .diagnostics import DegenerateChainError, diagnostics as chain_diagnostics
from .ensemble import PosteriorEnsemble
from .model import PARAM_NAMES, PriorSpec, sample_prior_arrays, transform_params
from .observation import ObservationSeries, OperatingConditions

log = logging.getLogger(__name__)

_MAX_SHIFT = 3
_MAX_SWAP = 8
_GATE_FLOOR = 0.05
_COV_START = 50
_COV_EVERY = 25


@dataclass(frozen=True)
class ChainConfig:
    n_chains: int = 4
    n_warmup: int = 150
    n_samples: int = 75
    target_accept: float = 0.3
    rng_seed: int = 0
    block_size: int = 10
    n_init: int = 256

    def __post_init__(self):
        if min(self.n_chains, self.n_warmup, self.n_samples, self.block_size, self.n_init) < 1:
            raise ValueError("chain counts must be >= 1")
        if not 0 < self.target_accept < 1:
            raise ValueError("target_accept must lie in (0, 1)")


class _Target:
    """Log target in sampler coordinates, evaluated for a batch of states."""

    def __init__(self, obs_arr, cond, spec, k_gate, k_relax):
        self.obs = np.ascontiguousarray(obs_arr, dtype=float)
        self.sig = cond.noise_sigmas
        if np.any(self.sig <= 0):
            raise ValueError("MCMC needs strictly positive noise levels")
        self.consts, self.prior = pack_constants(cond, spec, k_gate, k_relax)
        self.T = obs_arr.shape[-1]
        self.calls = 0

    def __call__(self, mode, x, lu, lej, lel):
        mode = np.ascontiguousarray(mode, dtype=np.int64)
        self.calls += mode.size
        out = np.empty(mode.size)
        return log_target(mode, np.ascontiguousarray(x, dtype=float), np.ascontiguousarray(lu, dtype=float),
                          np.ascontiguousarray(lej, dtype=float), np.ascontiguousarray(lel, dtype=float),
                          self.obs, self.sig, self.consts, self.prior, out)


def _accept(lt_new, lt_old, log_jac, u):
    with np.errstate(invalid="ignore"):
        ok = np.log(u) < lt_new - lt_old + log_jac
    return ok & np.isfinite(lt_new)


def _rm_step(log_scale, accepted, target, t):
    return log_scale + (accepted.astype(float) - target) * (t + 1.0) ** -0.6


def random_walk_metropolis(log_density, x0, n_warmup, n_samples, rng_seed=0, target_accept=0.3):
    """Adaptive scalar random-walk Metropolis on a vectorized ``log_density``.

    ``x0`` is an array of independent chain starts; returns draws of shape
    ``(n_chains, n_samples)``.  Uses the same accept and adaptation rules as
    :func:`run_mcmc`.
    """
    x = np.array(x0, dtype=float)
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(rng_seed).spawn(x.size)]
    n = n_warmup + n_samples
    z = np.stack([r.standard_normal(n) for r in rngs])
    uu = np.stack([r.random(n) for r in rngs])
    lp = log_density(x)
    log_s = np.zeros_like(x)
    out = np.empty((x.size, n_samples))
    for t in range(n):
        prop = x + np.exp(log_s) * z[:, t]
        lp_new = log_density(prop)
        acc = _accept(lp_new, lp, 0.0, uu[:, t])
        x = np.where(acc, prop, x)
        lp = np.where(acc, lp_new, lp)
        if t < n_warmup:
            log_s = _rm_step(log_s, acc, target_accept, t)
        else:
            out[:, t - n_warmup] = x
    return out


def _chain_rngs(cfg: ChainConfig):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.rng_seed).spawn(cfg.n_chains)]


def _sweep_draws(rngs, T, nb, sites):
    """Random numbers for one sweep, drawn chain by chain from each chain's own stream."""
    keys = ("mode_u", "glob_z", "glob_u", "shift_k", "shift_u", "onset_z", "onset_u", "prior_z", "ridge_z", "ridge_u", "lat_z", "lat_u")
    if sites:
        keys += ("site_u", "site_ej", "site_el", "site_acc", "site_off", "site_split")
    out = {k: [] for k in keys}
    for r in rngs:
        out["mode_u"].append(r.random())
        out["glob_z"].append(r.standard_normal(4))
        out["glob_u"].append(r.random())
        out["shift_k"].append(r.integers(1, _MAX_SHIFT + 1) * (1 if r.random() < 0.5 else -1))
        out["shift_u"].append(r.random())
        out["onset_z"].append(r.standard_normal())
        out["onset_u"].append(r.random())
        out["prior_z"].append(r.standard_normal(3))
        out["ridge_z"].append(r.standard_normal(3))
        out["ridge_u"].append(r.random(3))
        out["lat_z"].append(r.standard_normal((3, T)))
        out["lat_u"].append(r.random((3, nb)))
        if sites:
            with np.errstate(divide="ignore"):
                out["site_u"].append(logit(r.random(T)))
                out["site_ej"].append(np.log(r.standard_exponential(T)))
                out["site_el"].append(np.log(r.standard_exponential(T)))
                out["site_acc"].append(np.log(r.random((4, T))))
            out["site_off"].append(r.integers(1, _MAX_SWAP + 1, (2, T)) * np.where(r.random((2, T)) < 0.5, -1, 1))
            with np.errstate(divide="ignore"):
                out["site_split"].append(np.stack([r.random(T), r.random(T), np.log(r.standard_exponential(T)),
                                                   np.log(r.random(T))]))
    return {k: np.asarray(v) for k, v in out.items()}


def _initial_state(rngs, target, spec, cfg, fixed_mode, fixed_params, fixed_latents, T):
    """Best of ``n_init`` prior draws per chain, scored under every allowed mode."""
    modes = [int(fixed_mode)] if fixed_mode is not None else [0, 1, 2, 3]
    C, M = cfg.n_chains, cfg.n_init
    x = np.empty((C, 4))
    lat = np.empty((C, 3, T))
    mode = np.empty(C, dtype=int)
    for c, r in enumerate(rngs):
        d = sample_prior_arrays(spec, r, M)
        for name, value in (fixed_params or {}).items():
            d[name] = np.full(M, float(value))
        u = r.random((M, T))
        e_j = r.standard_exponential((M, T))
        e_l = r.standard_exponential((M, T))
        if fixed_latents is not None:
            u, e_j, e_l = (np.broadcast_to(a, (M, T)) for a in fixed_latents)
        xc = transform_params(d["tau"], d["beta_f"], d["beta_l"], d["lam"], T)
        lu, lej, lel = logit(u), np.log(e_j), np.log(e_l)
        scores = np.stack([target(np.full(M, m), xc, lu, lej, lel) for m in modes], axis=1)
        i, j = np.unravel_index(np.argmax(scores), scores.shape)
        x[c], mode[c] = xc[i], modes[j]
        lat[c] = lu[i], lej[i], lel[i]
    return mode, x, lat


def run_mcmc(obs: ObservationSeries, cond: OperatingConditions, spec: PriorSpec, cfg: ChainConfig = ChainConfig(),
             *, fixed_mode=None, fixed_params: dict | None = None, fixed_latents=None,
             keep_latents: bool = False, k_gate=K_GATE, k_relax=K_RELAX) -> PosteriorEnsemble:
    """Sample the joint posterior over mode, parameters and latents.

    Parameters
    ----------
    fixed_mode, fixed_params, fixed_latents
        Clamp parts of the state (used for conditional checks): a mode label,
        ``{name: value}`` for any of ``tau, beta_f, beta_l, lam``, and a
        ``(u, e_j, e_l)`` triple of length-T arrays.
    keep_latents
        Store post-warmup latent draws as ``ensemble.latents`` (N, 3, T) in
        natural units ``(u, e_j, e_l)``.
    """
    t0 = time.perf_counter()
    obs_arr = obs.to_array()
    T = obs_arr.shape[1]
    if T != cond.horizon or T != spec.horizon:
        raise ValueError(f"record length {T} does not match horizon {cond.horizon}/{spec.horizon}")
    C = cfg.n_chains
    bs = min(cfg.block_size, T)
    blocks = [slice(i, min(i + bs, T)) for i in range(0, T, bs)]
    nb = len(blocks)
    n_iter = cfg.n_warmup + cfg.n_samples
    target = _Target(obs_arr, cond, spec, k_gate, k_relax)

    fixed_params = dict(fixed_params or {})
    unknown = set(fixed_params) - set(PARAM_NAMES)
    if unknown:
        raise ValueError(f"unknown fixed parameters {sorted(unknown)}")
    if fixed_latents is not None:
        fixed_latents = tuple(np.asarray(a, dtype=float) for a in fixed_latents)
        if any(a.shape != (T,) for a in fixed_latents):
            raise ValueError("fixed latents must be three length-T arrays")
    free = np.array([p not in fixed_params for p in PARAM_NAMES])
    sample_latents = fixed_latents is None
    sample_mode = fixed_mode is None

    rngs = _chain_rngs(cfg)
    mode, x, lat = _initial_state(rngs, target, spec, cfg, fixed_mode, fixed_params, fixed_latents, T)
    lu, lej, lel = lat[:, 0].copy(), lat[:, 1].copy(), lat[:, 2].copy()
    lt = target(mode, x, lu, lej, lel)
    init_calls = target.calls
    target.calls = 0

    ta = cfg.target_accept
    chol = np.broadcast_to(np.diag([0.5, 0.5, 0.2, 0.2]), (C, 4, 4)).copy()
    log_s_glob = np.zeros(C)
    log_s_onset = np.full(C, np.log(0.1))
    log_s_ridge = np.log(np.broadcast_to([0.3, 0.3, 0.3], (C, 3))).copy()
    log_s_lat = np.log(np.full((C, 3, nb), 0.5))
    hist = np.empty((C, cfg.n_warmup, 4))
    n_acc = {"global": 0, "shift": 0, "onset": 0, "ridge": 0, "latent": 0, "site": np.zeros(5, dtype=int), "mode_switch": 0}

    draws_mode = np.empty((C, cfg.n_samples), dtype=int)
    draws_x = np.empty((C, cfg.n_samples, 4))
    draws_lt = np.empty((C, cfg.n_samples))
    draws_lat = np.empty((C, cfg.n_samples, 3, T)) if keep_latents else None
    rows = np.arange(C)

    for t in range(n_iter):
        warm = t < cfg.n_warmup
        rn = _sweep_draws(rngs, T, nb, sample_latents)

        if sample_mode:
            scores = np.stack([target(np.full(C, m), x, lu, lej, lel) for m in range(4)], axis=1)
            new_mode = gibbs_mode_draw(scores, rn["mode_u"])
            n_acc["mode_switch"] += int(np.sum(new_mode != mode))
            mode = new_mode
            lt = scores[rows, mode]

        x = _refresh_inactive(mode, x, rn["prior_z"], spec, free)
        lt = target(mode, x, lu, lej, lel)

        # global block
        step = np.einsum("cij,cj->ci", chol, rn["glob_z"]) * free
        prop = x + np.exp(log_s_glob)[:, None] * step
        lt_new = target(mode, prop, lu, lej, lel)
        acc = _accept(lt_new, lt, 0.0, rn["glob_u"])
        x = np.where(acc[:, None], prop, x)
        lt = np.where(acc, lt_new, lt)
        n_acc["global"] += int(acc.sum())
        if warm:
            log_s_glob = _rm_step(log_s_glob, acc, ta, t)

        if sample_latents:
            if free[0]:
                x, lu, lej, lel, lt, acc = _shift_move(target, mode, x, lu, lej, lel, lt,
                                                       rn["shift_k"], rn["shift_u"], T)
                n_acc["shift"] += int(acc.sum())
                x, lej, lel, lt, log_s_onset, acc = _onset_move(target, mode, x, lu, lej, lel, lt, log_s_onset,
                                                                rn["onset_z"], rn["onset_u"], k_gate, warm, ta, t)
                n_acc["onset"] += int(acc.sum())
            x, lu, lej, lel, lt, log_s_ridge, acc = _ridge_moves(
                target, mode, x, lu, lej, lel, lt, log_s_ridge, free,
                rn["ridge_z"], rn["ridge_u"], warm, ta, t)
            n_acc["ridge"] += acc
            lats = [lu, lej, lel]
            for a in range(3):
                for b, sl in enumerate(blocks):
                    cur = lats[a]
                    prop_a = cur.copy()
                    prop_a[:, sl] += np.exp(log_s_lat[:, a, b])[:, None] * rn["lat_z"][:, a, sl]
                    trial = list(lats)
                    trial[a] = prop_a
                    lt_new = target(mode, x, *trial)
                    acc = _accept(lt_new, lt, 0.0, rn["lat_u"][:, a, b])
                    lats[a] = np.where(acc[:, None], prop_a, cur)
                    lt = np.where(acc, lt_new, lt)
                    n_acc["latent"] += int(acc.sum())
                    if warm:
                        log_s_lat[:, a, b] = _rm_step(log_s_lat[:, a, b], acc, ta, t)
            lu, lej, lel = lats
            for c in range(C):
                counts, _ = site_moves(int(mode[c]), x[c], lu[c], lej[c], lel[c], target.obs, target.sig,
                                       target.consts, rn["site_u"][c], rn["site_ej"][c], rn["site_el"][c],
                                       rn["site_acc"][c], rn["site_off"][c], rn["site_split"][c])
                n_acc["site"] += counts
            target.calls += C * (5 * T - 1)
            lt = target(mode, x, lu, lej, lel)

        if warm:
            hist[:, t] = x
            if t + 1 >= _COV_START and (t + 1) % _COV_EVERY == 0:
                chol = _adapt_cholesky(hist[:, (t + 1) // 2: t + 1], free)
        else:
            i = t - cfg.n_warmup
            draws_mode[:, i] = mode
            draws_x[:, i] = x
            draws_lt[:, i] = lt
            if keep_latents:
                draws_lat[:, i] = np.stack([expit(lu), np.exp(lej), np.exp(lel)], axis=1)

    wall = time.perf_counter() - t0
    nat = {
        "tau": 1.0 + (T - 2) * expit(draws_x[..., 0]),
        "beta_f": np.exp(draws_x[..., 1]),
        "beta_l": np.exp(draws_x[..., 2]),
        "lam": np.exp(draws_x[..., 3]),
    }
    diag = _safe_diagnostics({k: v for k, v, f in zip(nat, nat.values(), free) if f}) if C >= 2 else None
    n_total = C * n_iter
    info = {
        "n_chains": C, "n_warmup": cfg.n_warmup, "n_samples": cfg.n_samples,
        "transitions": n_total,
        "proposals_per_sweep": target.calls // n_total,
        "init_call_count": init_calls,
        "mean_log_target": draws_lt.mean(axis=1).tolist(),
        "acceptance": {
            "global": n_acc["global"] / n_total,
            "shift": n_acc["shift"] / n_total,
            "onset": n_acc["onset"] / n_total,
            "ridge": n_acc["ridge"] / max(1, n_total * int(free[1:].sum())),
            "latent": n_acc["latent"] / (n_total * 3 * nb),
            "site": (n_acc["site"] / (n_total * T)).tolist(),
            "mode_switch_rate": n_acc["mode_switch"] / n_total,
        },
    }
    return PosteriorEnsemble(
        mode=draws_mode.reshape(-1),
        params={k: v.reshape(-1) for k, v in nat.items()},
        chain=np.repeat(np.arange(C), cfg.n_samples),
        engine="mcmc",
        wall_time=wall,
        simulator_call_count=target.calls,
        diagnostics=diag,
        latents=None if draws_lat is None else draws_lat.reshape(-1, 3, T),
        info=info,
    )


def gibbs_mode_draw(scores, u):
    """Draw a mode per row from ``softmax(scores)`` using uniforms ``u``."""
    probs = mode_conditional(scores)
    cdf = np.cumsum(probs, axis=1)
    return np.minimum(np.sum(cdf < u[:, None], axis=1), 3)


def mode_conditional(scores) -> np.ndarray:
    """Normalized conditional mode probabilities from per-mode log-joint values."""
    s = np.asarray(scores, dtype=float)
    m = np.max(s, axis=-1, keepdims=True)
    w = np.exp(s - m)
    return w / np.sum(w, axis=-1, keepdims=True)


def _shift_move(target, mode, x, lu, lej, lel, lt, k, u, T):
    """Move tau by an integer and roll the latents with it."""
    s = expit(x[:, 0])
    tau = 1.0 + (T - 2) * s
    s_new = (tau + k - 1.0) / (T - 2)
    inside = (s_new > 0) & (s_new < 1)
    s_new = np.where(inside, s_new, 0.5)
    prop = x.copy()
    prop[:, 0] = logit(s_new)
    rolled = [np.stack([np.roll(a[c], k[c]) for c in range(len(k))]) for a in (lu, lej, lel)]
    log_jac = np.log(s) + np.log1p(-s) - np.log(s_new) - np.log1p(-s_new)
    lt_new = np.where(inside, target(mode, prop, *rolled), -np.inf)
    acc = _accept(lt_new, lt, log_jac, u)
    x = np.where(acc[:, None], prop, x)
    lu, lej, lel = (np.where(acc[:, None], r, a) for r, a in zip(rolled, (lu, lej, lel)))
    return x, lu, lej, lel, np.where(acc, lt_new, lt), acc


def _gate_offset(x0, T, k_gate):
    """Per-step ``log(gate + floor)`` at the changepoints encoded by ``x0``."""
    tau = 1.0 + (T - 2) * expit(x0)
    g = expit(k_gate * (np.arange(1, T + 1) - tau[:, None]))
    return np.log(g + _GATE_FLOOR)


def _onset_move(target, mode, x, lu, lej, lel, lt, log_s, z, u, k_gate, warm, ta, t):
    """Random-walk ``logit tau`` while rescaling the jump sizes the gate lets through.

    ``log e`` is shifted by ``f(tau) - f(tau')`` with ``f = log(gate + floor)``;
    for fouling only at steps whose uniform is below the jump threshold.  The
    shift is antisymmetric in ``(tau, tau')`` and the map has unit Jacobian.
    """
    T = lu.shape[1]
    prop = x.copy()
    prop[:, 0] += np.exp(log_s) * z
    shift = _gate_offset(x[:, 0], T, k_gate) - _gate_offset(prop[:, 0], T, k_gate)
    gf = np.isin(mode, (1, 3))[:, None]
    gl = np.isin(mode, (2, 3))[:, None]
    p = -np.expm1(-np.exp(x[:, 3]))
    jumping = expit(lu) < p[:, None]
    lej_new = np.where(gf & jumping, lej + shift, lej)
    lel_new = np.where(gl, lel + shift, lel)
    lt_new = target(mode, prop, lu, lej_new, lel_new)
    acc = _accept(lt_new, lt, 0.0, u)
    x = np.where(acc[:, None], prop, x)
    lej = np.where(acc[:, None], lej_new, lej)
    lel = np.where(acc[:, None], lel_new, lel)
    if warm:
        log_s = _rm_step(log_s, acc, ta, t)
    return x, lej, lel, np.where(acc, lt_new, lt), log_s, acc


def _refresh_inactive(mode, x, z, spec, free):
    """Exact Gibbs draw from the prior of parameters the current mode ignores.

    With fouling off, ``beta_f`` and ``lam`` only enter through their priors
    (the jump uniforms stay uniform whatever ``lam`` is); likewise ``beta_l``
    with leakage off.
    """
    ln = spec.lognormals
    x = x.copy()
    off_f = ~np.isin(mode, (1, 3))
    off_l = ~np.isin(mode, (2, 3))
    for col, name, off in ((1, "beta_f", off_f), (2, "beta_l", off_l), (3, "lam", off_f)):
        mu, sd = ln[name]
        if free[col]:
            x[:, col] = np.where(off, mu + sd * z[:, col - 1], x[:, col])
    return x


def _ridge_moves(target, mode, x, lu, lej, lel, lt, log_s, free, z, uu, warm, ta, t):
    n_acc = 0
    log_s = log_s.copy()

    # lam with arrival pattern held: remap u below / above the jump threshold
    if free[3]:
        d = np.exp(log_s[:, 0]) * z[:, 0]
        prop = x.copy()
        prop[:, 3] += d
        p, p_new = -np.expm1(-np.exp(x[:, 3])), -np.expm1(-np.exp(prop[:, 3]))
        u = expit(lu)
        below = u < p[:, None]
        u_new = np.where(below, u * (p_new / p)[:, None],
                         p_new[:, None] + (u - p[:, None]) * ((1 - p_new) / (1 - p))[:, None])
        with np.errstate(divide="ignore", invalid="ignore"):
            lu_new = logit(u_new)
            log_jac = np.sum(np.where(below, np.log(p_new / p)[:, None],
                                      np.log((1 - p_new) / (1 - p))[:, None]), axis=1)
            log_jac += np.sum(np.log(u) + np.log1p(-u) - np.log(u_new) - np.log1p(-u_new), axis=1)
        lt_new = target(mode, prop, lu_new, lej, lel)
        acc = _accept(lt_new, lt, np.nan_to_num(log_jac, nan=-np.inf), uu[:, 0])
        x = np.where(acc[:, None], prop, x)
        lu = np.where(acc[:, None], lu_new, lu)
        lt = np.where(acc, lt_new, lt)
        n_acc += int(acc.sum())
        if warm:
            log_s[:, 0] = _rm_step(log_s[:, 0], acc, ta, t)

    # beta_f / beta_l with physical increments held
    for j, (col, name) in enumerate(((1, "e_j"), (2, "e_l")), start=1):
        if not free[col]:
            continue
        d = np.exp(log_s[:, j]) * z[:, j]
        prop = x.copy()
        prop[:, col] += d
        lej_new, lel_new = (lej - d[:, None], lel) if name == "e_j" else (lej, lel - d[:, None])
        lt_new = target(mode, prop, lu, lej_new, lel_new)
        acc = _accept(lt_new, lt, 0.0, uu[:, j])
        x = np.where(acc[:, None], prop, x)
        lej = np.where(acc[:, None], lej_new, lej)
        lel = np.where(acc[:, None], lel_new, lel)
        lt = np.where(acc, lt_new, lt)
        n_acc += int(acc.sum())
        if warm:
            log_s[:, j] = _rm_step(log_s[:, j], acc, ta, t)
    return x, lu, lej, lel, lt, log_s, n_acc


def _adapt_cholesky(hist, free):
    """Proposal factor ``2.38 / sqrt(d) * chol(cov)`` from recent warmup draws."""
    C, n, d = hist.shape
    k = max(1, int(free.sum()))
    out = np.empty((C, d, d))
    for c in range(C):
        cov = np.cov(hist[c].T) if n > 1 else np.zeros((d, d))
        cov = cov * np.outer(free, free) + np.diag(np.where(free, 1e-6, 1e-12))
        out[c] = np.linalg.cholesky(cov) * (2.38 / np.sqrt(k))
    return out


def _safe_diagnostics(chains: dict) -> dict:
    out = {}
    for name, x in chains.items():
        try:
            out.update(chain_diagnostics({name: x}))
        except DegenerateChainError:
            log.warning("parameter %s has a zero-variance chain; R-hat undefined", name)
            out[name] = {"r_hat": float("inf"), "ess": 0.0}
    return out


__all__ = ["ChainConfig", "run_mcmc", "random_walk_metropolis", "gibbs_mode_draw", "mode_conditional",
           "FailureMode"]
