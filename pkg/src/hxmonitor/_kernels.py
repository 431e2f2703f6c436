"""Compiled log-target for the MCMC inner loop.

Evaluates the same density as ``model.log_joint_arrays`` plus the sampler's
coordinate Jacobians, one scalar loop per chain.  ``tests/test_mcmc.py``
pins it against the numpy reference.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .degradation import LEAK_MAX, _LEAK_CEIL
from .thermal import BALANCED_TOL

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@njit(cache=True)
def _log_expit(z):
    if z >= 0:
        return -math.log1p(math.exp(-z))
    return z - math.log1p(math.exp(z))


@njit(cache=True)
def _sig(z):
    if z > 700.0:
        z = 700.0
    elif z < -700.0:
        z = -700.0
    return 1.0 / (1.0 + math.exp(-z))


@njit(cache=True)
def _lognorm(x, logx, mu, sigma):
    d = (logx - mu) / sigma
    return -logx - math.log(sigma) - _LOG_SQRT_2PI - 0.5 * d * d


@njit(cache=True)
def _step_sq(obs, t, r_cum, l_tot, inv_sig, consts):
    """Summed squared standardized residual of the six channels at step ``t``."""
    thi, tci, m_hot, cp_hot, c_cold, ua_clean = consts[0], consts[1], consts[2], consts[3], consts[4], consts[5]
    leak = LEAK_MAX * -math.expm1(-l_tot)
    if leak > _LEAK_CEIL:
        leak = _LEAK_CEIL
    m = m_hot * (1.0 - leak)
    c_hot = m * cp_hot
    ua = ua_clean / (1.0 + r_cum)
    c_min = min(c_hot, c_cold)
    c_max = max(c_hot, c_cold)
    ntu = ua / c_min
    rr = c_min / c_max
    if abs(1.0 - rr) < BALANCED_TOL:
        eps = ntu / (1.0 + ntu)
    else:
        em1 = math.expm1(-ntu * (1.0 - rr))
        eps = -em1 / ((1.0 - rr) - rr * em1)
    eps = min(max(eps, 0.0), 1.0)
    q = eps * c_min * (thi - tci)
    d0 = (obs[0, t] - thi) * inv_sig[0]
    d1 = (obs[1, t] - (thi - q / c_hot)) * inv_sig[1]
    d2 = (obs[2, t] - tci) * inv_sig[2]
    d3 = (obs[3, t] - (tci + q / c_cold)) * inv_sig[3]
    d4 = (obs[4, t] - m_hot) * inv_sig[4]
    d5 = (obs[5, t] - m) * inv_sig[5]
    return d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3 + d4 * d4 + d5 * d5


@njit(cache=True)
def _unpack(x, T):
    s = 1.0 / (1.0 + math.exp(-x[0])) if x[0] > -700 else 0.0
    return s, 1.0 + (T - 2) * s, math.exp(x[1]), math.exp(x[2]), math.exp(x[3])


@njit(cache=True)
def log_target(modes, x, lu, lej, lel, obs, sig, consts, prior, out):
    """Write the sampler-coordinate log target of each state into ``out``.

    consts = (t_hot_in, t_cold_in, m_hot, cp_hot, c_cold, ua_clean, k_gate, k_relax)
    prior  = (log p_none, log p_f, log p_l, log p_both, tau_lo, tau_hi,
              mu_bf, s_bf, mu_bl, s_bl, mu_lam, s_lam)
    """
    n, T = lu.shape
    k_gate, k_relax = consts[6], consts[7]
    inv_sig = np.empty(6)
    log_norm = 0.0
    for ch in range(6):
        inv_sig[ch] = 1.0 / sig[ch]
        log_norm += math.log(sig[ch]) + _LOG_SQRT_2PI
    log_norm *= T
    for i in range(n):
        mode = modes[i]
        gf = 1.0 if (mode == 1 or mode == 3) else 0.0
        gl = 1.0 if (mode == 2 or mode == 3) else 0.0
        x0, x1, x2, x3 = x[i, 0], x[i, 1], x[i, 2], x[i, 3]
        s, tau, bf, bl, lam = _unpack(x[i], T)
        if not (tau >= prior[4] and tau <= prior[5]) or s <= 0.0 or s >= 1.0:
            out[i] = -np.inf
            continue
        if not (bf > 0 and bl > 0 and lam > 0 and math.isfinite(bf) and math.isfinite(bl) and math.isfinite(lam)):
            out[i] = -np.inf
            continue
        p = -math.expm1(-lam)
        lp = prior[mode] - math.log(prior[5] - prior[4])
        lp += _lognorm(bf, x1, prior[6], prior[7])
        lp += _lognorm(bl, x2, prior[8], prior[9])
        lp += _lognorm(lam, x3, prior[10], prior[11])
        lp += math.log(T - 2) + _log_expit(x0) + _log_expit(-x0) + x1 + x2 + x3
        r_cum = 0.0
        l_tot = 0.0
        ss = 0.0
        bad = False
        for t in range(T):
            z = lu[i, t]
            a = math.exp(-abs(z))
            u = 1.0 / (1.0 + a) if z >= 0 else a / (1.0 + a)
            if u <= 0.0 or u >= 1.0:
                bad = True
                break
            ej = math.exp(lej[i, t])
            el = math.exp(lel[i, t])
            # log u + log(1 - u)
            lp += -ej - el - abs(z) - 2.0 * math.log1p(a) + lej[i, t] + lel[i, t]
            gate = _sig(k_gate * ((t + 1.0) - tau))
            r_cum += gate * _sig(k_relax * (p - u)) * (bf * ej) * gf
            l_tot += gate * (bl * el) * gl
            ss += _step_sq(obs, t, r_cum, l_tot, inv_sig, consts)
        if bad:
            out[i] = -np.inf
            continue
        out[i] = lp - 0.5 * ss - log_norm
    return out


@njit(cache=True)
def _fouling_inc(gate, p, lu_t, lej_t, bf, gf, k_relax):
    u = 1.0 / (1.0 + math.exp(-lu_t)) if lu_t > -700 else 0.0
    return gate * _sig(k_relax * (p - u)) * bf * math.exp(lej_t) * gf


@njit(cache=True)
def _rescore(obs, lo, r, l, inv_sig, consts, out):
    """Squared residuals from ``lo`` on for cumulative paths ``r``, ``l``; returns their sum."""
    tot = 0.0
    for t in range(lo, r.size):
        out[t] = _step_sq(obs, t, r[t], l[t], inv_sig, consts)
        tot += out[t]
    return tot


@njit(cache=True)
def site_moves(mode, x, lu, lej, lel, obs, sig, consts, new_u, new_ej, new_el, log_acc, offsets, split):
    """Single-step latent moves for one chain, updating ``lu, lej, lel`` in place.

    Two scans over the steps: (1) independence proposals from the latent
    prior, for ``(u, e_j)`` and for ``e_l`` separately, accepted on the
    likelihood ratio alone; (2) swaps of the ``(u, e_j)`` pair and of ``e_l``
    between step ``t`` and ``t + offsets[k, t]``, which relocate a jump.
    Both leave the latent prior invariant.  With fouling active a third scan
    splits a jump at ``t`` over ``(t, t + 1)`` when ``t + 1`` has none, and
    merges the two otherwise; this changes the jump count without changing
    the fouling path much.  ``split`` rows are (uniform for the new
    uniform, split fraction, log of a fresh unit exponential, log-uniform
    for acceptance).  ``log_acc`` holds log-uniforms, shape (4, T).  Returns
    accept counts per move type and the tracked sum of squared standardized
    residuals of the final state.
    """
    T = lu.size
    k_gate, k_relax = consts[6], consts[7]
    gf = 1.0 if (mode == 1 or mode == 3) else 0.0
    gl = 1.0 if (mode == 2 or mode == 3) else 0.0
    s, tau, bf, bl, lam = _unpack(x, T)
    p = -math.expm1(-lam)
    inv_sig = 1.0 / sig
    gate = np.empty(T)
    inc_f = np.empty(T)
    inc_l = np.empty(T)
    for t in range(T):
        gate[t] = _sig(k_gate * ((t + 1.0) - tau))
        inc_f[t] = _fouling_inc(gate[t], p, lu[t], lej[t], bf, gf, k_relax)
        inc_l[t] = gate[t] * bl * math.exp(lel[t]) * gl
    r = np.cumsum(inc_f)
    l = np.cumsum(inc_l)
    sq = np.empty(T)
    _rescore(obs, 0, r, l, inv_sig, consts, sq)
    r_new = r.copy()
    l_new = l.copy()
    sq_new = sq.copy()
    counts = np.zeros(5, dtype=np.int64)

    def _try(lo, log_u):
        # compare residuals from ``lo`` on; commit the trial paths if accepted
        old = 0.0
        for t in range(lo, T):
            old += sq[t]
        new = _rescore(obs, lo, r_new, l_new, inv_sig, consts, sq_new)
        return log_u < -0.5 * (new - old)

    for t in range(T):
        # (u, e_j) refresh
        if math.isfinite(new_u[t]) and math.isfinite(new_ej[t]):
            inc = _fouling_inc(gate[t], p, new_u[t], new_ej[t], bf, gf, k_relax)
            d = inc - inc_f[t]
            ok = True
            if d != 0.0:
                for k in range(t, T):
                    r_new[k] = r[k] + d
                ok = _try(t, log_acc[0, t])
            if ok:
                lu[t], lej[t], inc_f[t] = new_u[t], new_ej[t], inc
                if d != 0.0:
                    for k in range(t, T):
                        r[k] = r_new[k]
                        sq[k] = sq_new[k]
                counts[0] += 1
            else:
                for k in range(t, T):
                    r_new[k] = r[k]
        # e_l refresh
        if math.isfinite(new_el[t]):
            inc = gate[t] * bl * math.exp(new_el[t]) * gl
            d = inc - inc_l[t]
            ok = True
            if d != 0.0:
                for k in range(t, T):
                    l_new[k] = l[k] + d
                ok = _try(t, log_acc[1, t])
            if ok:
                lel[t], inc_l[t] = new_el[t], inc
                if d != 0.0:
                    for k in range(t, T):
                        l[k] = l_new[k]
                        sq[k] = sq_new[k]
                counts[1] += 1
            else:
                for k in range(t, T):
                    l_new[k] = l[k]

    for t in range(T):
        # (u, e_j) swap
        b = t + offsets[0, t]
        if 0 <= b < T:
            lo, hi = min(t, b), max(t, b)
            ia = _fouling_inc(gate[lo], p, lu[hi], lej[hi], bf, gf, k_relax)
            ib = _fouling_inc(gate[hi], p, lu[lo], lej[lo], bf, gf, k_relax)
            da, db = ia - inc_f[lo], ib - inc_f[hi]
            ok = True
            if da != 0.0 or db != 0.0:
                for k in range(lo, T):
                    r_new[k] = r[k] + da + (db if k >= hi else 0.0)
                ok = _try(lo, log_acc[2, t])
            if ok:
                lu[lo], lu[hi] = lu[hi], lu[lo]
                lej[lo], lej[hi] = lej[hi], lej[lo]
                inc_f[lo], inc_f[hi] = ia, ib
                if da != 0.0 or db != 0.0:
                    for k in range(lo, T):
                        r[k] = r_new[k]
                        sq[k] = sq_new[k]
                counts[2] += 1
            else:
                for k in range(lo, T):
                    r_new[k] = r[k]
        # e_l swap
        b = t + offsets[1, t]
        if 0 <= b < T:
            lo, hi = min(t, b), max(t, b)
            ia = gate[lo] * bl * math.exp(lel[hi]) * gl
            ib = gate[hi] * bl * math.exp(lel[lo]) * gl
            da, db = ia - inc_l[lo], ib - inc_l[hi]
            ok = True
            if da != 0.0 or db != 0.0:
                for k in range(lo, T):
                    l_new[k] = l[k] + da + (db if k >= hi else 0.0)
                ok = _try(lo, log_acc[3, t])
            if ok:
                lel[lo], lel[hi] = lel[hi], lel[lo]
                inc_l[lo], inc_l[hi] = ia, ib
                if da != 0.0 or db != 0.0:
                    for k in range(lo, T):
                        l[k] = l_new[k]
                        sq[k] = sq_new[k]
                counts[3] += 1
            else:
                for k in range(lo, T):
                    l_new[k] = l[k]

    if gf == 0.0 or p >= 1.0:
        return counts, sq.sum()
    log_odds = math.log(p) - math.log1p(-p)
    for t in range(T - 1):
        u0 = 1.0 / (1.0 + math.exp(-lu[t]))
        u1 = 1.0 / (1.0 + math.exp(-lu[t + 1]))
        if not u0 < p:
            continue
        v, w = split[0, t], split[1, t]
        if not (0.0 < v < 1.0 and 0.0 < w < 1.0 and math.isfinite(split[2, t])):
            continue
        e0, e1 = math.exp(lej[t]), math.exp(lej[t + 1])
        if u1 < p:
            # merge: the second jump's uniform and size are redrawn as a non-jump
            a = e0 + e1
            nu1 = p + (1.0 - p) * v
            ne0, lne1 = a, split[2, t]
            extra = -math.log(a) - log_odds
        else:
            a = e0
            nu1 = p * v
            ne0, lne1 = w * a, math.log((1.0 - w) * a)
            extra = math.log(a) + log_odds
        if not (0.0 < nu1 < 1.0) or ne0 <= 0.0 or not math.isfinite(lne1):
            continue
        lnu1 = math.log(nu1) - math.log1p(-nu1)
        lne0 = math.log(ne0)
        ia = _fouling_inc(gate[t], p, lu[t], lne0, bf, gf, k_relax)
        ib = _fouling_inc(gate[t + 1], p, lnu1, lne1, bf, gf, k_relax)
        da, db = ia - inc_f[t], ib - inc_f[t + 1]
        for k in range(t, T):
            r_new[k] = r[k] + da + (db if k > t else 0.0)
        old = 0.0
        for k in range(t, T):
            old += sq[k]
        new = _rescore(obs, t, r_new, l_new, inv_sig, consts, sq_new)
        if split[3, t] < -0.5 * (new - old) + extra:
            lej[t], lu[t + 1], lej[t + 1] = lne0, lnu1, lne1
            inc_f[t], inc_f[t + 1] = ia, ib
            for k in range(t, T):
                r[k] = r_new[k]
                sq[k] = sq_new[k]
            counts[4] += 1
        else:
            for k in range(t, T):
                r_new[k] = r[k]
    return counts, sq.sum()


def pack_constants(cond, spec, k_gate, k_relax):
    hot, cold = cond.hot_inlet, cond.cold_inlet
    consts = np.array([hot.inlet_temp, cold.inlet_temp, hot.mass_flow, hot.specific_heat,
                       cold.capacity_rate, cond.ua_clean, k_gate, k_relax])
    ln = spec.lognormals
    with np.errstate(divide="ignore"):
        log_pm = np.log(np.asarray(spec.mode_probs, dtype=float))
    lo, hi = spec.tau_bounds
    prior = np.concatenate([log_pm, [lo, hi], ln["beta_f"], ln["beta_l"], ln["lam"]]).astype(float)
    return consts, prior
