"""Monotonic rational-quadratic splines with linear tails.

Inside ``[-B, B]`` each coordinate goes through a piecewise rational-quadratic
map defined by K bin widths, K bin heights and K - 1 interior knot
derivatives; outside the interval the map is the identity.  The boundary
derivatives are pinned to 1 so the two pieces join smoothly.

The unnormalized derivative parameters are offset so that all-zero inputs
give unit derivatives, which together with equal bins makes the spline the
identity.
"""

from __future__ import annotations

import math

import torch
from torch.nn import functional as F

DEFAULT_BINS = 8
DEFAULT_TAIL_BOUND = 5.0
MIN_BIN_WIDTH = 1e-3
MIN_BIN_HEIGHT = 1e-3
MIN_DERIVATIVE = 1e-3


def _unit_offset(min_derivative):
    # softplus(offset) + min_derivative == 1
    return math.log(math.expm1(1.0 - min_derivative))


def spline_knots(uw, uh, ud, tail_bound=DEFAULT_TAIL_BOUND, min_bin_width=MIN_BIN_WIDTH,
                 min_bin_height=MIN_BIN_HEIGHT, min_derivative=MIN_DERIVATIVE):
    """Knot positions and derivatives from unconstrained parameters.

    Returns ``(cum_w, cum_h, derivs)`` with shapes ``(..., K+1)``.
    """
    K = uw.shape[-1]
    if min_bin_width * K > 1.0 or min_bin_height * K > 1.0:
        raise ValueError("minimum bin size too large for the number of bins")
    w = F.softmax(uw, dim=-1)
    w = min_bin_width + (1 - min_bin_width * K) * w
    cum_w = F.pad(torch.cumsum(w, dim=-1), (1, 0))
    cum_w = 2 * tail_bound * cum_w - tail_bound
    cum_w[..., 0], cum_w[..., -1] = -tail_bound, tail_bound

    h = F.softmax(uh, dim=-1)
    h = min_bin_height + (1 - min_bin_height * K) * h
    cum_h = F.pad(torch.cumsum(h, dim=-1), (1, 0))
    cum_h = 2 * tail_bound * cum_h - tail_bound
    cum_h[..., 0], cum_h[..., -1] = -tail_bound, tail_bound

    inner = min_derivative + F.softplus(ud + _unit_offset(min_derivative))
    one = torch.ones(ud.shape[:-1] + (1,), dtype=ud.dtype)
    derivs = torch.cat([one, inner, one], dim=-1)
    return cum_w, cum_h, derivs


def _gather(t, idx):
    return t.gather(-1, idx[..., None])[..., 0]


def rq_spline(inputs, uw, uh, ud, inverse=False, tail_bound=DEFAULT_TAIL_BOUND,
              min_bin_width=MIN_BIN_WIDTH, min_bin_height=MIN_BIN_HEIGHT, min_derivative=MIN_DERIVATIVE):
    """Elementwise spline transform and its log-abs-derivative.

    ``inputs`` has shape ``(...)`` and the parameters ``(..., K)``,
    ``(..., K)``, ``(..., K-1)``.  With ``inverse=True`` the inverse map is
    applied and the returned log-derivative is that of the inverse.
    """
    inside = (inputs > -tail_bound) & (inputs < tail_bound)
    outputs = inputs.clone()
    logabsdet = torch.zeros_like(inputs)
    if not torch.any(inside):
        return outputs, logabsdet

    x = inputs[inside]
    cum_w, cum_h, derivs = spline_knots(uw[inside], uh[inside], ud[inside], tail_bound,
                                        min_bin_width, min_bin_height, min_derivative)
    knots = cum_h if inverse else cum_w
    # bin index; the last knot is nudged so that x == B falls in the last bin
    edges = knots.clone()
    edges[..., -1] += 1e-6
    idx = (torch.sum(x[..., None] >= edges, dim=-1) - 1).clamp(0, uw.shape[-1] - 1)

    x0, w = _gather(cum_w, idx), _gather(cum_w, idx + 1) - _gather(cum_w, idx)
    y0, h = _gather(cum_h, idx), _gather(cum_h, idx + 1) - _gather(cum_h, idx)
    d0, d1 = _gather(derivs, idx), _gather(derivs, idx + 1)
    s = h / w

    if not inverse:
        xi = (x - x0) / w
        omx = 1 - xi
        num = h * (s * xi * xi + d0 * xi * omx)
        den = s + (d1 + d0 - 2 * s) * xi * omx
        y = y0 + num / den
        dnum = s * s * (d1 * xi * xi + 2 * s * xi * omx + d0 * omx * omx)
        lad = torch.log(dnum) - 2 * torch.log(den)
    else:
        dy = x - y0
        c = d1 + d0 - 2 * s
        a = h * (s - d0) + dy * c
        b = h * d0 - dy * c
        cc = -s * dy
        disc = (b * b - 4 * a * cc).clamp_min(0.0)
        xi = (2 * cc) / (-b - torch.sqrt(disc))
        y = xi * w + x0
        omx = 1 - xi
        den = s + c * xi * omx
        dnum = s * s * (d1 * xi * xi + 2 * s * xi * omx + d0 * omx * omx)
        lad = -(torch.log(dnum) - 2 * torch.log(den))

    outputs = outputs.index_put((inside,), y)
    logabsdet = logabsdet.index_put((inside,), lad)
    return outputs, logabsdet
