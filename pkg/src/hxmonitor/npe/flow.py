"""Conditional spline coupling flow and the failure-mode classifier."""

from __future__ import annotations

import math

import torch
from torch import nn

from .splines import DEFAULT_BINS, DEFAULT_TAIL_BOUND, rq_spline

DTYPE = torch.float64


def _mlp(n_in, n_hidden, n_out, n_layers=2):
    layers, width = [], n_in
    for _ in range(n_layers):
        layers += [nn.Linear(width, n_hidden, dtype=DTYPE), nn.ReLU()]
        width = n_hidden
    layers.append(nn.Linear(width, n_out, dtype=DTYPE))
    return nn.Sequential(*layers)


class SplineCoupling(nn.Module):
    """One coupling layer: coordinates where ``mask`` is 1 condition the rest."""

    def __init__(self, mask, n_context, n_hidden=50, n_bins=DEFAULT_BINS, tail_bound=DEFAULT_TAIL_BOUND):
        super().__init__()
        mask = torch.as_tensor(mask, dtype=torch.bool)
        self.register_buffer("mask", mask)
        self.n_bins = n_bins
        self.tail_bound = tail_bound
        n_cond, n_free = int(mask.sum()), int((~mask).sum())
        self.net = _mlp(n_cond + n_context, n_hidden, n_free * (3 * n_bins - 1))
        # start at the identity map
        nn.init.zeros_(self.net[-1].weight)
        nn.init.zeros_(self.net[-1].bias)

    def _params(self, x, context):
        h = self.net(torch.cat([x[:, self.mask], context], dim=1))
        h = h.view(x.shape[0], -1, 3 * self.n_bins - 1)
        K = self.n_bins
        return h[..., :K], h[..., K:2 * K], h[..., 2 * K:]

    def _transform(self, x, context, inverse):
        uw, uh, ud = self._params(x, context)
        y_free, lad = rq_spline(x[:, ~self.mask], uw, uh, ud, inverse=inverse, tail_bound=self.tail_bound)
        y = x.clone()
        y[:, ~self.mask] = y_free
        return y, lad.sum(dim=1)

    def forward(self, x, context):
        return self._transform(x, context, inverse=False)

    def inverse(self, y, context):
        return self._transform(y, context, inverse=True)


class SplineFlow(nn.Module):
    """Stack of coupling layers with alternating masks over a standard-normal base.

    ``forward`` maps parameters to the base space; sampling runs the layers
    in reverse through their inverses.
    """

    def __init__(self, n_dim=4, n_context=25, n_layers=5, n_hidden=50, n_bins=DEFAULT_BINS,
                 tail_bound=DEFAULT_TAIL_BOUND):
        super().__init__()
        self.n_dim = n_dim
        self.n_context = n_context
        self.config = dict(n_dim=n_dim, n_context=n_context, n_layers=n_layers, n_hidden=n_hidden,
                           n_bins=n_bins, tail_bound=tail_bound)
        base = torch.arange(n_dim) % 2 == 0
        self.layers = nn.ModuleList(
            SplineCoupling(base if i % 2 == 0 else ~base, n_context, n_hidden, n_bins, tail_bound)
            for i in range(n_layers)
        )

    def forward(self, x, context):
        lad = torch.zeros(x.shape[0], dtype=x.dtype)
        for layer in self.layers:
            x, ld = layer(x, context)
            lad = lad + ld
        return x, lad

    def inverse(self, z, context):
        lad = torch.zeros(z.shape[0], dtype=z.dtype)
        for layer in reversed(self.layers):
            z, ld = layer.inverse(z, context)
            lad = lad + ld
        return z, lad

    def log_prob(self, x, context):
        z, lad = self(x, context)
        return standard_normal_logpdf(z) + lad

    def sample(self, context, n, generator=None):
        """``n`` draws for a single context row."""
        z = torch.randn(n, self.n_dim, dtype=DTYPE, generator=generator)
        ctx = context.reshape(1, -1).expand(n, -1)
        x, _ = self.inverse(z, ctx)
        return x


def standard_normal_logpdf(z):
    return -0.5 * torch.sum(z * z, dim=-1) - 0.5 * z.shape[-1] * math.log(2 * math.pi)


class ModeClassifier(nn.Module):
    """Feed-forward network from summaries to failure-mode logits."""

    def __init__(self, n_context=25, n_hidden=50, n_classes=4):
        super().__init__()
        self.config = dict(n_context=n_context, n_hidden=n_hidden, n_classes=n_classes)
        self.net = _mlp(n_context, n_hidden, n_classes)

    def forward(self, s):
        return self.net(s)

    def probabilities(self, s):
        return torch.softmax(self(s), dim=-1)


def flow_log_prob(flow: SplineFlow, theta_t, s):
    """Log-density of the flow at ``theta_t`` (rows) given summaries ``s`` (rows or one row)."""
    theta_t = torch.as_tensor(theta_t, dtype=DTYPE)
    s = torch.as_tensor(s, dtype=DTYPE)
    squeeze = theta_t.ndim == 1
    theta_t = theta_t.reshape(-1, flow.n_dim)
    s = s.reshape(-1, flow.n_context).expand(theta_t.shape[0], -1)
    with torch.no_grad():
        out = flow.log_prob(theta_t, s)
    return float(out[0]) if squeeze else out.numpy()
