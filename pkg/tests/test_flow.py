import itertools

import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from hxmonitor.npe.flow import DTYPE, ModeClassifier, SplineFlow, flow_log_prob
from hxmonitor.npe.splines import rq_spline, spline_knots
from oracles import grid_mass, inversion_error, logdet_relative_errors, train_toy_flow

B = 5.0
K = 8


def _params(n, scale, seed):
    g = torch.Generator().manual_seed(seed)
    return (scale * torch.randn(n, K, dtype=DTYPE, generator=g),
            scale * torch.randn(n, K, dtype=DTYPE, generator=g),
            scale * torch.randn(n, K - 1, dtype=DTYPE, generator=g))


def _bend(flow, scale, seed):
    """Give an identity-initialized flow nontrivial random output layers."""
    g = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for layer in flow.layers:
            w = layer.net[-1].weight
            w.copy_(scale * torch.randn(w.shape, dtype=DTYPE, generator=g))
    return flow


@pytest.fixture(scope="module")
def trained_flow():
    return train_toy_flow()


# --- scalar spline ---------------------------------------------------------------

def test_zero_parameters_give_identity():
    x = torch.linspace(-7, 7, 301, dtype=DTYPE)
    zeros = torch.zeros(x.numel(), K, dtype=DTYPE)
    y, lad = rq_spline(x, zeros, zeros, zeros[:, :-1])
    torch.testing.assert_close(y, x, atol=1e-12, rtol=0)
    torch.testing.assert_close(lad, torch.zeros_like(x), atol=1e-12, rtol=0)


@pytest.mark.parametrize("scale", [0.5, 3.0])
def test_spline_monotone_through_knots_and_midpoints(scale):
    uw, uh, ud = _params(1, scale, 0)
    cum_w, cum_h, _ = spline_knots(uw, uh, ud)
    knots = cum_w[0]
    mids = 0.5 * (knots[1:] + knots[:-1])
    x = torch.sort(torch.cat([knots[:-1], mids, torch.linspace(-B + 1e-9, B - 1e-9, 2001, dtype=DTYPE)]))[0]
    n = x.numel()
    y, lad = rq_spline(x, uw.expand(n, -1), uh.expand(n, -1), ud.expand(n, -1))
    assert torch.all(torch.diff(y) >= 0)
    assert torch.all(torch.isfinite(lad))
    # interior knots map onto the height knots
    yk, _ = rq_spline(knots[1:-1], uw.expand(K - 1, -1), uh.expand(K - 1, -1), ud.expand(K - 1, -1))
    torch.testing.assert_close(yk, cum_h[0, 1:-1], atol=1e-10, rtol=0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.1, 4.0))
def test_spline_inverse_roundtrip(seed, scale):
    n = 200
    uw, uh, ud = _params(n, scale, seed)
    x = torch.linspace(-6, 6, n, dtype=DTYPE)
    y, lad = rq_spline(x, uw, uh, ud)
    x_back, lad_inv = rq_spline(y, uw, uh, ud, inverse=True)
    torch.testing.assert_close(x_back, x, atol=1e-8, rtol=0)
    torch.testing.assert_close(lad_inv, -lad, atol=1e-8, rtol=0)


@pytest.mark.parametrize("seed", range(5))
def test_linear_tails_join_continuously(seed):
    uw, uh, ud = _params(4, 2.0, seed)
    eps = 1e-10
    x = torch.tensor([-B - eps, -B + eps, B - eps, B + eps], dtype=DTYPE)
    y, lad = rq_spline(x, uw, uh, ud)
    assert abs(float(y[0] - y[1])) < 1e-9
    assert abs(float(y[2] - y[3])) < 1e-9
    # the boundary derivatives are pinned to one, matching the identity tails
    assert torch.all(lad.abs() < 1e-4)


def test_spline_derivative_matches_finite_differences():
    uw, uh, ud = _params(50, 1.5, 7)
    x = torch.linspace(-4.9, 4.9, 50, dtype=DTYPE)
    h = 1e-6
    _, lad = rq_spline(x, uw, uh, ud)
    yp, _ = rq_spline(x + h, uw, uh, ud)
    ym, _ = rq_spline(x - h, uw, uh, ud)
    fd = torch.log((yp - ym) / (2 * h))
    torch.testing.assert_close(lad, fd, atol=1e-4, rtol=0)


def test_too_many_bins_for_minimum_width_rejected():
    z = torch.zeros(1, 2000, dtype=DTYPE)
    with pytest.raises(ValueError):
        spline_knots(z, z, z[:, :-1])


# --- flow -------------------------------------------------------------------------------

def test_fresh_flow_is_identity():
    flow = SplineFlow(n_context=3)
    x = torch.randn(64, 4, dtype=DTYPE)
    c = torch.randn(64, 3, dtype=DTYPE)
    z, lad = flow(x, c)
    torch.testing.assert_close(z, x, atol=1e-12, rtol=0)
    torch.testing.assert_close(lad, torch.zeros(64, dtype=DTYPE), atol=1e-12, rtol=0)


def test_identity_flow_density_is_standard_normal():
    flow = SplineFlow(n_context=25)
    x = np.random.default_rng(0).normal(size=(20, 4)) * 2
    expected = -0.5 * np.sum(x**2, axis=1) - 2 * np.log(2 * np.pi)
    np.testing.assert_allclose(flow_log_prob(flow, x, np.ones(25)), expected, atol=1e-12)


@pytest.mark.parametrize("which", ["trained", "bent"])
def test_flow_invertible(which, trained_flow):
    flow = trained_flow if which == "trained" else _bend(SplineFlow(n_context=2), 0.3, 3)
    g = torch.Generator().manual_seed(4)
    c = torch.randn(500, 2, dtype=DTYPE, generator=g)
    x = 2 * torch.randn(500, 4, dtype=DTYPE, generator=g)
    err_x, err_lad = inversion_error(flow, x, c)
    assert err_x < 1e-6 and err_lad < 1e-6


def test_flow_log_det_matches_finite_difference_jacobian(trained_flow):
    pts = torch.randn(10, 4, dtype=DTYPE, generator=torch.Generator().manual_seed(5))
    errs = logdet_relative_errors(trained_flow, pts, torch.tensor([0.3, -0.7], dtype=DTYPE))
    assert errs.max() < 1e-4


def test_flow_density_integrates_to_one(trained_flow):
    assert grid_mass(trained_flow, np.array([0.5, -0.5])) == pytest.approx(1.0, abs=0.02)


def test_flow_sampling_reproducible(trained_flow):
    c = torch.tensor([0.1, 0.2], dtype=DTYPE)
    with torch.no_grad():
        a = trained_flow.sample(c, 10, generator=torch.Generator().manual_seed(9))
        b = trained_flow.sample(c, 10, generator=torch.Generator().manual_seed(9))
    torch.testing.assert_close(a, b, atol=0, rtol=0)


def test_flow_log_prob_helper_shapes(trained_flow):
    c = np.zeros(2)
    assert isinstance(flow_log_prob(trained_flow, np.zeros(4), c), float)
    assert flow_log_prob(trained_flow, np.zeros((3, 4)), c).shape == (3,)


# --- classifier ------------------------------------------------------------------------

def test_classifier_probabilities_normalized():
    torch.manual_seed(0)
    clf = ModeClassifier(n_context=25)
    s = torch.randn(100, 25, dtype=DTYPE)
    p = clf.probabilities(s)
    assert p.shape == (100, 4)
    torch.testing.assert_close(p.sum(dim=1), torch.ones(100, dtype=DTYPE), atol=1e-12, rtol=0)
    assert torch.all(p > 0)


def test_classifier_invariant_to_common_logit_shift():
    torch.manual_seed(1)
    clf = ModeClassifier(n_context=25)
    s = torch.randn(20, 25, dtype=DTYPE)
    with torch.no_grad():
        before = clf.probabilities(s)
        clf.net[-1].bias += 37.0
        after = clf.probabilities(s)
    torch.testing.assert_close(before, after, atol=1e-12, rtol=0)


def test_coupling_masks_alternate():
    flow = SplineFlow(n_layers=3)
    masks = [layer.mask.tolist() for layer in flow.layers]
    assert masks[0] == [True, False, True, False]
    assert masks[1] == [False, True, False, True]
    assert masks[2] == masks[0]
    for a, b in itertools.pairwise(masks):
        assert a != b
