"""Scoring rules and distances for posterior samples."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .degradation import FailureMode

COVERAGE_LEVELS = (0.5, 0.9)

# parameters that carry information under each true mode
RELEVANT_PARAMS = {
    FailureMode.NONE: (),
    FailureMode.FOULING: ("tau", "beta_f", "lam"),
    FailureMode.LEAKAGE: ("tau", "beta_l"),
    FailureMode.BOTH: ("tau", "beta_f", "beta_l", "lam"),
}


def crps_empirical(samples, truth: float) -> float:
    """Continuous ranked probability score of an empirical distribution.

    ``mean|X - y| - 0.5 * mean|X - X'|`` with self-pairs included in the
    second term, evaluated in O(N log N) through the order statistics.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < 2:
        raise ValueError("crps_empirical needs at least 2 samples")
    spread = np.dot(2.0 * np.arange(1, n + 1) - n - 1, x) / (n * n)
    return float(np.mean(np.abs(x - truth)) - spread)


def wasserstein_1d(a, b) -> float:
    """1-Wasserstein distance between two empirical distributions on the line.

    Integrates ``|F_a - F_b|`` over the merged support, which equals the
    quantile-function integral.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("wasserstein_1d needs non-empty samples")
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    grid = np.sort(np.concatenate([a, b]))
    widths = np.diff(grid)
    fa = np.searchsorted(a, grid[:-1], side="right") / a.size
    fb = np.searchsorted(b, grid[:-1], side="right") / b.size
    return float(np.sum(np.abs(fa - fb) * widths))


def credible_interval(samples, level: float) -> tuple[float, float]:
    """Central equal-tailed interval from linearly interpolated empirical quantiles."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    lo, hi = np.quantile(np.asarray(samples, dtype=float), [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)


def coverage(samples, truth: float, level: float) -> bool:
    samples = np.asarray(samples, dtype=float)
    if samples.size < 10:
        raise ValueError("coverage needs at least 10 samples")
    lo, hi = credible_interval(samples, level)
    return bool(lo <= truth <= hi)


def classification_accuracy(predicted, truth) -> float:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError(f"length mismatch: {predicted.shape} vs {truth.shape}")
    if predicted.size == 0:
        raise ValueError("no labels to compare")
    return float(np.mean(predicted == truth))


@dataclass
class ScoreReport:
    """Scores of one posterior against the truth and, optionally, a reference posterior.

    ``wasserstein`` is normalized by ``|truth|``; parameters whose truth is 0
    are reported unnormalized and listed in ``unnormalized``.
    """

    crps: dict = field(default_factory=dict)
    wasserstein: dict = field(default_factory=dict)
    coverage: dict = field(default_factory=dict)
    mode_correct: bool = False
    unnormalized: tuple = ()

    def __post_init__(self):
        if any(v < 0 for v in self.crps.values()) or any(v < 0 for v in self.wasserstein.values()):
            raise ValueError("scores must be non-negative")


def score_posterior(ensemble, truth_mode, truth_params: dict, reference=None, params=None) -> ScoreReport:
    """Score a :class:`PosteriorEnsemble` against a known truth.

    Parameters
    ----------
    truth_mode
        True failure mode (label or int).
    truth_params
        ``name -> true value``; only the parameters the true mode uses are
        scored unless ``params`` is given.
    reference
        Optional second ensemble (the MCMC reference) for the Wasserstein term.
    """
    mode = FailureMode.parse(truth_mode)
    names = RELEVANT_PARAMS[mode] if params is None else tuple(params)
    crps, wd, cov = {}, {}, {lvl: {} for lvl in COVERAGE_LEVELS}
    unnorm = []
    for name in names:
        y = float(truth_params[name])
        draws = ensemble.params[name]
        crps[name] = crps_empirical(draws, y)
        for lvl in COVERAGE_LEVELS:
            cov[lvl][name] = coverage(draws, y, lvl)
        if reference is not None:
            d = wasserstein_1d(draws, reference.params[name])
            if y == 0:
                unnorm.append(name)
                wd[name] = d
            else:
                wd[name] = d / abs(y)
    return ScoreReport(crps=crps, wasserstein=wd, coverage=cov,
                       mode_correct=ensemble.predicted_mode == mode, unnormalized=tuple(unnorm))
