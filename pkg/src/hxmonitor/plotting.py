"""Optional matplotlib renderings of the benchmark and PPC outputs.

Only the CLI's ``--figures`` flag reaches this module, and matplotlib is
imported lazily with the non-interactive backend.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    try:
        import matplotlib
    except ImportError as exc:
        raise ValueError("--figures needs matplotlib; install the 'figures' extra") from exc

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_median_scatter(report, path) -> Path:
    """MCMC versus NPE posterior medians, one panel per parameter."""
    plt = _pyplot()
    params = ("tau", "beta_f", "beta_l", "lam")
    fig, axes = plt.subplots(1, 4, figsize=(16, 4))
    for ax, p in zip(axes, params):
        lo, hi = np.inf, -np.inf
        for sc in report.scenarios:
            if sc.truth().get(p) is None:
                continue
            a, b = report.medians(sc.name, "mcmc", p), report.medians(sc.name, "npe", p)
            if len(a) == 0 or len(a) != len(b):
                continue
            ax.scatter(a, b, s=8, alpha=0.6, label=sc.name)
            lo, hi = min(lo, a.min(), b.min()), max(hi, a.max(), b.max())
        if np.isfinite(lo):
            ax.plot([lo, hi], [lo, hi], "k--", lw=0.8)
        ax.set_xlabel(f"MCMC median {p}")
        ax.set_ylabel(f"NPE median {p}")
    axes[0].legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def plot_accuracy(report, path) -> Path:
    plt = _pyplot()
    rows = report.accuracy_table()
    x = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(x - 0.2, [r[2] for r in rows], 0.4, label="MCMC")
    ax.bar(x + 0.2, [r[3] for r in rows], 0.4, label="NPE")
    ax.set_xticks(x, [r[0] for r in rows], rotation=30, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("mode accuracy")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_bands(bands, path, truth=None) -> Path:
    """Fouling factor and leak fraction quantile bands over time."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    t = np.arange(1, bands.fouling.shape[1] + 1)
    for j, (ax, kind, label) in enumerate(zip(axes, ("fouling", "leak"), ("fouling factor", "leak fraction"))):
        band = getattr(bands, kind)
        ax.fill_between(t, band[0], band[-1], alpha=0.3, label="posterior band")
        ax.plot(t, band[len(band) // 2], lw=1.2, label="median")
        if truth is not None:
            ax.plot(t, truth[j], "r--", lw=1.0, label="truth")
        ax.set_xlabel("t")
        ax.set_ylabel(label)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    fig.clf()
    import matplotlib.pyplot as plt

    plt.close(fig)
    return path
