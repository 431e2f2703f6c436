"""Benchmark scenarios and their reproducible noisy realizations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .degradation import DegradationParams, FailureMode, LatentTrajectory
from .model import PriorSpec
from .observation import DegradationTheta, ObservationSeries, OperatingConditions, simulate


@dataclass(frozen=True)
class ScenarioSpec:
    """Ground truth for one benchmark scenario.

    Parameters the mode switches off are ``None``; they are filled with prior
    medians when simulating, which leaves the record unaffected.
    """

    name: str
    mode: FailureMode
    tau: float
    beta_f: float | None = None
    beta_l: float | None = None
    lam: float | None = None
    n_realizations: int = 500

    def __post_init__(self):
        object.__setattr__(self, "mode", FailureMode.parse(self.mode))
        m = self.mode
        needed = {"beta_f": m.g_f, "lam": m.g_f, "beta_l": m.g_l}
        for name, used in needed.items():
            value = getattr(self, name)
            if used and (value is None or not value > 0):
                raise ValueError(f"scenario {self.name}: mode {m.label} needs a positive {name}")
            if not used and value is not None:
                raise ValueError(f"scenario {self.name}: {name} is unused under mode {m.label}")
        if not self.tau > 0:
            raise ValueError(f"scenario {self.name}: tau must be > 0")
        if self.n_realizations < 1:
            raise ValueError(f"scenario {self.name}: n_realizations must be >= 1")

    def theta(self, spec: PriorSpec = PriorSpec()) -> DegradationTheta:
        fill = {k: float(np.exp(mu)) for k, (mu, _) in spec.lognormals.items()}
        vals = {k: fill[k] if getattr(self, k) is None else getattr(self, k) for k in ("beta_f", "beta_l", "lam")}
        return DegradationTheta(self.mode, DegradationParams(self.tau, **vals))

    def truth(self) -> dict:
        """True values of the parameters this scenario's mode uses."""
        return {k: getattr(self, k) for k in ("tau", "beta_f", "beta_l", "lam") if getattr(self, k) is not None}


DEFAULT_SCENARIOS = (
    ScenarioSpec("weak_fouling", FailureMode.FOULING, 18, beta_f=0.005, lam=5.0),
    ScenarioSpec("batch_shutdown", FailureMode.FOULING, 18, beta_f=0.03, lam=0.5),
    ScenarioSpec("boiler_feedwater", FailureMode.FOULING, 18, beta_f=0.05, lam=3.0),
    ScenarioSpec("mild_leak", FailureMode.LEAKAGE, 18, beta_l=0.0005),
    ScenarioSpec("severe_leak", FailureMode.LEAKAGE, 18, beta_l=0.001),
    ScenarioSpec("no_failure", FailureMode.NONE, 18),
)


def find_scenario(scenarios, key) -> tuple[int, ScenarioSpec]:
    """Look a scenario up by name or by its 1-based position."""
    for i, sc in enumerate(scenarios):
        if sc.name == key or str(i + 1) == str(key):
            return i, sc
    raise KeyError(f"unknown scenario {key!r}; known: {', '.join(s.name for s in scenarios)}")


def realization_rngs(seed: int, scenario_index: int, n: int) -> list[np.random.Generator]:
    """Independent per-realization streams derived from the master seed."""
    ss = np.random.SeedSequence([int(seed), int(scenario_index)])
    return [np.random.default_rng(s) for s in ss.spawn(n)]


def realizations(sc: ScenarioSpec, cond: OperatingConditions, seed: int, scenario_index: int,
                 n: int | None = None, spec: PriorSpec = PriorSpec()) -> list[tuple[LatentTrajectory, ObservationSeries]]:
    n = sc.n_realizations if n is None else n
    theta = sc.theta(spec)
    return [simulate(theta, cond, rng) for rng in realization_rngs(seed, scenario_index, n)]
