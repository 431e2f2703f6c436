"""Paired MCMC/NPE evaluation, cost accounting and posterior predictive bands."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .degradation import GATE_F, GATE_L, K_GATE, K_RELAX, fouling_from_latents, leak_from_latents
from .ensemble import PosteriorEnsemble
from .mcmc import ChainConfig, run_mcmc
from .metrics import RELEVANT_PARAMS, score_posterior
from .model import PARAM_NAMES, PriorSpec
from .npe.engine import TrainedPosterior, infer
from .observation import OperatingConditions
from .scenarios import ScenarioSpec, realizations

log = logging.getLogger(__name__)

ENGINES = ("mcmc", "npe")
RECORD_HEADER = (
    ("scenario", "realization", "engine", "true_mode", "predicted_mode", "correct", "wall_time",
     "simulator_calls", "transitions")
    + tuple(f"median_{p}" for p in PARAM_NAMES)
    + tuple(f"crps_{p}" for p in PARAM_NAMES)
    + tuple(f"cover50_{p}" for p in PARAM_NAMES)
    + tuple(f"cover90_{p}" for p in PARAM_NAMES)
    + tuple(f"w1_{p}" for p in PARAM_NAMES)
)
ACCURACY_HEADER = ("scenario", "failure", "mcmc", "sbi")
COST_HEADER = ("engine", "calls", "mean_wall_time", "sim_calls_per_call", "transitions_per_call",
               "training_sims", "training_wall_time")
SUMMARY_HEADER = ("quantity", "value")
SCATTER_HEADER = ("scenario", "realization", "param", "mcmc_median", "sbi_median", "truth")
PPC_QUANTILES = (0.025, 0.5, 0.975)


def break_even_calls(upfront: float, per_call_amortized: float, per_call_reference: float) -> int | None:
    """Smallest call count n with ``upfront + n * amortized < n * reference``.

    Returns ``None`` when the amortized engine is not cheaper per call.
    """
    margin = per_call_reference - per_call_amortized
    if margin <= 0:
        return None
    n = max(1, math.floor(upfront / margin) + 1)
    return n


def engine_seed(seed: int, scenario_index: int, realization: int, engine: str) -> int:
    ss = np.random.SeedSequence([int(seed), int(scenario_index), int(realization), ENGINES.index(engine)])
    return int(ss.generate_state(1)[0])


@dataclass
class BenchmarkReport:
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    scenarios: tuple = ()
    training_sims: int = 0
    training_wall_time: float = 0.0

    def _rows(self, engine, scenario=None):
        return [r for r in self.records if r["engine"] == engine and (scenario is None or r["scenario"] == scenario)]

    def accuracy(self, scenario: str, engine: str) -> float:
        rows = self._rows(engine, scenario)
        return float(np.mean([r["correct"] for r in rows])) if rows else float("nan")

    def false_positive_rate(self, scenario: str, engine: str) -> float:
        return 1.0 - self.accuracy(scenario, engine)

    def mean_wall_time(self, engine: str) -> float:
        rows = self._rows(engine)
        return float(np.mean([r["wall_time"] for r in rows])) if rows else float("nan")

    def mean_transitions(self, engine: str) -> float:
        rows = self._rows(engine)
        return float(np.mean([r["transitions"] for r in rows])) if rows else float("nan")

    @property
    def speedup(self) -> float:
        """Mean MCMC wall time per call over mean NPE wall time per call."""
        return self.mean_wall_time("mcmc") / self.mean_wall_time("npe")

    @property
    def break_even(self) -> int | None:
        """Break-even in simulator runs: training simulations versus MCMC transitions per call."""
        return break_even_calls(self.training_sims, 0.0, self.mean_transitions("mcmc"))

    @property
    def break_even_wall(self) -> int | None:
        """Break-even in wall-clock seconds, including the training time."""
        return break_even_calls(self.training_wall_time, self.mean_wall_time("npe"), self.mean_wall_time("mcmc"))

    def medians(self, scenario: str, engine: str, param: str) -> np.ndarray:
        rows = sorted(self._rows(engine, scenario), key=lambda r: r["realization"])
        return np.array([r[f"median_{param}"] for r in rows])

    def accuracy_table(self) -> list[tuple]:
        out = []
        for sc in self.scenarios:
            out.append((sc.name, sc.mode.label, self.accuracy(sc.name, "mcmc"), self.accuracy(sc.name, "npe")))
        return out

    def to_csv(self, out_dir) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {}

        def write(name, header, rows):
            p = out / name
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                w.writerows(rows)
            paths[name] = p

        write("records.csv", RECORD_HEADER, [[_fmt(r.get(k, "")) for k in RECORD_HEADER] for r in self.records])
        write("accuracy.csv", ACCURACY_HEADER, [[a, b, _fmt(c), _fmt(d)] for a, b, c, d in self.accuracy_table()])
        cost = []
        for eng in ENGINES:
            rows = self._rows(eng)
            if not rows:
                continue
            cost.append([eng, len(rows), _fmt(self.mean_wall_time(eng)),
                         _fmt(np.mean([r["simulator_calls"] for r in rows])), _fmt(self.mean_transitions(eng)),
                         self.training_sims if eng == "npe" else 0,
                         _fmt(self.training_wall_time if eng == "npe" else 0.0)])
        write("cost.csv", COST_HEADER, cost)
        summary = [("failed_records", len(self.failures))]
        if self._rows("mcmc") and self._rows("npe"):
            summary += [("speedup", _fmt(self.speedup)), ("break_even_sim_calls", self.break_even),
                        ("break_even_wall_time", self.break_even_wall)]
        write("summary.csv", SUMMARY_HEADER, summary)
        scatter = []
        for sc in self.scenarios:
            truth = sc.truth()
            mc = {r["realization"]: r for r in self._rows("mcmc", sc.name)}
            sb = {r["realization"]: r for r in self._rows("npe", sc.name)}
            for i in sorted(set(mc) & set(sb)):
                for p in RELEVANT_PARAMS[sc.mode]:
                    scatter.append([sc.name, i, p, _fmt(mc[i][f"median_{p}"]), _fmt(sb[i][f"median_{p}"]),
                                    _fmt(truth[p])])
        write("medians_scatter.csv", SCATTER_HEADER, scatter)
        if self.failures:
            write("failures.csv", ("scenario", "realization", "engine", "error"), self.failures)
        return paths


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return "" if v is None else v


def _record(sc: ScenarioSpec, i: int, ens: PosteriorEnsemble, reference: PosteriorEnsemble | None) -> dict:
    rep = score_posterior(ens, sc.mode, sc.truth(), reference=reference)
    pred = ens.predicted_mode
    row = {
        "scenario": sc.name, "realization": i, "engine": ens.engine, "true_mode": sc.mode.label,
        "predicted_mode": pred.label, "correct": pred == sc.mode, "wall_time": ens.wall_time,
        "simulator_calls": ens.simulator_call_count, "transitions": ens.info.get("transitions", 0),
    }
    for p in PARAM_NAMES:
        row[f"median_{p}"] = ens.median(p)
        row[f"crps_{p}"] = rep.crps.get(p)
        row[f"cover50_{p}"] = rep.coverage[0.5].get(p)
        row[f"cover90_{p}"] = rep.coverage[0.9].get(p)
        row[f"w1_{p}"] = rep.wasserstein.get(p)
    return row


def run_benchmark(scenarios, cond: OperatingConditions, spec: PriorSpec, posterior: TrainedPosterior | None = None,
                  chains: ChainConfig = ChainConfig(), *, engines=ENGINES, n_realizations: int | None = None,
                  n_samples: int = 1000, seed: int = 0, training_sims: int | None = None,
                  training_wall_time: float | None = None, scenario_indices=None) -> BenchmarkReport:
    """Run each requested engine on every realization of every scenario.

    Both engines see the same record.  When both run, the NPE row also carries
    the normalized 1-D Wasserstein distance to the MCMC posterior.  Engine
    errors are logged and counted, and the suite carries on.

    ``scenario_indices`` pins each scenario's index in the seed derivation
    (defaults to its position), so a subset reproduces the same records.
    """
    engines = tuple(engines)
    if "npe" in engines and posterior is None:
        raise ValueError("the npe engine needs a trained posterior")
    if posterior is not None:
        training_sims = posterior.meta.get("simulation_budget", 0) if training_sims is None else training_sims
        training_wall_time = posterior.meta.get("wall_time", 0.0) if training_wall_time is None else training_wall_time
    report = BenchmarkReport(scenarios=tuple(scenarios), training_sims=training_sims or 0,
                             training_wall_time=training_wall_time or 0.0)
    indices = range(len(report.scenarios)) if scenario_indices is None else scenario_indices
    for idx, sc in zip(indices, report.scenarios):
        n = sc.n_realizations if n_realizations is None else n_realizations
        for i, (_, obs) in enumerate(realizations(sc, cond, seed, idx, n, spec)):
            results = {}
            for eng in engines:
                try:
                    if eng == "mcmc":
                        cfg = ChainConfig(**{**chains.__dict__, "rng_seed": engine_seed(seed, idx, i, eng)})
                        results[eng] = run_mcmc(obs, cond, spec, cfg)
                    else:
                        results[eng] = infer(posterior, obs, n_samples, engine_seed(seed, idx, i, eng))
                except Exception as exc:  # keep the suite going
                    log.warning("scenario %s realization %d engine %s failed: %s", sc.name, i, eng, exc)
                    report.failures.append((sc.name, i, eng, f"{type(exc).__name__}: {exc}"))
            for eng, ens in results.items():
                ref = results.get("mcmc") if eng == "npe" else None
                report.records.append(_record(sc, i, ens, ref))
        log.info("scenario %s done: %s", sc.name,
                 ", ".join(f"{e} acc {report.accuracy(sc.name, e):.3f}" for e in engines))
    return report


@dataclass
class PredictiveBands:
    """Pointwise quantiles of the fouling factor and leak fraction over time."""

    quantiles: tuple
    fouling: np.ndarray
    leak: np.ndarray
    from_latents: bool

    def contains(self, kind: str, truth, lo: int = 0, hi: int = -1) -> np.ndarray:
        band = getattr(self, kind)
        truth = np.asarray(truth)
        return (band[lo] <= truth) & (truth <= band[hi])

    def to_csv(self, path, truth=None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tags = [f"q{q:g}" for q in self.quantiles]
        header = ["t"] + [f"fouling_{t}" for t in tags] + [f"leak_{t}" for t in tags]
        if truth is not None:
            header += ["fouling_true", "leak_true"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k in range(self.fouling.shape[1]):
                row = [k + 1] + [_fmt(v) for v in self.fouling[:, k]] + [_fmt(v) for v in self.leak[:, k]]
                if truth is not None:
                    row += [_fmt(truth[0][k]), _fmt(truth[1][k])]
                w.writerow(row)
        return path


def predictive_bands(ens: PosteriorEnsemble, horizon: int, quantiles=PPC_QUANTILES, n_draws: int = 1000,
                     seed=0, k_gate=K_GATE, k_relax=K_RELAX) -> PredictiveBands:
    """Quantile bands of R(t) and L(t) under the posterior.

    With stored latent draws (MCMC ``keep_latents``) the bands describe the
    inferred trajectory itself; otherwise fresh latents are drawn from their
    prior, which gives the posterior predictive spread.
    """
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(ens), size=min(n_draws, len(ens)), replace=False)
    p = {k: v[idx] for k, v in ens.params.items()}
    mode = ens.mode[idx]
    if ens.latents is not None:
        u, e_j, e_l = (ens.latents[idx, j] for j in range(3))
    else:
        u = rng.random((len(idx), horizon))
        e_j = rng.standard_exponential((len(idx), horizon))
        e_l = rng.standard_exponential((len(idx), horizon))
    r, _, _ = fouling_from_latents(p["tau"], p["beta_f"], p["lam"], u, e_j, GATE_F[mode], k_gate, k_relax)
    leak, _ = leak_from_latents(p["tau"], p["beta_l"], e_l, GATE_L[mode], k_gate)
    q = np.asarray(quantiles)
    return PredictiveBands(tuple(quantiles), np.quantile(r, q, axis=0), np.quantile(leak, q, axis=0),
                           ens.latents is not None)
