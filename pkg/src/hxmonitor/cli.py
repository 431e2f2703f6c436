"""Command-line entry point: ``hxmonitor <command> [options]``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .bench import predictive_bands, run_benchmark
from .config import BenchConfig, ConfigError, default_config_text, load_config
from .ensemble import PosteriorEnsemble
from .mcmc import ChainConfig, run_mcmc
from .npe.engine import TrainedPosterior, TrainingSet, generate_training_set, infer, train
from .observation import ObservationSeries, read_sidecar, simulate
from .scenarios import find_scenario, realization_rngs, realizations

log = logging.getLogger("hxmonitor")
MANIFEST = "manifest.json"


class CliError(Exception):
    """A user-facing failure reported as a one-line message."""


class _Run:
    """Resolved configuration, seed and output directory plus the artifacts written so far."""

    def __init__(self, args):
        self.args = args
        self.cfg = load_config(args.config) if args.config else BenchConfig()
        self.seed = self.cfg.seed if args.seed is None else args.seed
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.artifacts = []

    def path(self, *parts) -> Path:
        p = self.out.joinpath(*parts)
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def add(self, path, kind, **extra):
        rel = Path(path).relative_to(self.out).as_posix()
        self.artifacts.append(dict(path=rel, kind=kind, **extra))

    def write_manifest(self, command):
        mpath = self.out / MANIFEST
        manifest = json.loads(mpath.read_text()) if mpath.exists() else {"runs": []}
        manifest["runs"] = [r for r in manifest["runs"] if r.get("command") != command]
        manifest["runs"].append({
            "command": command,
            "seed": self.seed,
            "config": None if self.args.config is None else str(self.args.config),
            "artifacts": self.artifacts,
        })
        mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _scenario_record(run: _Run, name, realization):
    idx, sc = find_scenario(run.cfg.scenarios, name)
    if not 0 <= realization < sc.n_realizations:
        raise CliError(f"realization {realization} out of range for scenario {sc.name}")
    rng = realization_rngs(run.seed, idx, realization + 1)[realization]
    latent, obs = simulate(sc.theta(run.cfg.prior), run.cfg.cond, rng)
    return obs, {"scenario": sc.name, "realization": realization,
                 "truth": [latent.fouling_factor.tolist(), latent.leak_fraction.tolist()]}


def _load_record(run: _Run):
    a = run.args
    if a.record:
        path = Path(a.record)
        if not path.exists():
            raise CliError(f"record file {path} not found")
        obs = ObservationSeries.from_csv(path)
        meta = read_sidecar(path) if path.with_suffix(".json").exists() else {}
        if a.scenario and meta.get("scenario") not in (None, a.scenario):
            raise CliError(f"record {path} belongs to scenario {meta['scenario']!r}, not {a.scenario!r}")
        return obs, meta
    if a.scenario:
        return _scenario_record(run, a.scenario, a.realization)
    raise CliError("give a record file (--record) or a scenario (--scenario)")


def _load_checkpoint(path) -> TrainedPosterior:
    if path is None:
        raise CliError("an NPE checkpoint is required (--checkpoint)")
    p = Path(path)
    if not p.exists():
        raise CliError(f"checkpoint {p} not found")
    return TrainedPosterior.load(p)


def _chains(run: _Run, seed) -> ChainConfig:
    return ChainConfig(**{**run.cfg.chains.__dict__, "rng_seed": seed})


def cmd_gen_data(run: _Run):
    names = run.args.scenario or [s.name for s in run.cfg.scenarios]
    for name in names:
        idx, sc = find_scenario(run.cfg.scenarios, name)
        n = run.args.n or sc.n_realizations
        for i, (latent, obs) in enumerate(realizations(sc, run.cfg.cond, run.seed, idx, n, run.cfg.prior)):
            p = run.path("data", sc.name, f"record_{i:04d}.csv")
            obs.to_csv(p, {"scenario": sc.name, "realization": i, "seed": run.seed,
                           "theta": sc.theta(run.cfg.prior).to_dict(), "conditions": run.cfg.cond.to_dict(),
                           "truth": [latent.fouling_factor.tolist(), latent.leak_fraction.tolist()]})
            run.add(p, "record", scenario=sc.name, realization=i)
        log.info("wrote %d records for %s", n, sc.name)
    if run.args.training_set:
        ts = generate_training_set(run.args.training_set, run.cfg.prior, run.cfg.cond, run.seed)
        p = ts.to_csv(run.path("training_set.csv"))
        run.add(p, "training_set", n=len(ts))


def cmd_train_npe(run: _Run):
    a = run.args
    if a.training_set:
        if not Path(a.training_set).exists():
            raise CliError(f"training set {a.training_set} not found")
        ts = TrainingSet.from_csv(a.training_set)
    else:
        ts = generate_training_set(a.n_train or run.cfg.n_train, run.cfg.prior, run.cfg.cond, run.seed)
    cfg = run.cfg.training.__class__(**{**run.cfg.training.__dict__, "seed": run.seed})
    tp = train(ts, cfg, log=lambda e, tr, va: log.debug("epoch %d train %.4f val %.4f", e, tr, va))
    p = tp.save(run.path("npe_checkpoint.npz"))
    run.add(p, "checkpoint", simulations=len(ts))
    hist = tp.meta["history"]
    hp = run.path("training_history.csv")
    with open(hp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("epoch", "train_loss", "val_loss", "val_flow_nll", "val_ce"))
        for e in range(len(hist["train_loss"])):
            w.writerow([e] + [format(hist[k][e], ".10g") for k in ("train_loss", "val_loss", "val_flow_nll", "val_ce")])
    run.add(hp, "training_history")
    print(f"trained on {len(ts)} simulations in {tp.meta['wall_time']:.1f} s "
          f"({tp.meta['epochs']} epochs, best {tp.meta['best_epoch']})")


def _write_ensemble(run: _Run, ens: PosteriorEnsemble, name, meta):
    p = ens.to_csv(run.path(name), {"record": meta.get("scenario"), "realization": meta.get("realization")})
    run.add(p, "samples", engine=ens.engine)
    probs = "" if ens.mode_probs is None else " probs " + " ".join(f"{v:.3f}" for v in ens.mode_probs)
    print(f"{ens.engine}: predicted {ens.predicted_mode.label}{probs}; "
          + ", ".join(f"{k} {ens.median(k):.4g}" for k in ens.params) + f"; {ens.wall_time:.3f} s")


def cmd_run_mcmc(run: _Run):
    obs, meta = _load_record(run)
    ens = run_mcmc(obs, run.cfg.cond, run.cfg.prior, _chains(run, run.seed))
    _write_ensemble(run, ens, "mcmc_samples.csv", meta)


def cmd_infer(run: _Run):
    tp = _load_checkpoint(run.args.checkpoint)
    obs, meta = _load_record(run)
    ens = infer(tp, obs, run.cfg.n_posterior_samples, run.seed)
    _write_ensemble(run, ens, "npe_samples.csv", meta)


def cmd_bench(run: _Run):
    a = run.args
    engines = tuple(e.strip() for e in a.engines.split(","))
    bad = set(engines) - {"mcmc", "npe"}
    if bad:
        raise CliError(f"unknown engine(s): {', '.join(sorted(bad))}")
    picked = [find_scenario(run.cfg.scenarios, s) for s in (a.scenario or [s.name for s in run.cfg.scenarios])]
    tp = None
    if "npe" in engines:
        if a.checkpoint:
            tp = _load_checkpoint(a.checkpoint)
        else:
            ts = generate_training_set(run.cfg.n_train, run.cfg.prior, run.cfg.cond, run.seed)
            tp = train(ts, run.cfg.training.__class__(**{**run.cfg.training.__dict__, "seed": run.seed}))
            run.add(tp.save(run.path("npe_checkpoint.npz")), "checkpoint", simulations=len(ts))
    report = run_benchmark([sc for _, sc in picked], run.cfg.cond, run.cfg.prior, tp, run.cfg.chains,
                           engines=engines, n_realizations=a.n or run.cfg.n_realizations,
                           n_samples=run.cfg.n_posterior_samples, seed=run.seed,
                           scenario_indices=[i for i, _ in picked])
    for name, p in report.to_csv(run.path("bench")).items():
        run.add(p, "report")
    print(f"{'scenario':<18}{'failure':<10}{'MCMC':>8}{'SBI':>8}")
    for name, mode, acc_m, acc_s in report.accuracy_table():
        print(f"{name:<18}{mode:<10}{_pct(acc_m):>8}{_pct(acc_s):>8}")
    if "mcmc" in engines and "npe" in engines:
        print(f"speedup {report.speedup:.1f}x; break-even {report.break_even} calls "
              f"(simulator runs), {report.break_even_wall} calls (wall time)")
    if report.failures:
        print(f"{len(report.failures)} engine runs failed; see bench/failures.csv", file=sys.stderr)
    if a.figures:
        from . import plotting

        run.add(plotting.plot_accuracy(report, run.path("figures", "accuracy.png")), "figure")
        if "mcmc" in engines and "npe" in engines:
            run.add(plotting.plot_median_scatter(report, run.path("figures", "medians.png")), "figure")


def _pct(v):
    return "-" if np.isnan(v) else f"{100 * v:.1f}%"


def cmd_ppc(run: _Run):
    a = run.args
    obs, meta = _load_record(run)
    if a.engine == "mcmc":
        ens = run_mcmc(obs, run.cfg.cond, run.cfg.prior, _chains(run, run.seed), keep_latents=True)
    else:
        ens = infer(_load_checkpoint(a.checkpoint), obs, run.cfg.n_posterior_samples, run.seed)
    bands = predictive_bands(ens, obs.horizon, seed=run.seed)
    truth = meta.get("truth")
    p = bands.to_csv(run.path("ppc_bands.csv"), truth)
    run.add(p, "ppc_bands", engine=a.engine)
    if truth is not None:
        frac = float(np.mean(bands.contains("fouling", truth[0])))
        print(f"fouling band contains the true trajectory at {100 * frac:.1f}% of timesteps")
    if a.figures:
        from . import plotting

        run.add(plotting.plot_bands(bands, run.path("figures", "ppc.png"), truth), "figure")


def cmd_config(run: _Run):
    p = run.path("hxmonitor.cfg")
    p.write_text(default_config_text())
    run.add(p, "config")
    print(p)


COMMANDS = {
    "gen-data": (cmd_gen_data, "write scenario realizations as record files"),
    "train-npe": (cmd_train_npe, "train the amortized posterior and save a checkpoint"),
    "run-mcmc": (cmd_run_mcmc, "sample one record's posterior with MCMC"),
    "infer": (cmd_infer, "amortized inference for one record"),
    "bench": (cmd_bench, "paired engine evaluation over the scenario table"),
    "ppc": (cmd_ppc, "posterior predictive trajectory bands for one record"),
    "config": (cmd_config, "write the default configuration file"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="INI configuration file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--figures", action="store_true", default=argparse.SUPPRESS,
                        help="also render PNG figures (needs matplotlib)")
    common.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="hxmonitor", parents=[common],
                                     description="Heat-exchanger failure diagnosis with MCMC and NPE.")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {name: sub.add_parser(name, parents=[common], help=text) for name, (_, text) in COMMANDS.items()}

    def record_args(p):
        p.add_argument("--record", help="record CSV file")
        p.add_argument("--scenario", help="simulate a realization of this scenario instead")
        p.add_argument("--realization", type=int, default=0)

    subs["gen-data"].add_argument("--scenario", action="append", help="scenario name (repeatable)")
    subs["gen-data"].add_argument("--n", type=int, help="realizations per scenario")
    subs["gen-data"].add_argument("--training-set", type=int, metavar="N", help="also write N training simulations")
    subs["train-npe"].add_argument("--training-set", help="training-set CSV written by gen-data")
    subs["train-npe"].add_argument("--n-train", type=int, help="simulation budget when generating")
    record_args(subs["run-mcmc"])
    record_args(subs["infer"])
    subs["infer"].add_argument("--checkpoint", help="NPE checkpoint file")
    subs["bench"].add_argument("--checkpoint", help="NPE checkpoint (trained on the fly if absent)")
    subs["bench"].add_argument("--scenario", action="append", help="scenario name (repeatable)")
    subs["bench"].add_argument("--n", type=int, help="realizations per scenario")
    subs["bench"].add_argument("--engines", default="mcmc,npe")
    record_args(subs["ppc"])
    subs["ppc"].add_argument("--engine", choices=("mcmc", "npe"), default="mcmc")
    subs["ppc"].add_argument("--checkpoint", help="NPE checkpoint (for --engine npe)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for key, default in (("config", None), ("seed", None), ("out", "hxmonitor-out"), ("figures", False),
                         ("verbose", 0)):
        if not hasattr(args, key):
            setattr(args, key, default)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        run = _Run(args)
        t0 = time.perf_counter()
        COMMANDS[args.command][0](run)
        run.write_manifest(args.command)
        log.info("%s finished in %.1f s", args.command, time.perf_counter() - t0)
    except (CliError, ConfigError, FileNotFoundError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"hxmonitor {args.command}: error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
