"""INI configuration: operating conditions, priors, budgets and the scenario table.

Every key is optional; missing keys take the library defaults.  Scenarios
live in ``[scenario <name>]`` sections, and when any are present they replace
the default table in the order written.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .mcmc import ChainConfig
from .model import PriorSpec
from .npe.engine import TrainingConfig
from .observation import OperatingConditions
from .scenarios import DEFAULT_SCENARIOS, ScenarioSpec
from .thermal import FluidStream


class ConfigError(ValueError):
    """The configuration file could not be parsed or holds invalid values."""


@dataclass
class BenchConfig:
    cond: OperatingConditions = field(default_factory=OperatingConditions)
    prior: PriorSpec = field(default_factory=PriorSpec)
    scenarios: tuple = DEFAULT_SCENARIOS
    training: TrainingConfig = field(default_factory=TrainingConfig)
    n_train: int = 5000
    n_posterior_samples: int = 1000
    chains: ChainConfig = field(default_factory=ChainConfig)
    n_realizations: int | None = None
    seed: int = 0


_STREAMS = ("hot", "cold")
_STREAM_KEYS = {"mass_flow": "flow", "specific_heat": "cp", "inlet_temp": "inlet_temp"}


def _typed(section, key, kind):
    raw = section[key]
    try:
        if kind is bool:
            return section.getboolean(key)
        if kind is tuple:
            return tuple(float(v) for v in raw.replace(",", " ").split())
        return kind(raw)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is not a valid {kind.__name__}") from None


def _update(obj, section, skip=()):
    """Replace dataclass fields of ``obj`` with the keys present in ``section``."""
    known = {f.name: f for f in fields(obj)}
    changes = {}
    for key in section:
        if key in skip:
            continue
        if key not in known:
            raise ConfigError(f"[{section.name}] unknown key {key!r}")
        current = getattr(obj, key)
        kind = type(current) if current is not None else float
        changes[key] = _typed(section, key, kind)
    try:
        return replace(obj, **changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section.name}] {exc}") from None


def _conditions(section, base: OperatingConditions) -> OperatingConditions:
    streams = {}
    for side in _STREAMS:
        cur = getattr(base, f"{side}_inlet")
        vals = {attr: _typed(section, f"{side}_{key}", float) if f"{side}_{key}" in section else getattr(cur, attr)
                for attr, key in _STREAM_KEYS.items()}
        try:
            streams[f"{side}_inlet"] = FluidStream(**vals)
        except ValueError as exc:
            raise ConfigError(f"[conditions] {exc}") from None
    skip = {f"{side}_{key}" for side in _STREAMS for key in _STREAM_KEYS.values()}
    return replace(_update(base, section, skip), **streams)


def _scenario(name, section) -> ScenarioSpec:
    vals = {}
    for key in section:
        if key == "mode":
            vals[key] = section[key]
        elif key == "n_realizations":
            vals[key] = _typed(section, key, int)
        elif key in ("tau", "beta_f", "beta_l", "lam"):
            vals[key] = _typed(section, key, float)
        else:
            raise ConfigError(f"[scenario {name}] unknown key {key!r}")
    if "mode" not in vals or "tau" not in vals:
        raise ConfigError(f"[scenario {name}] needs at least mode and tau")
    try:
        return ScenarioSpec(name, **vals)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str, source: str = "<string>") -> BenchConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    cfg = BenchConfig()
    known = {"conditions", "prior", "npe", "mcmc", "bench"}
    scenarios = []
    for name in cp.sections():
        sec = cp[name]
        if name == "conditions":
            cfg.cond = _conditions(sec, cfg.cond)
        elif name == "prior":
            cfg.prior = _update(cfg.prior, sec)
        elif name == "npe":
            local = {k: sec[k] for k in ("n_train", "n_posterior_samples") if k in sec}
            cfg.training = _update(cfg.training, sec, skip=local)
            for k in local:
                setattr(cfg, k, _typed(sec, k, int))
        elif name == "mcmc":
            cfg.chains = _update(cfg.chains, sec)
        elif name == "bench":
            for key in sec:
                if key not in ("n_realizations", "seed"):
                    raise ConfigError(f"[bench] unknown key {key!r}")
                setattr(cfg, key, _typed(sec, key, int))
        elif name.startswith("scenario "):
            scenarios.append(_scenario(name.split(None, 1)[1].strip(), sec))
        elif name not in known:
            raise ConfigError(f"{source}: unknown section [{name}]")
    if scenarios:
        names = [s.name for s in scenarios]
        if len(set(names)) != len(names):
            raise ConfigError(f"{source}: duplicate scenario names")
        cfg.scenarios = tuple(scenarios)
    if cfg.prior.horizon != cfg.cond.horizon:
        raise ConfigError(f"{source}: [prior] horizon {cfg.prior.horizon} differs from "
                          f"[conditions] horizon {cfg.cond.horizon}")
    return cfg


def load_config(path) -> BenchConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    return parse_config(path.read_text(), str(path))


def default_config_text() -> str:
    """The built-in configuration written out as an editable INI file."""
    cfg = BenchConfig()
    c = cfg.cond
    lines = ["[conditions]"]
    for side in _STREAMS:
        st = getattr(c, f"{side}_inlet")
        lines += [f"{side}_{key} = {getattr(st, attr)}" for attr, key in _STREAM_KEYS.items()]
    lines += [f"ua_clean = {c.ua_clean}", f"horizon = {c.horizon}", f"noise_temp = {c.noise_temp}",
              f"noise_flow = {c.noise_flow}", "", "[prior]"]
    p = cfg.prior
    lines.append("mode_probs = " + ", ".join(str(v) for v in p.mode_probs))
    lines += [f"{f.name} = {getattr(p, f.name)}" for f in fields(p) if f.name != "mode_probs"]
    lines += ["", "[npe]", f"n_train = {cfg.n_train}", f"n_posterior_samples = {cfg.n_posterior_samples}"]
    lines += [f"{f.name} = {getattr(cfg.training, f.name)}" for f in fields(cfg.training) if f.name != "seed"]
    lines += ["", "[mcmc]"]
    lines += [f"{f.name} = {getattr(cfg.chains, f.name)}" for f in fields(cfg.chains) if f.name != "rng_seed"]
    lines += ["", "[bench]", f"seed = {cfg.seed}"]
    for sc in cfg.scenarios:
        lines += ["", f"[scenario {sc.name}]", f"mode = {sc.mode.label}", f"tau = {sc.tau}"]
        lines += [f"{k} = {getattr(sc, k)}" for k in ("beta_f", "beta_l", "lam") if getattr(sc, k) is not None]
        lines.append(f"n_realizations = {sc.n_realizations}")
    return "\n".join(lines) + "\n"
