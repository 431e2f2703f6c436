"""Training-set generation, joint training, checkpoints and amortized inference."""

from __future__ import annotations

import copy
import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..degradation import FailureMode
from ..ensemble import PosteriorEnsemble
from ..model import PARAM_NAMES, PriorSpec, sample_prior_arrays, transform_params, untransform_params
from ..observation import ObservationSeries, OperatingConditions, simulate_batch
from ..summaries import N_SUMMARIES, SUMMARY_NAMES, summarize
from .flow import DTYPE, ModeClassifier, SplineFlow

CHECKPOINT_FORMAT = "hxmonitor-npe/1"
THETA_COLUMNS = tuple(f"x_{p}" for p in PARAM_NAMES)
TRAINING_HEADER = SUMMARY_NAMES + THETA_COLUMNS + ("label",)
_SIM_CHUNK = 2000


class TrainingDivergenceError(RuntimeError):
    """The training loss became non-finite."""


@dataclass
class Standardizer:
    """Per-column affine standardization of summaries and transformed parameters."""

    s_mean: np.ndarray
    s_std: np.ndarray
    x_mean: np.ndarray
    x_std: np.ndarray

    @classmethod
    def fit(cls, summaries, theta_t) -> "Standardizer":
        def stats(a):
            m, s = a.mean(axis=0), a.std(axis=0)
            # constant columns carry no information; leave them centered but unscaled
            return m, np.where(s > 0, s, 1.0)

        sm, ss = stats(np.asarray(summaries, dtype=float))
        xm, xs = stats(np.asarray(theta_t, dtype=float))
        return cls(sm, ss, xm, xs)

    def summaries(self, s):
        return (np.asarray(s, dtype=float) - self.s_mean) / self.s_std

    def theta(self, x):
        return (np.asarray(x, dtype=float) - self.x_mean) / self.x_std

    def theta_inverse(self, z):
        return np.asarray(z, dtype=float) * self.x_std + self.x_mean

    @property
    def log_det(self) -> float:
        """log |d standardized / d theta_t|, constant over the parameter space."""
        return float(-np.sum(np.log(self.x_std)))

    def to_dict(self) -> dict:
        return {k: np.asarray(v).tolist() for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d) -> "Standardizer":
        return cls(**{k: np.asarray(v, dtype=float) for k, v in d.items()})


@dataclass
class TrainingSet:
    theta_t: np.ndarray
    labels: np.ndarray
    summaries: np.ndarray
    train_mask: np.ndarray
    standardizer: Standardizer
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.labels)
        if self.theta_t.shape != (n, 4) or self.summaries.shape != (n, N_SUMMARIES) or self.train_mask.shape != (n,):
            raise ValueError("training-set arrays have inconsistent shapes")
        if not (np.all(np.isfinite(self.theta_t)) and np.all(np.isfinite(self.summaries))):
            raise ValueError("training set contains non-finite entries")

    def __len__(self) -> int:
        return len(self.labels)

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAINING_HEADER)
            for s, x, y in zip(self.summaries, self.theta_t, self.labels):
                w.writerow([format(v, ".17g") for v in s] + [format(v, ".17g") for v in x] + [int(y)])
        meta = dict(self.meta, standardizer=self.standardizer.to_dict(),
                    validation_rows=np.flatnonzero(~self.train_mask).tolist())
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def from_csv(cls, path) -> "TrainingSet":
        path = Path(path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if tuple(rows[0]) != TRAINING_HEADER:
            raise ValueError(f"{path}: unexpected training-set header")
        body = np.array([[float(v) for v in r] for r in rows[1:]])
        meta = json.loads(path.with_suffix(".json").read_text())
        mask = np.ones(len(body), dtype=bool)
        mask[meta.pop("validation_rows")] = False
        std = Standardizer.from_dict(meta.pop("standardizer"))
        n_s = N_SUMMARIES
        return cls(body[:, n_s:n_s + 4], body[:, -1].astype(int), body[:, :n_s], mask, std, meta)


def generate_training_set(n: int, spec: PriorSpec, cond: OperatingConditions, seed=0,
                          val_fraction: float = 0.1) -> TrainingSet:
    """Simulate ``n`` (theta, record) pairs from the prior and reduce them to summaries.

    The standardizer is fitted on the training split, which is a seeded random
    ``1 - val_fraction`` share of the rows.
    """
    if n < 100:
        raise ValueError("training sets need at least 100 simulations")
    if spec.horizon != cond.horizon:
        raise ValueError("prior and operating conditions disagree on the horizon")
    rng = np.random.default_rng(seed)
    d = sample_prior_arrays(spec, rng, n)
    summaries = np.empty((n, N_SUMMARIES))
    for lo in range(0, n, _SIM_CHUNK):
        sl = slice(lo, min(n, lo + _SIM_CHUNK))
        y = simulate_batch(d["mode"][sl], d["tau"][sl], d["beta_f"][sl], d["beta_l"][sl], d["lam"][sl], cond, rng)
        summaries[sl] = summarize(y)
    theta_t = transform_params(d["tau"], d["beta_f"], d["beta_l"], d["lam"], cond.horizon)
    mask = np.ones(n, dtype=bool)
    mask[rng.permutation(n)[: int(round(val_fraction * n))]] = False
    std = Standardizer.fit(summaries[mask], theta_t[mask])
    meta = {"n": n, "seed": seed, "val_fraction": val_fraction, "horizon": cond.horizon}
    return TrainingSet(theta_t, d["mode"].astype(int), summaries, mask, std, meta)


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 5e-4
    batch_size: int = 256
    patience: int = 20
    max_epochs: int = 1000
    grad_clip: float = 5.0
    early_stopping: bool = True
    seed: int = 0
    n_layers: int = 5
    n_hidden: int = 50
    n_bins: int = 8
    tail_bound: float = 5.0


def joint_loss(flow, classifier, x, s, labels):
    """Mean flow negative log-density plus mean classifier cross-entropy."""
    nll = -flow.log_prob(x, s).mean()
    ce = torch.nn.functional.cross_entropy(classifier(s), labels)
    return nll + ce, nll, ce


@dataclass
class TrainedPosterior:
    flow: SplineFlow
    classifier: ModeClassifier
    standardizer: Standardizer
    horizon: int
    meta: dict = field(default_factory=dict)

    def _context(self, s):
        return torch.as_tensor(self.standardizer.summaries(s), dtype=DTYPE).reshape(-1, N_SUMMARIES)

    def mode_probabilities(self, s) -> np.ndarray:
        with torch.no_grad():
            p = self.classifier.probabilities(self._context(s)).numpy()
        return p[0] if np.ndim(s) == 1 else p

    def log_prob(self, theta_t, s) -> np.ndarray:
        """Log-density of transformed parameters ``theta_t`` given raw summaries ``s``."""
        x = torch.as_tensor(self.standardizer.theta(theta_t), dtype=DTYPE).reshape(-1, 4)
        ctx = self._context(s).expand(x.shape[0], -1)
        with torch.no_grad():
            lp = self.flow.log_prob(x, ctx).numpy()
        return lp + self.standardizer.log_det

    def sample_transformed(self, s, n: int, seed=0) -> np.ndarray:
        gen = torch.Generator().manual_seed(int(seed))
        with torch.no_grad():
            z = self.flow.sample(self._context(s)[0], n, generator=gen).numpy()
        return self.standardizer.theta_inverse(z)

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        arrays = {f"flow/{k}": v.detach().numpy().astype(np.float64) for k, v in self.flow.state_dict().items()
                  if v.dtype != torch.bool}
        arrays.update({f"classifier/{k}": v.detach().numpy().astype(np.float64)
                       for k, v in self.classifier.state_dict().items()})
        header = {
            "format": CHECKPOINT_FORMAT,
            "flow": self.flow.config,
            "classifier": self.classifier.config,
            "standardizer": self.standardizer.to_dict(),
            "horizon": self.horizon,
            "meta": self.meta,
        }
        with open(path, "wb") as fh:
            np.savez(fh, header=np.array(json.dumps(header, sort_keys=True)), **arrays)
        return path

    @classmethod
    def load(cls, path) -> "TrainedPosterior":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"checkpoint {path} not found")
        with np.load(path, allow_pickle=False) as z:
            header = json.loads(str(z["header"]))
            if header.get("format") != CHECKPOINT_FORMAT:
                raise ValueError(f"{path}: unsupported checkpoint format {header.get('format')!r}")
            flow = SplineFlow(**header["flow"])
            classifier = ModeClassifier(**header["classifier"])
            for prefix, module in (("flow/", flow), ("classifier/", classifier)):
                state = module.state_dict()
                for k in state:
                    if state[k].dtype != torch.bool:
                        state[k] = torch.as_tensor(z[prefix + k], dtype=DTYPE)
                module.load_state_dict(state)
        flow.eval()
        classifier.eval()
        return cls(flow, classifier, Standardizer.from_dict(header["standardizer"]), header["horizon"],
                   header["meta"])


def train(ts: TrainingSet, cfg: TrainingConfig = TrainingConfig(), log=None) -> TrainedPosterior:
    """Fit flow and classifier jointly with Adam; return the best-validation weights.

    ``log`` is an optional callable receiving ``(epoch, train_loss, val_loss)``.
    """
    t0 = time.perf_counter()
    std = ts.standardizer
    x_all = torch.as_tensor(std.theta(ts.theta_t), dtype=DTYPE)
    s_all = torch.as_tensor(std.summaries(ts.summaries), dtype=DTYPE)
    y_all = torch.as_tensor(ts.labels, dtype=torch.long)
    tr = torch.as_tensor(np.flatnonzero(ts.train_mask))
    va = torch.as_tensor(np.flatnonzero(~ts.train_mask))
    if len(va) == 0:
        va = tr

    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(cfg.seed)
        flow = SplineFlow(n_layers=cfg.n_layers, n_hidden=cfg.n_hidden, n_bins=cfg.n_bins,
                          tail_bound=cfg.tail_bound)
        classifier = ModeClassifier(n_hidden=cfg.n_hidden)
    params = list(flow.parameters()) + list(classifier.parameters())
    opt = torch.optim.Adam(params, lr=cfg.learning_rate, betas=(0.9, 0.999), eps=1e-8)
    gen = torch.Generator().manual_seed(cfg.seed)

    best = (np.inf, None, 0)
    history = {"train_loss": [], "val_loss": [], "val_flow_nll": [], "val_ce": []}
    stale = 0
    for epoch in range(cfg.max_epochs):
        flow.train()
        classifier.train()
        order = tr[torch.randperm(len(tr), generator=gen)]
        total, count = 0.0, 0
        for i in range(0, len(order), cfg.batch_size):
            idx = order[i: i + cfg.batch_size]
            loss, _, _ = joint_loss(flow, classifier, x_all[idx], s_all[idx], y_all[idx])
            if not torch.isfinite(loss):
                raise TrainingDivergenceError(f"non-finite training loss at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(params, cfg.grad_clip)
            opt.step()
            total += float(loss.detach()) * len(idx)
            count += len(idx)
        flow.eval()
        classifier.eval()
        with torch.no_grad():
            vloss, vnll, vce = (float(v) for v in joint_loss(flow, classifier, x_all[va], s_all[va], y_all[va]))
        if not np.isfinite(vloss):
            raise TrainingDivergenceError(f"non-finite validation loss at epoch {epoch}")
        history["train_loss"].append(total / count)
        history["val_loss"].append(vloss)
        history["val_flow_nll"].append(vnll)
        history["val_ce"].append(vce)
        if log is not None:
            log(epoch, total / count, vloss)
        if vloss < best[0]:
            best = (vloss, (copy.deepcopy(flow.state_dict()), copy.deepcopy(classifier.state_dict())), epoch)
            stale = 0
        else:
            stale += 1
            if cfg.early_stopping and stale >= cfg.patience:
                break

    flow.load_state_dict(best[1][0])
    classifier.load_state_dict(best[1][1])
    flow.eval()
    classifier.eval()
    meta = {
        "epochs": len(history["train_loss"]),
        "best_epoch": best[2],
        "best_val_loss": best[0],
        "final_val_log_prob": -history["val_flow_nll"][best[2]] + std.log_det,
        "wall_time": time.perf_counter() - t0,
        "simulation_budget": len(ts),
        "config": asdict(cfg),
        "history": history,
    }
    return TrainedPosterior(flow, classifier, std, int(ts.meta.get("horizon", 100)), meta)


def infer(tp: TrainedPosterior, obs: ObservationSeries, n_samples: int = 1000, seed=0) -> PosteriorEnsemble:
    """Amortized posterior for one record: no simulator calls, one network pass per head."""
    t0 = time.perf_counter()
    if obs.horizon != tp.horizon:
        raise ValueError(f"record length {obs.horizon} does not match the trained horizon {tp.horizon}")
    s = summarize(obs)
    probs = tp.mode_probabilities(s)
    x = tp.sample_transformed(s, n_samples, seed)
    nat = untransform_params(x, tp.horizon)
    rng = np.random.default_rng(seed)
    modes = rng.choice(4, size=n_samples, p=probs / probs.sum())
    return PosteriorEnsemble(
        mode=modes,
        params=nat,
        chain=np.zeros(n_samples, dtype=int),
        engine="npe",
        wall_time=time.perf_counter() - t0,
        simulator_call_count=0,
        mode_probs=probs,
        info={"predicted_mode": FailureMode(int(np.argmax(probs))).label},
    )
