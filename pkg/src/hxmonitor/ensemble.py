"""Posterior sample container shared by both inference engines.

Samples files are CSV with the pinned header ``chain,mode,tau,beta_f,beta_l,lam``
(mode as its lowercase label), plus a JSON sidecar with run metadata.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .degradation import FailureMode
from .model import PARAM_NAMES

SAMPLES_HEADER = ("chain", "mode") + PARAM_NAMES


@dataclass
class PosteriorEnsemble:
    mode: np.ndarray
    params: dict
    chain: np.ndarray
    engine: str
    wall_time: float = 0.0
    simulator_call_count: int = 0
    mode_probs: np.ndarray | None = None
    diagnostics: dict | None = None
    latents: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mode = np.asarray(self.mode, dtype=int)
        self.chain = np.asarray(self.chain, dtype=int)
        n = len(self.mode)
        for name in PARAM_NAMES:
            self.params[name] = np.asarray(self.params[name], dtype=float)
            if len(self.params[name]) != n:
                raise ValueError(f"parameter {name} has {len(self.params[name])} draws, expected {n}")

    def __len__(self) -> int:
        return len(self.mode)

    @property
    def mode_counts(self) -> np.ndarray:
        return np.bincount(self.mode, minlength=4)

    @property
    def predicted_mode(self) -> FailureMode:
        """Classifier argmax when available, else the most frequent sampled label."""
        if self.mode_probs is not None:
            return FailureMode(int(np.argmax(self.mode_probs)))
        return FailureMode(int(np.argmax(self.mode_counts)))

    def median(self, name: str) -> float:
        return float(np.median(self.params[name]))

    def to_csv(self, path, metadata: dict | None = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SAMPLES_HEADER)
            for i in range(len(self)):
                w.writerow([int(self.chain[i]), FailureMode(int(self.mode[i])).label]
                           + [format(self.params[p][i], ".17g") for p in PARAM_NAMES])
        meta = {
            "engine": self.engine,
            "wall_time": self.wall_time,
            "simulator_call_count": self.simulator_call_count,
            "mode_counts": self.mode_counts.tolist(),
            "predicted_mode": self.predicted_mode.label,
            "mode_probs": None if self.mode_probs is None else np.asarray(self.mode_probs).tolist(),
            "diagnostics": self.diagnostics,
            "info": self.info,
        }
        meta.update(metadata or {})
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=float) + "\n")
        return path

    @classmethod
    def from_csv(cls, path) -> "PosteriorEnsemble":
        path = Path(path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if tuple(rows[0]) != SAMPLES_HEADER:
            raise ValueError(f"{path}: unexpected header {rows[0]}")
        body = rows[1:]
        meta = json.loads(path.with_suffix(".json").read_text()) if path.with_suffix(".json").exists() else {}
        return cls(
            mode=[FailureMode.parse(r[1]) for r in body],
            params={p: [float(r[2 + i]) for r in body] for i, p in enumerate(PARAM_NAMES)},
            chain=[int(r[0]) for r in body],
            engine=meta.get("engine", "unknown"),
            wall_time=meta.get("wall_time", 0.0),
            simulator_call_count=meta.get("simulator_call_count", 0),
            mode_probs=None if meta.get("mode_probs") is None else np.asarray(meta["mode_probs"]),
            diagnostics=meta.get("diagnostics"),
            info=meta.get("info", {}),
        )
