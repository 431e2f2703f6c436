"""Forward simulator: latent degradation -> noisy six-channel sensor record.

Each timestep is an independent steady state (no thermal inertia).  The
inlet channels are noisy readings of constant true inlets; the hot outlet
flow reports the leak-reduced flow that also sets ``C_hot``.

Record files are a CSV table (``t`` plus the six channels, one row per
timestep, ``%.17g`` floats) and a JSON sidecar with the same stem holding
theta, seed and operating conditions.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .degradation import (
    GATE_F,
    GATE_L,
    K_GATE,
    K_RELAX,
    DegradationParams,
    FailureMode,
    LatentTrajectory,
    draw_latents,
    effective_hot_flow,
    effective_ua,
    fouling_from_latents,
    latent_trajectory,
    leak_from_latents,
)
from .thermal import FluidStream, solve_counterflow

CHANNELS = ("t_hot_in", "t_hot_out", "t_cold_in", "t_cold_out", "m_hot_in", "m_hot_out")
TEMP_CHANNELS = (0, 1, 2, 3)
FLOW_CHANNELS = (4, 5)
FORMAT_TAG = "hxmonitor-record/1"


@dataclass(frozen=True)
class OperatingConditions:
    hot_inlet: FluidStream = field(default_factory=lambda: FluidStream(1.0, 4184.0, 363.15))
    cold_inlet: FluidStream = field(default_factory=lambda: FluidStream(1.0, 4184.0, 293.15))
    ua_clean: float = 5000.0
    horizon: int = 100
    noise_temp: float = 0.5
    noise_flow: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.horizon < 2:
            raise ValueError("horizon must be >= 2")
        if self.noise_temp < 0 or self.noise_flow < 0:
            raise ValueError("noise levels must be >= 0")
        if not self.ua_clean > 0:
            raise ValueError("ua_clean must be > 0")

    @property
    def noise_sigmas(self) -> np.ndarray:
        """Per-channel noise standard deviations, shape (6,)."""
        return np.array([self.noise_temp] * 4 + [self.noise_flow] * 2)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "OperatingConditions":
        d = dict(d)
        d["hot_inlet"] = FluidStream(**d["hot_inlet"])
        d["cold_inlet"] = FluidStream(**d["cold_inlet"])
        return cls(**d)


@dataclass(frozen=True)
class DegradationTheta:
    mode: FailureMode
    params: DegradationParams

    def to_dict(self) -> dict:
        return {"mode": self.mode.label, "tau": self.params.tau, "beta_f": self.params.beta_f,
                "beta_l": self.params.beta_l, "lam": self.params.lam,
                "k_gate": self.params.k_gate, "k_relax": self.params.k_relax}

    @classmethod
    def from_dict(cls, d: dict) -> "DegradationTheta":
        d = dict(d)
        mode = FailureMode.parse(d.pop("mode"))
        return cls(mode, DegradationParams(**d))


@dataclass
class ObservationSeries:
    t_hot_in: np.ndarray
    t_hot_out: np.ndarray
    t_cold_in: np.ndarray
    t_cold_out: np.ndarray
    m_hot_in: np.ndarray
    m_hot_out: np.ndarray

    def __post_init__(self):
        lengths = {len(np.asarray(getattr(self, c))) for c in CHANNELS}
        if len(lengths) != 1:
            raise ValueError(f"channel lengths differ: {sorted(lengths)}")
        for c in CHANNELS:
            arr = np.asarray(getattr(self, c), dtype=float)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"channel {c} has non-finite values")
            setattr(self, c, arr)

    @property
    def horizon(self) -> int:
        return len(self.t_hot_in)

    def to_array(self) -> np.ndarray:
        """Stack channels into shape (6, T) in ``CHANNELS`` order."""
        return np.stack([getattr(self, c) for c in CHANNELS])

    @classmethod
    def from_array(cls, arr) -> "ObservationSeries":
        arr = np.asarray(arr, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != 6:
            raise ValueError(f"expected shape (6, T), got {arr.shape}")
        return cls(*arr)

    def to_csv(self, path, metadata: dict | None = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        arr = self.to_array()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t",) + CHANNELS)
            for i in range(arr.shape[1]):
                w.writerow([i + 1] + [format(v, ".17g") for v in arr[:, i]])
        meta = {"format": FORMAT_TAG}
        meta.update(metadata or {})
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def from_csv(cls, path) -> "ObservationSeries":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if tuple(header[1:]) != CHANNELS:
            raise ValueError(f"{path}: unexpected header {header}")
        arr = np.array([[float(v) for v in row[1:]] for row in body]).T
        return cls.from_array(arr)


def read_sidecar(path) -> dict:
    return json.loads(Path(path).with_suffix(".json").read_text())


def forward_channels(r, leak, cond: OperatingConditions) -> np.ndarray:
    """Noise-free channels, shape ``r.shape[:-1] + (6, T)``, for given R(t), L(t)."""
    hot, cold = cond.hot_inlet, cond.cold_inlet
    ua = effective_ua(cond.ua_clean, r)
    m_hot = effective_hot_flow(hot.mass_flow, leak)
    c_hot = m_hot * hot.specific_heat
    _, t_hot_out, t_cold_out = solve_counterflow(c_hot, cold.capacity_rate, ua,
                                                 hot.inlet_temp, cold.inlet_temp)
    full = np.broadcast_to
    shape = np.shape(t_hot_out)
    return np.stack([
        full(hot.inlet_temp, shape), t_hot_out,
        full(cold.inlet_temp, shape), t_cold_out,
        full(hot.mass_flow, shape), m_hot,
    ], axis=-2)


def noise_free_batch(modes, tau, beta_f, beta_l, lam, u, e_j, e_l, cond: OperatingConditions,
                     k_gate=K_GATE, k_relax=K_RELAX):
    """Vectorized noise-free simulation; returns ``(channels, R, L)``.

    ``modes`` holds integer labels 0..3 of batch shape ``B``; latents have
    shape ``B + (T,)``.
    """
    modes = np.asarray(modes, dtype=int)
    r, _, _ = fouling_from_latents(tau, beta_f, lam, u, e_j, GATE_F[modes], k_gate, k_relax)
    leak, _ = leak_from_latents(tau, beta_l, e_l, GATE_L[modes], k_gate)
    return forward_channels(r, leak, cond), r, leak


def _add_noise(channels, cond: OperatingConditions, rng: np.random.Generator):
    noise = rng.standard_normal(channels.shape) * cond.noise_sigmas[:, None]
    return channels + noise


def simulate(theta: DegradationTheta, cond: OperatingConditions, rng: np.random.Generator,
             noise: bool = True):
    """Draw one latent trajectory and its noisy sensor record.

    Random draws are consumed in a fixed order (uniforms, jump sizes, leak
    increments, then channel noise) so a seed pins the whole record.
    Returns ``(LatentTrajectory, ObservationSeries)``.
    """
    T = cond.horizon
    u, e_j, e_l = draw_latents(rng, T)
    latent = latent_trajectory(theta.params, theta.mode, u, e_j, e_l)
    clean = forward_channels(latent.fouling_factor, latent.leak_fraction, cond)
    obs = _add_noise(clean, cond, rng) if noise else clean
    return latent, ObservationSeries.from_array(obs)


def simulate_batch(modes, tau, beta_f, beta_l, lam, cond: OperatingConditions,
                   rng: np.random.Generator, k_gate=K_GATE, k_relax=K_RELAX):
    """Simulate ``len(modes)`` independent records; returns noisy channels (B, 6, T)."""
    modes = np.asarray(modes, dtype=int)
    u, e_j, e_l = draw_latents(rng, cond.horizon, modes.shape)
    clean, _, _ = noise_free_batch(modes, tau, beta_f, beta_l, lam, u, e_j, e_l, cond, k_gate, k_relax)
    return _add_noise(clean, cond, rng)


def heat_duty(obs_or_channels, cond: OperatingConditions) -> np.ndarray:
    """Hot-side duty ``m_out * cp * (T_in - T_out)`` per timestep."""
    arr = obs_or_channels.to_array() if isinstance(obs_or_channels, ObservationSeries) else obs_or_channels
    return arr[..., 5, :] * cond.hot_inlet.specific_heat * (arr[..., 0, :] - arr[..., 1, :])


__all__ = [
    "CHANNELS", "OperatingConditions", "DegradationTheta", "ObservationSeries", "LatentTrajectory",
    "forward_channels", "noise_free_batch", "simulate", "simulate_batch", "heat_duty", "read_sidecar",
]
