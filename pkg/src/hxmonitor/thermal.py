"""Steady-state counterflow heat exchanger (effectiveness-NTU).

All quantities are SI: K, kg/s, J/(kg K), W/K, W.  The scalar API works on
:class:`FluidStream` objects; :func:`solve_counterflow` is the vectorized
kernel used by the simulator and the MCMC likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# |1 - r| below this switches to the balanced-flow limit NTU / (1 + NTU)
BALANCED_TOL = 1e-9


class ThermalDomainError(ValueError):
    """Inputs outside the physical domain of the counterflow model."""


class DegenerateLMTDError(ValueError):
    """A terminal temperature difference is non-positive."""


@dataclass(frozen=True)
class FluidStream:
    mass_flow: float
    specific_heat: float
    inlet_temp: float

    def __post_init__(self):
        if not self.mass_flow > 0:
            raise ThermalDomainError(f"mass_flow must be > 0, got {self.mass_flow}")
        if not self.specific_heat > 0:
            raise ThermalDomainError(f"specific_heat must be > 0, got {self.specific_heat}")
        if not self.inlet_temp > 0:
            raise ThermalDomainError(f"inlet_temp must be > 0 K, got {self.inlet_temp}")

    @property
    def capacity_rate(self) -> float:
        return self.mass_flow * self.specific_heat


@dataclass(frozen=True)
class ExchangerConductance:
    ua: float

    def __post_init__(self):
        if not self.ua >= 0:
            raise ThermalDomainError(f"UA must be >= 0, got {self.ua}")


@dataclass(frozen=True)
class SteadyStateSolution:
    heat_rate: float
    t_hot_out: float
    t_cold_out: float
    effectiveness: float
    ntu: float
    capacity_ratio: float


def capacity_rates(hot: FluidStream, cold: FluidStream):
    """Return ``(c_hot, c_cold, c_min, c_max)`` in W/K."""
    c_hot = hot.mass_flow * hot.specific_heat
    c_cold = cold.mass_flow * cold.specific_heat
    return c_hot, c_cold, min(c_hot, c_cold), max(c_hot, c_cold)


def effectiveness(ntu, r):
    """Counterflow effectiveness for ``ntu >= 0`` and ``0 <= r <= 1``.

    Works elementwise on arrays.  Near ``r = 1`` the removable singularity is
    replaced by its limit ``ntu / (1 + ntu)``.
    """
    ntu = np.asarray(ntu, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(ntu < 0) or np.any(np.isnan(ntu)):
        raise ThermalDomainError("ntu must be >= 0")
    if np.any(r < 0) or np.any(r > 1) or np.any(np.isnan(r)):
        raise ThermalDomainError("capacity ratio must lie in [0, 1]")
    out = _effectiveness_unchecked(ntu, r)
    return float(out) if out.ndim == 0 else out


def _effectiveness_unchecked(ntu, r):
    a = ntu * (1.0 - r)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        em1 = np.expm1(-a)
        # 1 - r e^{-a} rewritten to avoid cancellation as r -> 1
        eps = -em1 / ((1.0 - r) - r * em1)
        balanced = np.where(np.isinf(ntu), 1.0, ntu / (1.0 + ntu))
    eps = np.where(np.abs(1.0 - r) < BALANCED_TOL, balanced, eps)
    # ntu = inf with r < 1 gives -(-1)/(1-r+r) = 1 already; guard nan just in case
    return np.clip(np.nan_to_num(eps, nan=1.0), 0.0, 1.0)


def solve_counterflow(c_hot, c_cold, ua, t_hot_in, t_cold_in):
    """Vectorized effectiveness-NTU solve.

    Returns ``(q, t_hot_out, t_cold_out)`` broadcast over the inputs.  No
    validation; callers guarantee positive capacity rates and ``ua >= 0``.
    """
    c_min = np.minimum(c_hot, c_cold)
    c_max = np.maximum(c_hot, c_cold)
    eps = _effectiveness_unchecked(ua / c_min, c_min / c_max)
    q = eps * c_min * (t_hot_in - t_cold_in)
    return q, t_hot_in - q / c_hot, t_cold_in + q / c_cold


def solve_steady_state(hot: FluidStream, cold: FluidStream, ua: ExchangerConductance) -> SteadyStateSolution:
    if hot.inlet_temp < cold.inlet_temp:
        raise ThermalDomainError(
            f"hot inlet {hot.inlet_temp} K is colder than cold inlet {cold.inlet_temp} K"
        )
    c_hot, c_cold, c_min, c_max = capacity_rates(hot, cold)
    ntu = ua.ua / c_min
    r = c_min / c_max
    eps = float(_effectiveness_unchecked(np.float64(ntu), np.float64(r)))
    q = eps * c_min * (hot.inlet_temp - cold.inlet_temp)
    return SteadyStateSolution(
        heat_rate=q,
        t_hot_out=hot.inlet_temp - q / c_hot,
        t_cold_out=cold.inlet_temp + q / c_cold,
        effectiveness=eps,
        ntu=ntu,
        capacity_ratio=r,
    )


def lmtd_residual(sol: SteadyStateSolution, ua: ExchangerConductance, hot: FluidStream, cold: FluidStream) -> float:
    """Relative mismatch ``|Q - UA * dT_lm| / Q`` of an effectiveness-NTU solution."""
    dt1 = hot.inlet_temp - sol.t_cold_out
    dt2 = sol.t_hot_out - cold.inlet_temp
    if dt1 <= 0 or dt2 <= 0:
        raise DegenerateLMTDError(f"terminal differences must be positive, got {dt1}, {dt2}")
    if abs(dt1 - dt2) <= 1e-9 * max(dt1, dt2):
        dt_lm = 0.5 * (dt1 + dt2)
    else:
        dt_lm = (dt1 - dt2) / np.log1p((dt1 - dt2) / dt2)
    return abs(sol.heat_rate - ua.ua * dt_lm) / sol.heat_rate
