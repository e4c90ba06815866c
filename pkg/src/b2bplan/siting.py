"""Connection-bus selection: voltage impact vs. distance to the major DER plants."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import FeederNetwork, NetworkError, SensitivityMatrices, column_sensitivity_sum, distances_from

AUTO = "auto"

# C values this close (relative to the largest) count as tied; ties go to the lowest bus id.
# Needed because e.g. every bus on the path between two DER plants has the same distance sum,
# which floating point only reproduces to the last ulp.
TIE_RTOL = 1e-12


class SitingError(ValueError):
    pass


@dataclass(frozen=True)
class SitingConfig:
    alpha: float = 0.5
    beta: float = 0.5
    der_buses: tuple[int, ...] = ()
    r_mode: str | float = AUTO   # "auto" or an explicit coefficient
    excluded_buses: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "der_buses", tuple(self.der_buses))
        object.__setattr__(self, "excluded_buses", tuple(self.excluded_buses))
        if not (0 <= self.alpha <= 1 and 0 <= self.beta <= 1):
            raise SitingError("alpha and beta must lie in [0, 1]")
        if abs(self.alpha + self.beta - 1.0) > 1e-12:
            raise SitingError(f"alpha + beta must equal 1, got {self.alpha + self.beta}")
        if self.beta > 0 and not self.der_buses:
            raise SitingError("der_buses must be given when beta > 0")
        if self.r_mode != AUTO and not isinstance(self.r_mode, (int, float)):
            raise SitingError(f"r_mode must be 'auto' or a number, got {self.r_mode!r}")


@dataclass(frozen=True)
class BusScore:
    bus_id: int
    p_sum: float
    dist_sum_km: float
    c_value: float


@dataclass(frozen=True)
class SitingResult:
    per_bus: list[BusScore]
    selected_bus: int
    r_used: float
    config: SitingConfig = field(repr=False, default=None)


def voltage_change_at(m: SensitivityMatrices, a: int, l: int, delta_p_kw: float) -> float:
    """Linearised voltage change at bus ``a`` for a real-power change at bus ``l``."""
    return float(m.vlsmp[m.index(a), m.index(l)] * delta_p_kw)


def total_voltage_change(m: SensitivityMatrices, l: int, delta_p_kw: float) -> float:
    # magnitudes are summed so opposite-signed entries cannot cancel
    return column_sensitivity_sum(m, l) * abs(delta_p_kw)


def magnitude_ratio(p_sums, dist_sums) -> float:
    """Scale factor that brings the distance sums to the level of the sensitivity sums."""
    p = np.asarray(p_sums, dtype=float)
    d = np.asarray(dist_sums, dtype=float)
    if p.size == 0 or d.size == 0:
        raise SitingError("empty sequences")
    if not d.max() > 0:
        raise SitingError("all distance sums are zero; cannot scale the distance term")
    return float(p.max() / d.max())


def site_connection_point(net: FeederNetwork, m: SensitivityMatrices, cfg: SitingConfig) -> SitingResult:
    for b in cfg.der_buses:
        if b not in net.graph:
            raise NetworkError(f"unknown DER bus {b}")
    excluded = set(cfg.excluded_buses) | {net.source_id}
    candidates = [b for b in m.bus_ids if b not in excluded]
    if not candidates:
        raise SitingError("no candidate buses left after exclusions")

    p_sums = np.array([column_sensitivity_sum(m, b) for b in candidates])
    dist = np.zeros(len(candidates))
    for der in cfg.der_buses:
        d = distances_from(net, der)
        dist += np.array([d[b] for b in candidates])

    if cfg.r_mode == AUTO:
        r = magnitude_ratio(p_sums, dist) if cfg.beta > 0 else 0.0
    else:
        r = float(cfg.r_mode)
    c = cfg.alpha * p_sums + cfg.beta * r * dist
    tol = TIE_RTOL * float(np.max(np.abs(c)))
    best = int(np.flatnonzero(c <= c.min() + tol)[0])   # candidates are in ascending id order
    rows = [BusScore(b, float(p), float(d), float(v)) for b, p, d, v in zip(candidates, p_sums, dist, c)]
    return SitingResult(rows, candidates[best], r, cfg)
