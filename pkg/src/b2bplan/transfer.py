"""Power exchange through the converter and the resulting curtailment savings."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .profiles import FeederProfile, ProfileError, TimeSeries, net_load

LITERAL = "literal"
CURTAILMENT_CAP = "curtailment_cap"
SAVINGS_MODES = (LITERAL, CURTAILMENT_CAP)


@dataclass(frozen=True)
class ConverterSpec:
    size_kva: float
    efficiency: float = 1.0

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise ValueError(f"efficiency must be in (0, 1], got {self.efficiency}")
        if not self.size_kva >= 0:
            raise ValueError(f"size_kva must be nonnegative, got {self.size_kva}")


@dataclass(frozen=True)
class TransferResult:
    p_c_12: TimeSeries
    p_c_21: TimeSeries
    net1_after: TimeSeries
    net2_after: TimeSeries
    save1: TimeSeries
    save2: TimeSeries
    e_save1_kwh: float
    e_save2_kwh: float


@dataclass(frozen=True)
class SavingsCurve:
    sizes_kva: np.ndarray
    f1_kwh: np.ndarray
    f2_kwh: np.ndarray

    @property
    def e_save1_max_kwh(self) -> float:
        return float(self.f1_kwh.max())

    @property
    def e_save2_max_kwh(self) -> float:
        return float(self.f2_kwh.max())


def transfer_limit(spec: ConverterSpec) -> float:
    # kVA taken as the real-power cap
    return spec.efficiency * spec.size_kva


def size_grid(min_kva: float, max_kva: float, step_kva: float = 50.0) -> np.ndarray:
    if step_kva <= 0 or max_kva < min_kva:
        raise ValueError("size grid needs step > 0 and max >= min")
    n = int(np.floor((max_kva - min_kva) / step_kva + 1e-9)) + 1
    return min_kva + step_kva * np.arange(n)


def _savings(p_c: np.ndarray, donor_net: np.ndarray, limit_kw: float, mode: str) -> np.ndarray:
    if mode == LITERAL:
        return np.maximum(0.0, p_c - limit_kw)
    if mode == CURTAILMENT_CAP:
        curtailed = np.maximum(0.0, -donor_net - limit_kw)
        return np.minimum(p_c, curtailed)
    raise ValueError(f"unknown savings mode {mode!r}; expected one of {SAVINGS_MODES}")


def _exchange(net1: np.ndarray, net2: np.ndarray, limit: float):
    fwd = (net1 < 0) & (net2 > 0)
    bwd = (net1 > 0) & (net2 < 0)
    p12 = np.where(fwd, np.minimum(np.minimum(-net1, net2), limit), 0.0)
    p21 = np.where(bwd, np.minimum(np.minimum(net1, -net2), limit), 0.0)
    return p12, p21


def simulate_transfer(p1: FeederProfile, p2: FeederProfile, spec: ConverterSpec,
                      savings_mode: str = LITERAL) -> TransferResult:
    """Step-by-step transfer from the feeder with excess DER to the one with uncovered load.

    Savings are ``max(0, P_c - P_limit)`` of the donating feeder. With
    ``savings_mode="curtailment_cap"`` they are instead capped by the amount the
    donor would actually have curtailed, ``min(P_c, max(0, |P_net| - P_limit))``.
    """
    if not p1.load.aligned_with(p2.load):
        raise ProfileError(
            f"profiles are not aligned: {p1.n_t} x {p1.step_hours} h vs "
            f"{p2.n_t} x {p2.step_hours} h"
        )
    dt = p1.step_hours
    n1 = net_load(p1).values
    n2 = net_load(p2).values
    p12, p21 = _exchange(n1, n2, transfer_limit(spec))

    s1 = _savings(p12, n1, p1.backfeed_limit_kw, savings_mode)
    s2 = _savings(p21, n2, p2.backfeed_limit_kw, savings_mode)

    def ts(v):
        return TimeSeries(v, dt)

    return TransferResult(
        p_c_12=ts(p12),
        p_c_21=ts(p21),
        net1_after=ts(n1 + p12 - p21),
        net2_after=ts(n2 - p12 + p21),
        save1=ts(s1),
        save2=ts(s2),
        e_save1_kwh=float(np.sum(s1) * dt),
        e_save2_kwh=float(np.sum(s2) * dt),
    )


def annual_savings(r: TransferResult) -> tuple[float, float]:
    return (
        float(np.sum(r.save1.values) * r.save1.step_hours),
        float(np.sum(r.save2.values) * r.save2.step_hours),
    )


def savings_curve(p1: FeederProfile, p2: FeederProfile, grid, efficiency: float = 1.0,
                  savings_mode: str = LITERAL, workers: int = 1) -> SavingsCurve:
    """Annual savings of each feeder over a grid of converter sizes.

    With ``workers > 1`` grid points are simulated on a thread pool; results
    are collected in grid order, so the curve does not depend on the pool size.
    """
    sizes = np.array(grid, dtype=float)
    if sizes.ndim != 1 or sizes.size == 0:
        raise ValueError("size grid is empty")
    if sizes.size < 2 or np.any(np.diff(sizes) <= 0):
        raise ValueError("size grid must be strictly increasing with at least 2 points")

    def point(s):
        r = simulate_transfer(p1, p2, ConverterSpec(float(s), efficiency), savings_mode)
        return r.e_save1_kwh, r.e_save2_kwh

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pts = list(pool.map(point, sizes))
    else:
        pts = [point(s) for s in sizes]
    f1 = np.array([a for a, _ in pts])
    f2 = np.array([b for _, b in pts])
    for arr in (sizes, f1, f2):
        arr.setflags(write=False)
    return SavingsCurve(sizes, f1, f2)


def saturation_size(p1: FeederProfile, p2: FeederProfile, efficiency: float = 1.0) -> float:
    """Smallest converter size beyond which no step's transfer is capped."""
    n1 = net_load(p1).values
    n2 = net_load(p2).values
    a12, a21 = _exchange(n1, n2, np.inf)
    return float(max(a12.max(), a21.max()) / efficiency)
