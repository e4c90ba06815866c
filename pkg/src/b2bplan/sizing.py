"""Converter size selection from net-revenue and time-of-return curves.

The flow is: savings curve -> cost split -> per-feeder net revenue ->
discrete derivatives / time-of-return -> option table -> selected size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .transfer import SavingsCurve

RULE_ALL_BELOW_MIN = "all-below-min"
RULE_MIN_OF_MAXES = "min-of-maxes"

# relative tolerance (to the curve magnitude) below which differences count as equal
CURVE_RTOL = 1e-9


class SizingError(ValueError):
    pass


class NoExchangeError(SizingError):
    """Neither feeder saves any energy at any grid size."""


class UneconomicError(SizingError):
    def __init__(self, feeder: int, nr_max: float):
        super().__init__(
            f"connection uneconomic for feeder {feeder}: maximum net revenue {nr_max:.2f} <= 0"
        )
        self.feeder = feeder
        self.nr_max = nr_max


@dataclass(frozen=True)
class EconomicParams:
    lambda_pv: float = 0.1    # $/kWh
    lambda_c: float = 100.0   # $/kVA
    lambda_cm: float = 0.0    # $/year
    n_yr: int = 10
    p1_limit: float = 0.8
    p2_limit: float = 0.8

    def __post_init__(self):
        if min(self.lambda_pv, self.lambda_c, self.lambda_cm) < 0:
            raise ValueError("prices must be nonnegative")
        if self.n_yr < 1:
            raise ValueError("n_yr must be >= 1")
        for p in (self.p1_limit, self.p2_limit):
            if not 0 < p <= 1:
                raise ValueError(f"retention limits must be in (0, 1], got {p}")


@dataclass(frozen=True)
class CostSplit:
    gamma1: float
    gamma2: float


@dataclass(frozen=True)
class NetRevenueCurve:
    sizes_kva: np.ndarray
    nr: np.ndarray
    nr1: np.ndarray
    nr2: np.ndarray


@dataclass(frozen=True)
class DerivativeSet:
    """Backward differences of orders 1-3.

    ``d1[k]`` belongs to grid index ``k + 1``, ``d2[k]`` to ``k + 2`` and
    ``d3[k]`` to ``k + 3``.
    """
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    scale: float = 0.0


@dataclass(frozen=True)
class ReturnAnalysis:
    tor_years: np.ndarray
    vol_dollars: np.ndarray
    ratio_vt: float
    dvt: np.ndarray
    best_index: int


@dataclass(frozen=True)
class SizeOptionTable:
    s_min: float
    opt_j1: tuple
    opt_j2: tuple
    opt_tor1: float
    opt_tor2: float
    s_max1: float
    s_max2: float

    @property
    def s_max(self) -> float:
        return max(self.s_max1, self.s_max2)

    def as_dict(self) -> dict:
        return {
            "s_min": self.s_min,
            "opt_j1": list(self.opt_j1),
            "opt_j2": list(self.opt_j2),
            "opt_tor1": self.opt_tor1,
            "opt_tor2": self.opt_tor2,
            "s_max1": self.s_max1,
            "s_max2": self.s_max2,
            "s_max": self.s_max,
        }


@dataclass(frozen=True)
class SizingDecision:
    s_opt_kva: float
    rule_applied: str
    subset: dict
    audit: list = field(default_factory=list)


def cost_split(curve: SavingsCurve) -> CostSplit:
    e1, e2 = curve.e_save1_max_kwh, curve.e_save2_max_kwh
    total = e1 + e2
    if not total > 0:
        raise NoExchangeError("no exchangeable energy; feeders gain nothing from connection")
    return CostSplit(e1 / total, e2 / total)


def net_revenue_curves(curve: SavingsCurve, econ: EconomicParams, split: CostSplit) -> NetRevenueCurve:
    s = np.asarray(curve.sizes_kva, dtype=float)
    if s.size == 0:
        raise SizingError("empty size grid")
    f1 = np.asarray(curve.f1_kwh, dtype=float)
    f2 = np.asarray(curve.f2_kwh, dtype=float)
    k = econ.n_yr * econ.lambda_pv
    cost = econ.lambda_c * s + econ.n_yr * econ.lambda_cm
    nr = k * (f1 + f2) - econ.lambda_c * s - econ.n_yr * econ.lambda_cm
    nr1 = k * f1 - split.gamma1 * cost
    nr2 = k * f2 - split.gamma2 * cost
    return NetRevenueCurve(s, nr, nr1, nr2)


def discrete_derivatives(values) -> DerivativeSet:
    v = np.asarray(values, dtype=float)
    if v.size < 4:
        raise SizingError(f"need at least 4 points for third differences, got {v.size}")
    d1 = np.diff(v)
    d2 = np.diff(d1)
    d3 = np.diff(d2)
    return DerivativeSet(d1, d2, d3, float(np.max(np.abs(v))))


def find_s_max(nr_i, grid) -> float:
    """Grid size at the global maximum of a net-revenue curve (smallest on ties)."""
    nr_i = np.asarray(nr_i, dtype=float)
    if nr_i.size == 0:
        raise SizingError("empty curve")
    return float(np.asarray(grid)[int(np.argmax(nr_i))])


def _strict_extrema(x: np.ndarray, tol: float) -> list[int]:
    out = []
    for k in range(1, x.size - 1):
        lo = x[k] < x[k - 1] - tol and x[k] < x[k + 1] - tol
        hi = x[k] > x[k - 1] + tol and x[k] > x[k + 1] + tol
        if lo or hi:
            out.append(k)
    return out


def turning_points(d: DerivativeSet, grid, tol: float | None = None) -> list[float]:
    """Sizes where the second or third difference has a strict local extremum.

    Plateaus do not count. Differences within ``tol`` (default: a relative
    1e-9 of the curve magnitude) are treated as equal so float rounding on
    flat stretches does not produce spurious candidates.
    """
    grid = np.asarray(grid, dtype=float)
    if tol is None:
        tol = CURVE_RTOL * d.scale
    idx = {k + 2 for k in _strict_extrema(d.d2, tol)}
    idx |= {k + 3 for k in _strict_extrema(d.d3, tol)}
    return [float(grid[i]) for i in sorted(idx)]


def return_analysis(f_i, grid, econ: EconomicParams) -> ReturnAnalysis:
    f = np.asarray(f_i, dtype=float)
    s = np.asarray(grid, dtype=float)
    paying = f > 0
    if not paying.any():
        raise SizingError("no grid size produces any savings; time of return undefined")
    annual = econ.lambda_pv * f
    with np.errstate(divide="ignore", invalid="ignore"):
        tor = np.where(paying & (annual > 0), econ.lambda_c * s / annual, np.inf)
    vol = econ.n_yr * annual
    finite = np.isfinite(tor)
    if not finite.any():
        raise SizingError("time of return is infinite at every size")
    max_tor = float(np.max(np.abs(tor[finite])))
    max_vol = float(np.max(np.abs(vol)))
    if max_tor == 0 or max_vol == 0:
        raise SizingError("value/time-of-return ratio is degenerate (zero time of return or value)")
    ratio = max_vol / max_tor
    dvt = np.where(finite, vol / ratio - np.where(finite, tor, 0.0), -np.inf)
    best = int(np.argmax(dvt))
    return ReturnAnalysis(tor, vol, ratio, dvt, best)


def min_size_for(nr_i, grid, p_limit: float, feeder: int = 1) -> float:
    """Smallest size on the rising approach to the peak that keeps ``p_limit`` of the peak value.

    Walks down from the argmax while the curve stays at or above the
    threshold, so a dip below it earlier on the curve ends the run.
    """
    nr_i = np.asarray(nr_i, dtype=float)
    grid = np.asarray(grid, dtype=float)
    top = int(np.argmax(nr_i))
    nr_max = float(nr_i[top])
    if nr_max <= 0:
        raise UneconomicError(feeder, nr_max)
    threshold = p_limit * nr_max
    k = top
    while k > 0 and nr_i[k - 1] >= threshold:
        k -= 1
    return float(grid[k])


def min_sizes(nr1, nr2, econ: EconomicParams, grid) -> tuple[float, float, float]:
    """Return ``(combined, feeder1, feeder2)`` minimum sizes."""
    s1 = min_size_for(nr1, grid, econ.p1_limit, feeder=1)
    s2 = min_size_for(nr2, grid, econ.p2_limit, feeder=2)
    return max(s1, s2), s1, s2


def select_optimal(table: SizeOptionTable) -> SizingDecision:
    """Filter the candidate options and pick the final size.

    A feeder's candidate survives when it is strictly above the combined
    minimum and strictly below that feeder's own revenue-maximising size.
    If nothing survives the minimum size is returned; otherwise the smallest
    of the per-group maxima.
    """
    lo = table.s_min
    audit = [f"s_min = {lo:g} kVA, s_max = max({table.s_max1:g}, {table.s_max2:g}) = {table.s_max:g} kVA"]

    def keep(cands, hi, name):
        cands = list(cands)
        kept = [c for c in cands if lo < c < hi]
        audit.append(f"{name}: {_fmt(cands)} -> kept {_fmt(kept)} (bounds ({lo:g}, {hi:g}))")
        return kept

    j1 = keep(table.opt_j1, table.s_max1, "opt_j1")
    j2 = keep(table.opt_j2, table.s_max2, "opt_j2")
    tor = keep([table.opt_tor1], table.s_max1, "opt_tor1") + keep([table.opt_tor2], table.s_max2, "opt_tor2")
    subset = {"opt_j1": j1, "opt_j2": j2, "opt_tor": tor}

    if not (j1 or j2 or tor):
        audit.append(f"no candidate above s_min -> s_opt = s_min = {lo:g} kVA")
        return SizingDecision(lo, RULE_ALL_BELOW_MIN, subset, audit)

    group_max = [max(g) for g in (j1, j2, tor) if g]
    s_opt = min(group_max)
    audit.append(f"s_opt = min({', '.join(f'{g:g}' for g in group_max)}) = {s_opt:g} kVA")
    return SizingDecision(s_opt, RULE_MIN_OF_MAXES, subset, audit)


def _fmt(xs) -> str:
    return "[" + ", ".join(f"{x:g}" for x in xs) + "]"


@dataclass(frozen=True)
class SizingAnalysis:
    curve: SavingsCurve
    econ: EconomicParams
    split: CostSplit
    revenue: NetRevenueCurve
    deriv1: DerivativeSet
    deriv2: DerivativeSet
    tor1: ReturnAnalysis
    tor2: ReturnAnalysis
    s_min1: float
    s_min2: float
    table: SizeOptionTable
    decision: SizingDecision


def analyse(curve: SavingsCurve, econ: EconomicParams) -> SizingAnalysis:
    """Run the whole size-selection chain on a savings curve."""
    grid = np.asarray(curve.sizes_kva, dtype=float)
    split = cost_split(curve)
    rev = net_revenue_curves(curve, econ, split)
    s_min, s_min1, s_min2 = min_sizes(rev.nr1, rev.nr2, econ, grid)
    d1 = discrete_derivatives(rev.nr1)
    d2 = discrete_derivatives(rev.nr2)
    r1 = return_analysis(curve.f1_kwh, grid, econ)
    r2 = return_analysis(curve.f2_kwh, grid, econ)
    table = SizeOptionTable(
        s_min=s_min,
        opt_j1=tuple(turning_points(d1, grid)),
        opt_j2=tuple(turning_points(d2, grid)),
        opt_tor1=float(grid[r1.best_index]),
        opt_tor2=float(grid[r2.best_index]),
        s_max1=find_s_max(rev.nr1, grid),
        s_max2=find_s_max(rev.nr2, grid),
    )
    return SizingAnalysis(curve, econ, split, rev, d1, d2, r1, r2, s_min1, s_min2,
                          table, select_optimal(table))
