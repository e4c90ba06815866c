"""Feeder-head load and DER time series.

Profiles are stored as aligned numpy arrays with a uniform step in hours.
The CSV layout is::

    step_hours=0.5
    index,load_kw,der_kw
    0,412.3,0.0
    ...
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

RESIDENTIAL = "residential"
COMMERCIAL = "commercial"
LOAD_KINDS = (RESIDENTIAL, COMMERCIAL)

# Hour-of-day anchors (hour, per-unit) for the daily shapes; interpolated linearly
# and wrapped at midnight.
_RESIDENTIAL_SHAPE = [
    (0, 0.40), (4, 0.33), (7, 0.58), (9, 0.50), (12, 0.42), (15, 0.48),
    (17, 0.72), (19, 1.00), (21, 0.86), (23, 0.55),
]
_COMMERCIAL_WEEKDAY = [
    (0, 0.34), (5, 0.36), (7, 0.62), (9, 0.88), (12, 1.00), (14, 1.00),
    (16, 0.90), (18, 0.62), (20, 0.45), (23, 0.36),
]
_COMMERCIAL_WEEKEND = [
    (0, 0.32), (6, 0.33), (9, 0.42), (12, 0.48), (15, 0.46), (18, 0.38),
    (23, 0.33),
]

LOAD_NOISE_SIGMA = 0.10


class ProfileError(ValueError):
    """Raised for malformed or inconsistent profile data."""


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    step_hours: float
    start_label: str = "t0"

    def __post_init__(self):
        arr = _frozen(self.values)
        if arr.ndim != 1 or arr.size < 1:
            raise ProfileError("time series needs at least one value")
        if not np.all(np.isfinite(arr)):
            raise ProfileError("time series contains NaN or inf")
        if not (self.step_hours > 0 and np.isfinite(self.step_hours)):
            raise ProfileError(f"step_hours must be positive, got {self.step_hours}")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "step_hours", float(self.step_hours))

    @property
    def n_t(self) -> int:
        return int(self.values.size)

    def aligned_with(self, other: "TimeSeries") -> bool:
        return self.n_t == other.n_t and self.step_hours == other.step_hours

    def hour_of_day(self) -> np.ndarray:
        return (np.arange(self.n_t) * self.step_hours) % 24.0


@dataclass(frozen=True)
class FeederProfile:
    load: TimeSeries
    der: TimeSeries
    backfeed_limit_kw: float = 0.0
    label: str = field(default="feeder", compare=False)

    def __post_init__(self):
        if not self.load.aligned_with(self.der):
            raise ProfileError(
                f"load ({self.load.n_t} x {self.load.step_hours} h) and der "
                f"({self.der.n_t} x {self.der.step_hours} h) are not aligned"
            )
        if np.any(self.load.values < 0):
            raise ProfileError("load values must be nonnegative")
        if np.any(self.der.values < 0):
            raise ProfileError("der values must be nonnegative")
        if not self.backfeed_limit_kw >= 0:
            raise ProfileError("backfeed_limit_kw must be nonnegative")

    @property
    def n_t(self) -> int:
        return self.load.n_t

    @property
    def step_hours(self) -> float:
        return self.load.step_hours

    def with_backfeed_limit(self, limit_kw: float) -> "FeederProfile":
        return FeederProfile(self.load, self.der, float(limit_kw), self.label)


@dataclass(frozen=True)
class ProfileStats:
    mean_kw: float
    std_kw: float
    peak_kw: float


def from_arrays(load, der, step_hours: float, backfeed_limit_kw: float = 0.0,
                label: str = "feeder") -> FeederProfile:
    return FeederProfile(
        TimeSeries(load, step_hours), TimeSeries(der, step_hours),
        backfeed_limit_kw, label,
    )


def net_load(p: FeederProfile) -> TimeSeries:
    """Load minus DER generation; negative values mean back-feeding."""
    return TimeSeries(p.load.values - p.der.values, p.step_hours, p.load.start_label)


def profile_stats(ts: TimeSeries) -> ProfileStats:
    # population standard deviation (divide by n_t)
    v = ts.values
    return ProfileStats(float(v.mean()), float(v.std(ddof=0)), float(v.max()))


def peak_ratio(p1: FeederProfile, p2: FeederProfile) -> float:
    peak2 = float(p2.load.values.max())
    if peak2 <= 0:
        raise ProfileError("feeder 2 has zero peak load; peak ratio undefined")
    return float(p1.load.values.max()) / peak2


# -- CSV I/O -----------------------------------------------------------------

def load_profile_csv(path, backfeed_limit_kw: float = 0.0, label: str | None = None) -> FeederProfile:
    path = Path(path)
    if label is None:
        label = path.stem
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if len(lines) < 3:
        raise ProfileError(f"{path}: expected step header, column header and at least one row")

    key, _, raw = lines[0].partition("=")
    if key.strip() != "step_hours" or not raw:
        raise ProfileError(f"{path}:1: expected 'step_hours=<real>', got {lines[0]!r}")
    try:
        step = float(raw)
    except ValueError:
        raise ProfileError(f"{path}:1: bad step_hours value {raw!r}") from None
    if not step > 0:
        raise ProfileError(f"{path}:1: step_hours must be positive")

    header = [c.strip() for c in lines[1].split(",")]
    if header != ["index", "load_kw", "der_kw"]:
        raise ProfileError(f"{path}:2: expected header 'index,load_kw,der_kw', got {lines[1]!r}")

    load, der = [], []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        cols = line.split(",")
        if len(cols) != 3:
            raise ProfileError(f"{path}:{lineno}: expected 3 columns, got {len(cols)}")
        try:
            idx = int(cols[0])
            lv = float(cols[1])
            dv = float(cols[2])
        except ValueError:
            raise ProfileError(f"{path}:{lineno}: malformed row {line!r}") from None
        if idx != len(load):
            raise ProfileError(
                f"{path}:{lineno}: index {idx} breaks the uniform step (expected {len(load)})"
            )
        if not (np.isfinite(lv) and np.isfinite(dv)):
            raise ProfileError(f"{path}:{lineno}: non-finite value")
        if lv < 0:
            raise ProfileError(f"{path}:{lineno}: negative load_kw {lv}")
        if dv < 0:
            raise ProfileError(f"{path}:{lineno}: negative der_kw {dv}")
        load.append(lv)
        der.append(dv)
    if not load:
        raise ProfileError(f"{path}: no data rows")
    return from_arrays(load, der, step, backfeed_limit_kw, label)


def write_profile_csv(p: FeederProfile, path) -> None:
    rows = [f"step_hours={p.step_hours!r}", "index,load_kw,der_kw"]
    for i, (lv, dv) in enumerate(zip(p.load.values.tolist(), p.der.values.tolist())):
        rows.append(f"{i},{lv!r},{dv!r}")
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


# -- synthetic generator -----------------------------------------------------

def _interp_daily(anchors, hours: np.ndarray) -> np.ndarray:
    xs = np.array([h for h, _ in anchors] + [anchors[0][0] + 24.0])
    ys = np.array([v for _, v in anchors] + [anchors[0][1]])
    return np.interp(hours, xs, ys)


def daily_shape(kind: str, hours: np.ndarray, day_index: np.ndarray) -> np.ndarray:
    """Noise-free per-unit load shape; day 0 is a Monday."""
    if kind == RESIDENTIAL:
        return _interp_daily(_RESIDENTIAL_SHAPE, hours)
    if kind == COMMERCIAL:
        weekend = (day_index % 7) >= 5
        return np.where(
            weekend,
            _interp_daily(_COMMERCIAL_WEEKEND, hours),
            _interp_daily(_COMMERCIAL_WEEKDAY, hours),
        )
    raise ProfileError(f"unknown load kind {kind!r}; expected one of {LOAD_KINDS}")


def solar_bell(hours: np.ndarray, sunrise: float = 6.0, sunset: float = 18.0) -> np.ndarray:
    """Clear-sky per-unit PV output, 1.0 at solar noon and zero at night."""
    x = (hours - sunrise) / (sunset - sunrise)
    return np.where((x > 0) & (x < 1), np.sin(np.pi * np.clip(x, 0, 1)), 0.0)


def synth_profile(kind: str, peak_kw: float, days: int = 365, step_hours: float = 0.5,
                  pv_peak_kw: float = 0.0, seed: int = 0, backfeed_limit_kw: float = 0.0,
                  label: str | None = None) -> FeederProfile:
    """Seeded synthetic feeder profile.

    The load follows a piecewise-linear daily shape (evening peak for
    residential, midday weekday peak for commercial) with multiplicative
    Gaussian noise, then is rescaled so its maximum is exactly ``peak_kw``.
    The DER series is a clear-sky bell with a seeded per-day clearness
    factor, rescaled so its maximum is ``pv_peak_kw``.
    """
    if kind not in LOAD_KINDS:
        raise ProfileError(f"unknown load kind {kind!r}; expected one of {LOAD_KINDS}")
    if not peak_kw > 0:
        raise ProfileError("peak_kw must be positive")
    if days < 1:
        raise ProfileError("days must be >= 1")
    if pv_peak_kw < 0:
        raise ProfileError("pv_peak_kw must be nonnegative")

    n = int(round(days * 24.0 / step_hours))
    t = np.arange(n) * step_hours
    hours = t % 24.0
    day = (t // 24.0).astype(int)

    load_rng, pv_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    shape = daily_shape(kind, hours, day)
    noisy = np.clip(shape * (1.0 + LOAD_NOISE_SIGMA * load_rng.standard_normal(n)), 0.0, None)
    load = noisy * (peak_kw / noisy.max())

    if pv_peak_kw > 0:
        clearness = np.clip(pv_rng.normal(0.8, 0.2, size=day.max() + 1), 0.1, 1.0)
        pv = solar_bell(hours) * clearness[day]
        der = pv * (pv_peak_kw / pv.max()) if pv.max() > 0 else np.zeros(n)
    else:
        der = np.zeros(n)

    return from_arrays(load, der, step_hours, backfeed_limit_kw,
                       label or f"{kind}-{peak_kw:g}kw-s{seed}")


def bundled_profile(name: str, backfeed_limit_kw: float = 0.0) -> FeederProfile:
    """Load one of the profile CSVs shipped in ``b2bplan/data``."""
    path = Path(__file__).parent / "data" / f"{name}.csv"
    if not path.exists():
        raise ProfileError(f"no bundled profile named {name!r}")
    return load_profile_csv(path, backfeed_limit_kw, label=name)
