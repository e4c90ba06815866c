"""Planning configuration: one JSON file, every field optional."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .pairing import ScenarioConfig
from .siting import AUTO, SitingConfig
from .sizing import EconomicParams
from .transfer import LITERAL, SAVINGS_MODES, size_grid

SEED_ENV = "B2BPLAN_SEED"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ConverterConfig:
    efficiency: float = 1.0
    min_kva: float = 50.0
    max_kva: float = 1500.0
    step_kva: float = 50.0
    savings_mode: str = LITERAL

    def grid(self) -> np.ndarray:
        return size_grid(self.min_kva, self.max_kva, self.step_kva)


@dataclass(frozen=True)
class BackfeedLimits:
    feeder1_kw: float = 0.0
    feeder2_kw: float = 0.0


@dataclass(frozen=True)
class SitingSettings:
    alpha: float = 0.5
    beta: float = 0.5
    der_buses: tuple = ()
    r_mode: str | float = AUTO
    excluded_buses: tuple = ()
    delta_p_kw: float = 1.0
    delta_q_kvar: float = 1.0

    @property
    def siting(self) -> SitingConfig:
        # validated only when siting is actually run, so other commands
        # work without DER buses configured
        return SitingConfig(self.alpha, self.beta, self.der_buses, self.r_mode, self.excluded_buses)


@dataclass(frozen=True)
class PlanConfig:
    economics: EconomicParams = field(default_factory=EconomicParams)
    converter: ConverterConfig = field(default_factory=ConverterConfig)
    backfeed_limits: BackfeedLimits = field(default_factory=BackfeedLimits)
    siting: SitingSettings = field(default_factory=SitingSettings)
    pairing: ScenarioConfig = field(default_factory=ScenarioConfig)

    def __post_init__(self):
        grid = self.converter.grid()
        if grid.size < 4:
            raise ConfigError(f"size grid needs at least 4 points, got {grid.size}")
        if self.converter.savings_mode not in SAVINGS_MODES:
            raise ConfigError(f"savings_mode must be one of {SAVINGS_MODES}")

    def to_dict(self) -> dict:
        s = self.siting
        return {
            "economics": dataclasses.asdict(self.economics),
            "converter": {
                "efficiency": self.converter.efficiency,
                "size_grid": {"min_kva": self.converter.min_kva, "max_kva": self.converter.max_kva,
                              "step_kva": self.converter.step_kva},
                "savings_mode": self.converter.savings_mode,
            },
            "backfeed_limits": dataclasses.asdict(self.backfeed_limits),
            "siting": {
                "alpha": s.alpha, "beta": s.beta, "der_buses": list(s.der_buses), "r": s.r_mode,
                "excluded_buses": list(s.excluded_buses),
                "delta_p_kw": self.siting.delta_p_kw, "delta_q_kvar": self.siting.delta_q_kvar,
            },
            "pairing": dataclasses.asdict(self.pairing),
        }


def _take(section: dict, name: str, allowed: set) -> dict:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in '{name}': {sorted(unknown)}")
    return section


def config_from_dict(data: dict) -> PlanConfig:
    _take(data, "config", {"economics", "converter", "backfeed_limits", "siting", "pairing"})
    try:
        econ = EconomicParams(**_take(data.get("economics", {}), "economics",
                                      {f.name for f in dataclasses.fields(EconomicParams)}))

        conv = dict(_take(data.get("converter", {}), "converter", {"efficiency", "size_grid", "savings_mode"}))
        grid = _take(conv.pop("size_grid", {}), "converter.size_grid", {"min_kva", "max_kva", "step_kva"})
        converter = ConverterConfig(**conv, **grid)

        backfeed = BackfeedLimits(**_take(data.get("backfeed_limits", {}), "backfeed_limits",
                                          {"feeder1_kw", "feeder2_kw"}))

        st = dict(_take(data.get("siting", {}), "siting",
                        {"alpha", "beta", "der_buses", "r", "excluded_buses", "delta_p_kw", "delta_q_kvar"}))
        if "r" in st:
            st["r_mode"] = st.pop("r")
        for k in ("der_buses", "excluded_buses"):
            if k in st:
                st[k] = tuple(int(b) for b in st[k])
        siting = SitingSettings(**st)

        pairing = ScenarioConfig(**_take(data.get("pairing", {}), "pairing",
                                         {f.name for f in dataclasses.fields(ScenarioConfig)}))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None

    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            pairing = dataclasses.replace(pairing, seed=int(env_seed))
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env_seed!r}") from None
    return PlanConfig(econ, converter, backfeed, siting, pairing)


def load_config(path=None) -> PlanConfig:
    if path is None:
        return config_from_dict({})
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return config_from_dict(data)


__all__ = ["AUTO", "PlanConfig", "ConfigError", "load_config", "config_from_dict"]
