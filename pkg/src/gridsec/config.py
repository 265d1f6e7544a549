"""Scenario configuration: a TOML document with one table per component.

Unknown sections or keys are rejected so that typos never silently fall back
to defaults.
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .attacks import AttackSpec
from .battery import BILLING_MODES, BatterySpec, GameOptions
from .demand import SyntheticDemandParams
from .forecast import ForecastErrorParams
from .grid import NeighborhoodConfig, TariffParams
from .monitor import MonitoringStrategy

MITIGATIONS = ("none", "local", "previous-day")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepGrid:
    participation: tuple[float, ...] = (1.0,)
    rho: tuple[float, ...] = (1.0,)
    attacks: tuple[str, ...] = ("shift",)
    workers: int = 1

    def __post_init__(self):
        if not (self.participation and self.rho and self.attacks):
            raise ConfigError("sweep grids must be non-empty")
        if any(not 0 < p <= 1 for p in self.participation):
            raise ConfigError("participation rates must lie in (0, 1]")
        if any(not 0 <= r <= 1 for r in self.rho):
            raise ConfigError("rho values must lie in [0, 1]")


@dataclass(frozen=True)
class ScenarioConfig:
    neighborhood: NeighborhoodConfig
    days: int = 30
    seed: int = 0
    T: int = 24
    billing: str = "interval"
    battery: BatterySpec = field(default_factory=BatterySpec)
    tariff: TariffParams = field(default_factory=TariffParams)
    forecast: ForecastErrorParams = field(default_factory=ForecastErrorParams)
    calibrate_forecast: bool = False
    attack: AttackSpec | None = None
    monitor: MonitoringStrategy | None = None
    mitigation: str = "local"
    demand_csv: Path | None = None
    synthetic: SyntheticDemandParams | None = None
    game: GameOptions = field(default_factory=GameOptions)
    output_dir: Path = Path("out")
    figures: bool = False
    sweep: SweepGrid | None = None

    def __post_init__(self):
        if self.days < 1:
            raise ConfigError("days must be >= 1")
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if self.billing not in BILLING_MODES:
            raise ConfigError(f"billing must be one of {BILLING_MODES}")
        if self.mitigation not in MITIGATIONS:
            raise ConfigError(f"mitigation must be one of {MITIGATIONS}")
        if self.demand_csv is not None and not Path(self.demand_csv).is_file():
            raise ConfigError(f"demand CSV {self.demand_csv} does not exist")
        if self.attack is not None and self.neighborhood.attacker_id is None:
            raise ConfigError("an attack needs neighborhood.attacker")

    @property
    def M(self) -> int:
        return self.neighborhood.M


DEFAULTS = {
    "scenario": {"days": 30, "seed": 0, "T": 24, "billing": "interval"},
    "neighborhood": {"M": 25, "participation": 1.0, "participants": None, "attacker": 0},
    "battery": {"capacity": 13.5, "charge_rate": 5.0, "discharge_rate": 5.0,
                "charge_efficiency": 0.95, "discharge_efficiency": 0.95,
                "self_discharge": 0.0, "initial_soc": None},
    "tariff": {"c2": 1.0, "c1": 0.0, "c0": 0.0},
    "forecast": {"relative_sigma": 0.17, "target_mape": 0.08, "boundary": "circular", "calibrate": False},
    "attack": {"kind": "none", "param": None, "rho": 1.0, "seed": None},
    "monitor": {"strategy": "none", "threshold": None, "mode": "mean"},
    "mitigation": {"policy": "local"},
    "demand": {"source": "synthetic", "household_sigma": 0.25, "daily_sigma": 0.08,
               "seed": None, "morning_peak": 7.5, "evening_peak": 19.0},
    "game": {"eps_ne": 1e-6, "max_rounds": 200},
    "output": {"dir": "out", "figures": False},
    "sweep": {"participation": [1.0], "rho": [1.0], "attacks": ["shift"], "workers": 1},
}


def _merge(raw: dict) -> dict:
    merged = copy.deepcopy(DEFAULTS)
    for section, values in raw.items():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(values, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in values.items():
            if key not in DEFAULTS[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            merged[section][key] = value
    return merged


def parse_override(text: str) -> tuple[str, str, object]:
    """``section.key=value`` with the value read as a TOML literal (bare words as strings)."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    path, value = (s.strip() for s in text.split("=", 1))
    if path.count(".") != 1:
        raise ConfigError(f"override key {path!r} must be section.key")
    section, key = path.split(".")
    try:
        parsed = tomllib.loads(f"v = {value}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = value
    return section, key, parsed


def config_from_dict(raw: dict, base_dir: Path | None = None, overrides=()) -> ScenarioConfig:
    raw = copy.deepcopy(raw)
    for text in overrides:
        section, key, value = parse_override(text)
        raw.setdefault(section, {})[key] = value
    c = _merge(raw)
    try:
        return _build(c, Path(".") if base_dir is None else base_dir)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _build(c: dict, base_dir: Path) -> ScenarioConfig:
    sc, nb = c["scenario"], c["neighborhood"]
    attacker = nb["attacker"]
    if nb["participants"] is not None:
        neighborhood = NeighborhoodConfig(int(nb["M"]), tuple(nb["participants"]), attacker)
    else:
        neighborhood = NeighborhoodConfig.with_participation(int(nb["M"]), float(nb["participation"]), attacker)

    b = c["battery"]
    battery = BatterySpec(capacity=b["capacity"], max_charge_per_interval=b["charge_rate"],
                          max_discharge_per_interval=b["discharge_rate"],
                          charge_efficiency=b["charge_efficiency"],
                          discharge_efficiency=b["discharge_efficiency"],
                          self_discharge_per_interval=b["self_discharge"], initial_soc=b["initial_soc"])
    tariff = TariffParams(**c["tariff"])
    f = c["forecast"]
    forecast = ForecastErrorParams(f["relative_sigma"], f["target_mape"], f["boundary"])

    a = c["attack"]
    attack = None if a["kind"] == "none" else AttackSpec.named(a["kind"], a["rho"], a["param"], a["seed"])
    m = c["monitor"]
    monitor = None if m["strategy"] == "none" else MonitoringStrategy(m["strategy"], m["threshold"], m["mode"])

    d = c["demand"]
    demand_csv = synthetic = None
    if d["source"] == "synthetic":
        synthetic = SyntheticDemandParams(M=neighborhood.M, days=int(sc["days"]), T=int(sc["T"]),
                                          seed=int(sc["seed"] if d["seed"] is None else d["seed"]),
                                          household_sigma=d["household_sigma"], daily_sigma=d["daily_sigma"],
                                          morning_peak=d["morning_peak"], evening_peak=d["evening_peak"])
    else:
        demand_csv = Path(d["source"])
        if not demand_csv.is_absolute():
            demand_csv = base_dir / demand_csv

    g = c["game"]
    s = c["sweep"]
    sweep = SweepGrid(tuple(float(x) for x in s["participation"]), tuple(float(x) for x in s["rho"]),
                      tuple(str(x) for x in s["attacks"]), int(s["workers"]))
    out = Path(c["output"]["dir"])
    return ScenarioConfig(
        neighborhood=neighborhood, days=int(sc["days"]), seed=int(sc["seed"]), T=int(sc["T"]),
        billing=sc["billing"], battery=battery, tariff=tariff, forecast=forecast,
        calibrate_forecast=bool(f["calibrate"]), attack=attack, monitor=monitor,
        mitigation=c["mitigation"]["policy"], demand_csv=demand_csv, synthetic=synthetic,
        game=GameOptions(eps_ne=float(g["eps_ne"]), max_rounds=int(g["max_rounds"]), billing=sc["billing"]),
        output_dir=out if out.is_absolute() else base_dir / out,
        figures=bool(c["output"]["figures"]), sweep=sweep,
    )


def load_config(path, overrides=()) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw, path.parent, overrides)
