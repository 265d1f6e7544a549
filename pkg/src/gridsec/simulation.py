"""Multi-day neighbourhood simulation with matched attack-free baselines, summaries and sweeps."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .attacks import AttackSpec, apply_attack, victim_stream
from .battery import (DayExecution, best_response, execute_day, local_schedule,
                      nash_gaps, play_scheduling_game, previous_day_schedule)
from .config import ScenarioConfig
from .demand import load_demands, synthetic_demands
from .forecast import ForecastErrorParams, calibrate_sigma, simulate_forecast
from .grid import NeighborhoodConfig, par, total_cost
from .monitor import detect
from ._rng import substream

logger = logging.getLogger(__name__)

METRICS = ("attacker_change", "others_change", "revenue_change", "par", "baseline_par", "demand_par")


@dataclass
class ChainDay:
    """One day of one pipeline run (either attacked or baseline)."""

    execution: DayExecution
    schedules: np.ndarray  # committed schedules, M x T
    detected: bool
    converged: bool
    rounds: int
    nash_gap: float  # worst remaining best-response gain over its tolerance; <= 1 certifies eps-NE
    victims: tuple[int, ...] = ()
    drift: float = 0.0


@dataclass
class DayResult:
    day: int
    bills: np.ndarray
    baseline_bills: np.ndarray
    attacker_change: float  # % vs baseline
    others_change: float  # mean % change over the other participants
    revenue_change: float
    revenue: float
    baseline_revenue: float
    par: float
    baseline_par: float
    demand_par: float  # no batteries at all
    detected: bool
    converged: bool
    rounds: int
    nash_gap: float
    victims: tuple[int, ...] = ()
    drift: float = 0.0
    baseline_nash_gap: float = 0.0


@dataclass
class ScenarioResult:
    days: list[DayResult]
    summary: dict
    forecast: ForecastErrorParams


def _pct(new, old) -> float:
    return float(100.0 * (new / old - 1.0)) if old > 0 else 0.0


def scenario_demands(config: ScenarioConfig) -> np.ndarray:
    if config.demand_csv is not None:
        D = load_demands(config.demand_csv, T=config.T)
    else:
        D = synthetic_demands(config.synthetic)
    if D.shape[0] != config.M:
        raise ValueError(f"demand data has {D.shape[0]} households, config expects {config.M}")
    if D.shape[1] < config.days:
        raise ValueError(f"demand data covers {D.shape[1]} days, config asks for {config.days}")
    return D[:, :config.days]


def resolve_forecast(config: ScenarioConfig, demands) -> ForecastErrorParams:
    if not config.calibrate_forecast:
        return config.forecast
    D = np.asarray(demands)
    return calibrate_sigma(D.reshape(-1, D.shape[-1]), config.forecast,
                           substream(config.seed, 0, 0, "calibration"))


def day_forecasts(seed: int, day: int, demand_day, participants, params: ForecastErrorParams):
    """Household forecasts (all M) and the utility's own estimates (participants only)."""
    F = np.array([simulate_forecast(d, params, substream(seed, day, m, "forecast"))
                  for m, d in enumerate(demand_day)])
    U = np.array([simulate_forecast(demand_day[m], params, substream(seed, day, m, "uc-estimate"))
                  for m in participants])
    return F, U


def run_chain_day(config: ScenarioConfig, attack: AttackSpec | None, day: int, demand_day,
                  F, U, soc0, previous: np.ndarray | None) -> ChainDay:
    """Forecasts -> attack -> monitoring -> schedules -> execution for a single day."""
    nb = config.neighborhood
    parts = nb.participants
    spec, tariff = config.battery, config.tariff
    received, victims, drift = F, (), 0.0
    if attack is not None:
        out = apply_attack(F, attack, nb, victim_stream(attack, config.seed, day))
        received, victims, drift = out.forecasts, out.victims, out.sum_drift
    detected = False
    if config.monitor is not None and parts:
        detected = detect(received[list(parts)], U, config.monitor, household_ids=parts).detected

    S = np.zeros_like(F)
    converged, rounds, gap = True, 0, 0.0
    if detected and config.mitigation != "none":
        for n in parts:
            if config.mitigation == "previous-day" and previous is not None:
                S[n] = previous_day_schedule([previous[n]], spec, soc0[n])
            else:
                S[n] = local_schedule(F[n], spec, tariff, soc0=soc0[n], billing=config.billing)
    elif parts:
        res = play_scheduling_game(received, parts, spec, tariff, soc0=soc0, options=config.game)
        S, converged, rounds = res.schedules, res.converged, res.rounds
        gaps = nash_gaps(received, S, parts, spec, tariff, soc0=soc0, billing=config.billing)
        gap = float(np.max(gaps / res.tolerances))
        if attack is not None:
            # the attacker re-optimises on true data once the others have committed
            a = nb.attacker_id
            others = (F + S).sum(axis=0) - F[a] - S[a]
            S[a] = best_response(F[a], np.maximum(others, 0.0), spec, tariff, soc0=soc0[a],
                                 billing=config.billing)
    ex = execute_day(S, demand_day, parts, spec, tariff, soc0=soc0, billing=config.billing)
    return ChainDay(ex, S, detected, converged, rounds, gap, victims, drift)


def run_chain(config: ScenarioConfig, attack: AttackSpec | None, demands,
              params: ForecastErrorParams) -> list[ChainDay]:
    """Sequential days with state-of-charge carry-over."""
    parts = config.neighborhood.participants
    soc = np.full(config.M, config.battery.initial_soc)
    previous = None
    out = []
    for day in range(config.days):
        D = demands[:, day]
        F, U = day_forecasts(config.seed, day, D, parts, params)
        cd = run_chain_day(config, attack, day, D, F, U, soc, previous)
        out.append(cd)
        soc = cd.execution.soc_end.copy()
        previous = cd.schedules
    return out


def combine_day(config: ScenarioConfig, day: int, demand_day, attacked: ChainDay,
                baseline: ChainDay) -> DayResult:
    nb = config.neighborhood
    b, b0 = attacked.execution.bills, baseline.execution.bills
    a = nb.attacker_id
    attacker_change = _pct(b[a], b0[a]) if a is not None else 0.0
    others = [n for n in nb.participants if n != a]
    others_change = float(np.mean([_pct(b[n], b0[n]) for n in others])) if others else 0.0
    rev = total_cost(attacked.execution.loads, config.tariff)
    rev0 = total_cost(baseline.execution.loads, config.tariff)
    return DayResult(
        day=day, bills=b, baseline_bills=b0,
        attacker_change=attacker_change, others_change=others_change,
        revenue_change=_pct(rev, rev0), revenue=rev, baseline_revenue=rev0,
        par=attacked.execution.par, baseline_par=baseline.execution.par,
        demand_par=par(np.asarray(demand_day).sum(axis=0)),
        detected=attacked.detected, converged=attacked.converged and baseline.converged,
        rounds=attacked.rounds, nash_gap=attacked.nash_gap,
        victims=attacked.victims, drift=attacked.drift, baseline_nash_gap=baseline.nash_gap,
    )


def run_day(config: ScenarioConfig, day: int, demand_day, state: dict | None = None):
    """One day of the attacked run and its matched baseline.

    ``state`` carries each run's state of charge and previous schedules between
    days; pass back the returned state to continue the scenario.
    """
    parts = config.neighborhood.participants
    params = config.forecast
    if state is None:
        soc = np.full(config.M, config.battery.initial_soc)
        state = {"soc": soc, "soc_base": soc.copy(), "prev": None, "prev_base": None}
    D = np.asarray(demand_day, dtype=float)
    F, U = day_forecasts(config.seed, day, D, parts, params)
    att = run_chain_day(config, config.attack, day, D, F, U, state["soc"], state["prev"])
    if config.attack is None:
        base = att
    else:
        base = run_chain_day(config, None, day, D, F, U, state["soc_base"], state["prev_base"])
    new_state = {"soc": att.execution.soc_end.copy(), "soc_base": base.execution.soc_end.copy(),
                 "prev": att.schedules, "prev_base": base.schedules}
    return combine_day(config, day, D, att, base), new_state


def summarize(days: list[DayResult]) -> dict:
    """Median and interquartile range (linear-interpolated quartiles) per metric."""
    out = {"days": len(days),
           "detected_days": int(sum(d.detected for d in days)),
           "nonconverged_days": int(sum(not d.converged for d in days))}
    for m in METRICS:
        v = np.array([getattr(d, m) for d in days], dtype=float)
        q25, med, q75 = np.percentile(v, [25, 50, 75])
        out[m] = {"median": float(med), "q25": float(q25), "q75": float(q75),
                  "iqr": float(q75 - q25), "min": float(v.min()), "max": float(v.max())}
    return out


def _scenario_from_chains(config, demands, attacked, baseline, params) -> ScenarioResult:
    days = [combine_day(config, d, demands[:, d], attacked[d], baseline[d]) for d in range(config.days)]
    return ScenarioResult(days, summarize(days), params)


def run_scenario(config: ScenarioConfig, demands=None, baseline: list[ChainDay] | None = None) -> ScenarioResult:
    D = scenario_demands(config) if demands is None else np.asarray(demands, dtype=float)[:, :config.days]
    params = resolve_forecast(config, D)
    cfg = replace(config, forecast=params)
    attacked = run_chain(cfg, cfg.attack, D, params)
    if baseline is None:
        baseline = attacked if cfg.attack is None else run_chain(cfg, None, D, params)
    return _scenario_from_chains(cfg, D, attacked, baseline, params)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def day_rows(result: ScenarioResult):
    M = len(result.days[0].bills) if result.days else 0
    header = ["day", *METRICS, "revenue", "baseline_revenue", "detected", "converged", "rounds",
              "nash_gap", "baseline_nash_gap", "n_victims", "drift"] + [f"bill_{m}" for m in range(M)]
    rows = []
    for d in result.days:
        rows.append([_fmt(d.day), *(_fmt(getattr(d, m)) for m in METRICS), _fmt(d.revenue),
                     _fmt(d.baseline_revenue), _fmt(d.detected), _fmt(d.converged), _fmt(d.rounds),
                     _fmt(d.nash_gap), _fmt(d.baseline_nash_gap), _fmt(len(d.victims)), _fmt(d.drift)]
                    + [_fmt(b) for b in d.bills])
    return header, rows


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_scenario(result: ScenarioResult, out_dir) -> dict:
    out_dir = Path(out_dir)
    header, rows = day_rows(result)
    summary = dict(result.summary, relative_sigma=result.forecast.relative_sigma)
    return {"days": write_csv(out_dir / "days.csv", header, rows),
            "summary": write_json(out_dir / "summary.json", summary)}


# ----------------------------------------------------------------------------- sweeps

@dataclass
class SweepCell:
    attack: str
    participation: float
    rho: float
    summary: dict
    attacker_change: np.ndarray = field(repr=False)
    par: np.ndarray = field(repr=False)
    days: list = field(default_factory=list, repr=False)


@dataclass
class SweepResult:
    cells: list[SweepCell]

    def cell(self, attack: str, participation: float, rho: float) -> SweepCell:
        for c in self.cells:
            if c.attack == attack and np.isclose(c.participation, participation) and np.isclose(c.rho, rho):
                return c
        raise KeyError((attack, participation, rho))

    def grid(self, attack: str, metric: str = "attacker_change", stat: str = "median"):
        ps = sorted({c.participation for c in self.cells if c.attack == attack})
        rs = sorted({c.rho for c in self.cells if c.attack == attack})
        G = np.full((len(ps), len(rs)), np.nan)
        for c in self.cells:
            if c.attack == attack:
                G[ps.index(c.participation), rs.index(c.rho)] = c.summary[metric][stat]
        return np.array(ps), np.array(rs), G


def cell_config(config: ScenarioConfig, participation: float, attack: str | None, rho: float) -> ScenarioConfig:
    nb = NeighborhoodConfig.with_participation(config.M, participation, config.neighborhood.attacker_id)
    spec = None
    if attack is not None:
        param = None
        if config.attack is not None and AttackSpec.named(attack).kind == config.attack.kind \
                and attack in ("shift", "scale"):
            param = config.attack.param
        seed = config.attack.seed if config.attack is not None else None
        spec = AttackSpec.named(attack, rho, param, seed)
    return replace(config, neighborhood=nb, attack=spec)


def _baseline_task(args):
    config, participation, demands, params = args
    cfg = replace(cell_config(config, participation, None, 0.0), forecast=params)
    return run_chain(cfg, None, demands, params)


def _cell_task(args):
    config, participation, attack, rho, demands, params, baseline = args
    cfg = replace(cell_config(config, participation, attack, rho), forecast=params)
    attacked = run_chain(cfg, cfg.attack, demands, params)
    res = _scenario_from_chains(cfg, demands, attacked, baseline, params)
    return SweepCell(attack, participation, rho, res.summary,
                     np.array([d.attacker_change for d in res.days]), np.array([d.par for d in res.days]), res.days)


def _map(fn, tasks, workers: int):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def sweep(config: ScenarioConfig, participation=None, rho=None, attacks=None, demands=None,
          workers: int | None = None) -> SweepResult:
    """Run every (attack, participation, rho) cell against a shared per-participation baseline."""
    grid = config.sweep
    participation = tuple(grid.participation if participation is None else participation)
    rho = tuple(grid.rho if rho is None else rho)
    attacks = tuple(grid.attacks if attacks is None else attacks)
    if workers is None:
        workers = grid.workers if grid is not None else 1
    if not (participation and rho and attacks):
        raise ValueError("sweep grids must be non-empty")
    D = scenario_demands(config) if demands is None else np.asarray(demands, dtype=float)[:, :config.days]
    params = resolve_forecast(config, D)
    baselines = dict(zip(participation, _map(_baseline_task, [(config, p, D, params) for p in participation],
                                             workers)))
    tasks = [(config, p, a, r, D, params, baselines[p]) for a in attacks for p in participation for r in rho]
    return SweepResult(_map(_cell_task, tasks, workers))


def write_sweep(result: SweepResult, out_dir) -> dict:
    """One CSV per metric; rows are grid cells with the axes as leading columns."""
    out_dir = Path(out_dir)
    paths = {}
    for metric in METRICS:
        rows = [[c.attack, _fmt(c.participation), _fmt(c.rho)]
                + [_fmt(c.summary[metric][k]) for k in ("median", "q25", "q75", "min", "max")]
                for c in result.cells]
        paths[metric] = write_csv(out_dir / f"sweep_{metric}.csv",
                                  ["attack", "participation", "rho", "median", "q25", "q75", "min", "max"], rows)
    return paths
