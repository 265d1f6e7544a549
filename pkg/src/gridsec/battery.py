"""Storage model, household best response, the iterated scheduling game and day execution.

Actions are meter-side energies per interval: positive values charge the battery from
the grid, negative values discharge it to cover demand. The state of charge follows

    soc[t+1] = soc[t]*(1 - self_discharge) + eta_c*max(a, 0) - max(-a, 0)/eta_d
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import quadprog

from .grid import TariffParams, bills, check_profile, par

logger = logging.getLogger(__name__)

SOC_TOL = 1e-9
# Tie-break weight on charge/discharge magnitudes, relative to c2.
_REG = 1e-9
BILLING_MODES = ("interval", "daily")


@dataclass(frozen=True)
class BatterySpec:
    """Lithium-ion home battery; defaults are Powerwall-2-like for 1 h intervals."""

    capacity: float = 13.5
    max_charge_per_interval: float = 5.0
    max_discharge_per_interval: float = 5.0
    charge_efficiency: float = 0.95
    discharge_efficiency: float = 0.95
    self_discharge_per_interval: float = 0.0
    initial_soc: float | None = None

    def __post_init__(self):
        if self.capacity < 0:
            raise ValueError("capacity must be >= 0")
        if self.max_charge_per_interval <= 0 or self.max_discharge_per_interval <= 0:
            raise ValueError("charge/discharge rates must be > 0")
        for name in ("charge_efficiency", "discharge_efficiency"):
            eta = getattr(self, name)
            if not 0 < eta <= 1:
                raise ValueError(f"{name} must lie in (0, 1]")
        if not 0 <= self.self_discharge_per_interval < 1:
            raise ValueError("self_discharge_per_interval must lie in [0, 1)")
        if self.initial_soc is None:
            object.__setattr__(self, "initial_soc", 0.5 * self.capacity)
        if not 0 <= self.initial_soc <= self.capacity:
            raise ValueError("initial_soc must lie in [0, capacity]")


class ScheduleViolation(ValueError):
    """A schedule breaks a battery constraint at interval ``t``."""

    def __init__(self, t: int, kind: str, value: float):
        self.t = t
        self.kind = kind
        self.value = value
        super().__init__(f"interval {t}: {kind} (value {value:.6g})")


def soc_step(soc, action, spec: BatterySpec):
    action = np.asarray(action, dtype=float)
    return (
        soc * (1.0 - spec.self_discharge_per_interval)
        + spec.charge_efficiency * np.maximum(action, 0.0)
        - np.maximum(-action, 0.0) / spec.discharge_efficiency
    )


def validate_schedule(actions, spec: BatterySpec, soc0: float | None = None) -> np.ndarray:
    """Return the T+1 state-of-charge trajectory, or raise on the first violated constraint."""
    a = np.asarray(actions, dtype=float)
    soc = np.empty(a.size + 1)
    soc[0] = spec.initial_soc if soc0 is None else soc0
    for t, at in enumerate(a):
        if at > spec.max_charge_per_interval + SOC_TOL:
            raise ScheduleViolation(t, "charge rate", at)
        if -at > spec.max_discharge_per_interval + SOC_TOL:
            raise ScheduleViolation(t, "discharge rate", at)
        soc[t + 1] = soc_step(soc[t], at, spec)
        if soc[t + 1] < -SOC_TOL:
            raise ScheduleViolation(t, "underflow", soc[t + 1])
        if soc[t + 1] > spec.capacity + SOC_TOL:
            raise ScheduleViolation(t, "overflow", soc[t + 1])
    return soc


def project_schedule(actions, spec: BatterySpec, soc0: float, demand=None):
    """Truncate each action to what the battery (and, optionally, demand) allows.

    Charging is cut at the capacity headroom, discharging at the stored energy and,
    when ``demand`` is given, at the demand itself so the grid draw never goes
    negative. Energy that cannot be delivered stays in the battery.
    Returns ``(feasible_actions, soc_trajectory)``.
    """
    a = np.asarray(actions, dtype=float)
    out = np.empty_like(a)
    soc = np.empty(a.size + 1)
    soc[0] = soc0
    keep = 1.0 - spec.self_discharge_per_interval
    for t, at in enumerate(a):
        s = soc[t] * keep
        if at >= 0:
            head = max(spec.capacity - s, 0.0) / spec.charge_efficiency
            eff = min(at, spec.max_charge_per_interval, head)
        else:
            avail = max(s, 0.0) * spec.discharge_efficiency
            lim = min(-at, spec.max_discharge_per_interval, avail)
            if demand is not None:
                lim = min(lim, max(float(demand[t]), 0.0))
            eff = -lim
        out[t] = eff
        nxt = s + spec.charge_efficiency * max(eff, 0.0) - max(-eff, 0.0) / spec.discharge_efficiency
        soc[t + 1] = min(max(nxt, 0.0), spec.capacity)
    return out, soc


@lru_cache(maxsize=64)
def _qp_matrices(spec: BatterySpec, T: int, c2: float):
    """Hessian and constraint matrix of the best-response QP over x = (charge, discharge)."""
    eye = np.eye(T)
    G = 2.0 * c2 * np.block([[eye, -eye], [-eye, eye]]) + 2.0 * _REG * c2 * np.eye(2 * T)
    keep = 1.0 - spec.self_discharge_per_interval
    # soc[k] = keep**k * soc0 + S[k-1] @ x for k = 1..T
    k = np.arange(1, T + 1)[:, None]
    j = np.arange(T)[None, :]
    decay = np.where(j < k, keep ** np.maximum(k - 1 - j, 0), 0.0)
    S = np.hstack([decay * spec.charge_efficiency, -decay / spec.discharge_efficiency])
    C = np.vstack([np.eye(2 * T), -np.eye(2 * T), S, -S, np.hstack([eye, -eye])])
    upper = np.concatenate([
        np.full(T, spec.max_charge_per_interval),
        np.full(T, spec.max_discharge_per_interval),
    ])
    return G, np.ascontiguousarray(C.T), upper, keep ** np.arange(1, T + 1)


def response_cost(own_load, others, tariff: TariffParams, billing: str = "interval") -> float:
    """Objective a household minimises, given everyone else's load per interval.

    ``interval``: the household's own bill when each interval is paid at its unit
    price (the fixed term c0 is left out). ``daily``: the neighbourhood generation
    cost, the convex stand-in for the energy-share bill.
    """
    l = np.asarray(own_load, dtype=float)
    o = np.asarray(others, dtype=float)
    if billing == "interval":
        return float(np.sum(tariff.c2 * l * (o + l) + tariff.c1 * l))
    if billing == "daily":
        y = o + l
        return float(np.sum(tariff.c2 * y * y + tariff.c1 * y))
    raise ValueError(f"unknown billing mode {billing!r}")


def best_response(own_forecast, others_aggregate, spec: BatterySpec, tariff: TariffParams,
                  soc0: float | None = None, billing: str = "interval") -> np.ndarray:
    """Cost-minimising feasible schedule with every other load held fixed.

    Solved exactly as a QP in (charge, discharge); the forecast load is kept
    non-negative (no export). Among equal-cost schedules the one with the least
    battery throughput is returned.
    """
    d = check_profile(own_forecast, name="own forecast")
    o = np.asarray(others_aggregate, dtype=float)
    if o.shape != d.shape:
        raise ValueError("forecast and others_aggregate must have the same length")
    if np.any(o < 0):
        raise ValueError("others_aggregate must be non-negative")
    s0 = spec.initial_soc if soc0 is None else float(soc0)
    if not -SOC_TOL <= s0 <= spec.capacity + SOC_TOL:
        raise ValueError(f"initial soc {s0} outside [0, {spec.capacity}]")
    s0 = min(max(s0, 0.0), spec.capacity)
    T = d.size
    if spec.capacity == 0:
        return np.zeros(T)
    G, Ct, upper, decay = _qp_matrices(spec, T, tariff.c2)
    if billing == "interval":
        lin = tariff.c2 * (o + 2.0 * d) + tariff.c1
    elif billing == "daily":
        lin = 2.0 * tariff.c2 * (o + d) + tariff.c1
    else:
        raise ValueError(f"unknown billing mode {billing!r}")
    b0 = np.concatenate([
        np.zeros(2 * T), -upper, -decay * s0, decay * s0 - spec.capacity, -d,
    ])
    try:
        x = quadprog.solve_qp(G, -np.concatenate([lin, -lin]), Ct, b0, 0)[0]
    except ValueError as exc:
        raise ValueError(f"best-response QP infeasible: {exc}") from exc
    a, _ = project_schedule(x[:T] - x[T:], spec, s0, demand=d)
    return a


def local_schedule(own_forecast, spec: BatterySpec, tariff: TariffParams,
                   soc0: float | None = None, billing: str = "interval") -> np.ndarray:
    """Mitigation: optimise the battery against the household's own forecast only."""
    d = np.asarray(own_forecast, dtype=float)
    return best_response(d, np.zeros_like(d), spec, tariff, soc0=soc0, billing=billing)


def previous_day_schedule(history: Sequence, spec: BatterySpec, soc0: float | None = None) -> np.ndarray:
    """Repeat yesterday's actions, truncated to what today's starting charge allows."""
    if history is None or len(history) == 0:
        raise ValueError("previous-day schedule needs at least one prior day")
    s0 = spec.initial_soc if soc0 is None else soc0
    a, _ = project_schedule(np.asarray(history[-1], dtype=float), spec, s0)
    return a


@dataclass
class GameOptions:
    eps_ne: float = 1e-6  # relative to each player's bill without battery use
    max_rounds: int = 200
    billing: str = "interval"


@dataclass
class GameResult:
    schedules: np.ndarray  # M x T; zero rows for non-participants
    converged: bool
    rounds: int
    improvements: np.ndarray  # last-round improvement per participant
    tolerances: np.ndarray  # eps_ne threshold per participant
    participants: tuple[int, ...] = field(default=())


def _spec_of(specs, n: int) -> BatterySpec:
    if isinstance(specs, BatterySpec):
        return specs
    if isinstance(specs, dict):
        return specs[n]
    return specs[n]


def play_scheduling_game(forecasts, participants, specs, tariff: TariffParams, soc0=None,
                         options: GameOptions | None = None) -> GameResult:
    """Round-robin best response on the forecasts until no player gains more than eps_ne.

    ``forecasts`` is the M x T matrix the game is played on (non-participants
    included as fixed loads). ``soc0`` maps household id to starting charge.
    """
    opts = options or GameOptions()
    F = check_profile(forecasts, name="forecasts")
    parts = tuple(int(p) for p in participants)
    A = np.zeros_like(F)
    s0 = {n: (_spec_of(specs, n).initial_soc if soc0 is None else float(soc0[n])) for n in parts}
    total = F.sum(axis=0)
    tol = np.empty(len(parts))
    for i, n in enumerate(parts):
        base = response_cost(F[n], total - F[n], tariff, opts.billing)
        tol[i] = opts.eps_ne * max(base, 1e-300)
    improvements = np.full(len(parts), np.inf)
    converged = False
    rounds = 0
    for rounds in range(1, opts.max_rounds + 1):
        for i, n in enumerate(parts):
            others = total - F[n] - A[n]
            old = response_cost(F[n] + A[n], others, tariff, opts.billing)
            a = best_response(F[n], np.maximum(others, 0.0), _spec_of(specs, n), tariff,
                              soc0=s0[n], billing=opts.billing)
            new = response_cost(F[n] + a, others, tariff, opts.billing)
            improvements[i] = old - new
            # Only move for a gain above tolerance: a round without moves then
            # certifies the eps-Nash property against the final profile.
            if improvements[i] > tol[i]:
                A[n] = a
                total = others + F[n] + a
        if np.all(improvements <= tol):
            converged = True
            break
    if not converged:
        logger.warning("scheduling game did not converge in %d rounds (worst gain %.3g)",
                       opts.max_rounds, float(np.max(improvements - tol)))
    return GameResult(A, converged, rounds, improvements.copy(), tol, parts)


def nash_gaps(forecasts, schedules, participants, specs, tariff: TariffParams, soc0=None,
              billing: str = "interval") -> np.ndarray:
    """How much each participant could still save by re-running its best response."""
    F = np.asarray(forecasts, dtype=float)
    A = np.asarray(schedules, dtype=float)
    total = (F + A).sum(axis=0)
    gaps = []
    for n in participants:
        spec = _spec_of(specs, n)
        s = spec.initial_soc if soc0 is None else float(soc0[n])
        others = total - F[n] - A[n]
        a = best_response(F[n], np.maximum(others, 0.0), spec, tariff, soc0=s, billing=billing)
        gaps.append(response_cost(F[n] + A[n], others, tariff, billing)
                    - response_cost(F[n] + a, others, tariff, billing))
    return np.array(gaps)


@dataclass
class DayExecution:
    loads: np.ndarray
    actions: np.ndarray  # delivered actions after clamping
    soc: np.ndarray  # M x (T+1); constant zero rows for non-participants
    bills: np.ndarray
    par: float

    @property
    def revenue(self) -> float:
        return float(self.bills.sum())

    @property
    def soc_end(self) -> np.ndarray:
        return self.soc[:, -1]


def execute_day(schedules, actual_demands, participants, specs, tariff: TariffParams,
                soc0=None, billing: str = "interval") -> DayExecution:
    """Follow the committed schedules on the actual demands and bill the result."""
    D = check_profile(actual_demands, name="demands")
    S = np.asarray(schedules, dtype=float)
    M, T = D.shape
    loads = D.copy()
    delivered = np.zeros_like(D)
    soc = np.zeros((M, T + 1))
    for n in participants:
        spec = _spec_of(specs, n)
        s = spec.initial_soc if soc0 is None else float(soc0[n])
        a, traj = project_schedule(S[n], spec, s, demand=D[n])
        delivered[n] = a
        soc[n] = traj
        loads[n] = np.maximum(D[n] + a, 0.0)
    b = bills(loads, tariff, billing)
    return DayExecution(loads, delivered, soc, b, par(loads.sum(axis=0)))
