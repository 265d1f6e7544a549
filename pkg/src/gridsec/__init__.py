"""Demand-side management under forecast tampering: battery scheduling game, attacks,
monitoring, and the utility/attacker monitoring game."""

from .attacks import AttackSpec, apply_attack, scale_attack, select_victims, shift_attack
from .battery import (BatterySpec, GameOptions, best_response, execute_day, local_schedule,
                      play_scheduling_game, validate_schedule)
from .forecast import ForecastErrorParams, mape, simulate_forecast
from .grid import DomainError, NeighborhoodConfig, TariffParams, aggregate_load, bill, bills, par, unit_cost
from .monitor import MonitoringStrategy, detect
from .security_game import (BimatrixGame, Case, SecurityGamePayoffs, build_game, classify_case, delta,
                            mixed_ne, payoffs_from_stats, pure_ne)

__version__ = "0.1.0"
