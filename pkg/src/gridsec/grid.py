"""Neighbourhood data model, quadratic tariff, billing and peak-to-average ratio."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a grid quantity."""


@dataclass(frozen=True)
class TariffParams:
    """Quadratic per-interval generation cost ``c2*y**2 + c1*y + c0``."""

    c2: float = 1.0
    c1: float = 0.0
    c0: float = 0.0

    def __post_init__(self):
        if not self.c2 > 0:
            raise ValueError(f"c2 must be > 0, got {self.c2}")
        if self.c1 < 0 or self.c0 < 0:
            raise ValueError("c1 and c0 must be >= 0")


@dataclass(frozen=True)
class NeighborhoodConfig:
    M: int
    participants: tuple[int, ...] = field(default=())
    attacker_id: int | None = None

    def __post_init__(self):
        parts = tuple(sorted(set(int(p) for p in self.participants)))
        object.__setattr__(self, "participants", parts)
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if any(p < 0 or p >= self.M for p in parts):
            raise ValueError(f"participants must lie in 0..{self.M - 1}")
        if self.attacker_id is not None and self.attacker_id not in parts:
            raise ValueError("attacker must be a participant")

    @classmethod
    def with_participation(cls, M: int, rate: float, attacker_id: int | None = 0):
        """First ``round(rate*M)`` households participate; household 0 attacks by default."""
        n = int(np.floor(rate * M + 0.5))
        if n < 1 and attacker_id is not None:
            raise ValueError("participation too low to host an attacker")
        return cls(M=M, participants=tuple(range(n)), attacker_id=attacker_id)

    @property
    def N(self) -> int:
        return len(self.participants)

    @property
    def participation_rate(self) -> float:
        return self.N / self.M


def check_profile(values, T: int | None = None, name: str = "profile") -> np.ndarray:
    """Validate a demand/forecast series (or a stack of them) and return it as floats."""
    arr = np.asarray(values, dtype=float)
    if T is not None and arr.shape[-1] != T:
        raise ValueError(f"{name} has {arr.shape[-1]} intervals, expected {T}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if np.any(arr < 0):
        raise ValueError(f"{name} contains negative values")
    return arr


def unit_cost(aggregated_load, tariff: TariffParams):
    """Generation cost g(y) of serving aggregated load ``y`` in one interval."""
    y = np.asarray(aggregated_load, dtype=float)
    if np.any(y < 0):
        raise DomainError("aggregated load must be non-negative")
    out = tariff.c2 * y * y + tariff.c1 * y + tariff.c0
    return float(out) if out.ndim == 0 else out


def aggregate_load(loads) -> np.ndarray:
    """Column sums of an M x T load matrix."""
    return np.asarray(loads, dtype=float).sum(axis=0)


def par(aggregated) -> float:
    agg = np.asarray(aggregated, dtype=float)
    total = agg.sum()
    if not total > 0:
        raise DomainError("PAR undefined for an all-zero load curve")
    return float(agg.size * agg.max() / total)


def total_cost(loads, tariff: TariffParams) -> float:
    return float(np.sum(unit_cost(aggregate_load(loads), tariff)))


def bills(loads, tariff: TariffParams, billing: str = "daily") -> np.ndarray:
    """Positive bill of every household in the load matrix.

    ``daily`` shares the day's total generation cost by each household's share of
    daily energy. ``interval`` shares every interval's cost by the share of that
    interval's energy, i.e. each kWh is paid at the unit price ``g(L)/L`` of the
    interval it is drawn in. Both partition the total cost exactly.
    """
    l = np.asarray(loads, dtype=float)
    if np.any(l < 0):
        raise DomainError("loads must be non-negative")
    agg = l.sum(axis=0)
    cost = unit_cost(agg, tariff)
    if billing == "daily":
        grand = l.sum()
        if not grand > 0:
            raise DomainError("zero grid total")
        return l.sum(axis=1) / grand * float(np.sum(cost))
    if billing == "interval":
        if np.any((agg == 0) & (cost > 0)):
            raise DomainError("fixed cost in an interval without load cannot be shared")
        share = np.divide(l, agg, out=np.zeros_like(l), where=agg > 0)
        return share @ cost
    raise ValueError(f"unknown billing mode {billing!r}")


def bill(household_id: int, loads, tariff: TariffParams, billing: str = "daily") -> float:
    return float(bills(loads, tariff, billing)[household_id])


def unit_prices(aggregated, tariff: TariffParams) -> np.ndarray:
    """Price per kWh in each interval, g(L)/L (zero where nothing is drawn)."""
    agg = np.asarray(aggregated, dtype=float)
    cost = unit_cost(agg, tariff)
    return np.divide(cost, agg, out=np.zeros_like(agg), where=agg > 0)
