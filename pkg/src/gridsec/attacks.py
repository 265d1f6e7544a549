"""Average-preserving false data injection on demand forecasts."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .grid import NeighborhoodConfig
from ._rng import substream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AttackSpec:
    """Forecast replacement applied to a fraction ``rho`` of the other participants.

    ``kind`` is ``"shift"`` (``param`` = sigma, intervals) or ``"scale"``
    (``param`` = tau). ``seed`` pins one victim set for a whole scenario; left as
    None, the harness draws victims per day.
    """

    kind: str
    param: float
    rho: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("shift", "scale"):
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if not 0 <= self.rho <= 1:
            raise ValueError("rho must lie in [0, 1]")
        if self.kind == "shift" and float(self.param) != int(self.param):
            raise ValueError("shift sigma must be an integer")

    @classmethod
    def shift(cls, sigma: int = 4, rho: float = 1.0, seed=None):
        return cls("shift", int(sigma), rho, seed)

    @classmethod
    def scale(cls, tau: float, rho: float = 1.0, seed=None):
        return cls("scale", float(tau), rho, seed)

    @classmethod
    def flat(cls, rho: float = 1.0, seed=None):
        return cls("scale", 0.0, rho, seed)

    @classmethod
    def mirror(cls, rho: float = 1.0, seed=None):
        return cls("scale", -1.0, rho, seed)

    @classmethod
    def named(cls, name: str, rho: float = 1.0, param=None, seed=None):
        """Build from a label: shift, flat, mirror, scale."""
        if name == "shift":
            return cls.shift(4 if param is None else int(param), rho, seed)
        if name == "flat":
            return cls.flat(rho, seed)
        if name == "mirror":
            return cls.mirror(rho, seed)
        if name == "scale":
            return cls.scale(2.0 if param is None else float(param), rho, seed)
        raise ValueError(f"unknown attack {name!r}")

    @property
    def label(self) -> str:
        if self.kind == "shift":
            return f"shift(sigma={int(self.param)})"
        if self.param == 0:
            return "flat"
        if self.param == -1:
            return "mirror"
        return f"scale(tau={self.param:g})"

    def transform(self, forecast) -> np.ndarray:
        if self.kind == "shift":
            return shift_attack(forecast, int(self.param))
        return scale_attack(forecast, self.param)


def shift_attack(forecast, sigma: int) -> np.ndarray:
    """Circular shift along the last axis: out[t] = in[(t - sigma) mod T]."""
    return np.roll(np.asarray(forecast, dtype=float), int(sigma), axis=-1)


def scale_attack(forecast, tau: float) -> np.ndarray:
    """Scale around the daily mean by ``tau``; values pushed below zero are set to zero."""
    f = np.asarray(forecast, dtype=float)
    mu = f.mean(axis=-1, keepdims=True)
    return np.maximum(0.0, mu + tau * (f - mu))


def select_victims(config: NeighborhoodConfig, rho: float, rng: np.random.Generator) -> tuple[int, ...]:
    """``round(rho*N)`` participants other than the attacker, drawn without replacement."""
    if config.attacker_id is None:
        raise ValueError("victim selection needs an attacker")
    if not 0 <= rho <= 1:
        raise ValueError("rho must lie in [0, 1]")
    pool = [p for p in config.participants if p != config.attacker_id]
    k = int(np.floor(rho * config.N + 0.5))
    if k > len(pool):
        logger.debug("round(rho*N) = %d exceeds the %d non-attacking participants; capped",
                       k, len(pool))
        k = len(pool)
    if k == 0:
        return ()
    return tuple(sorted(int(v) for v in rng.choice(pool, size=k, replace=False)))


def victim_stream(spec: AttackSpec, master_seed: int, day: int) -> np.random.Generator:
    """RNG for victim selection: fixed per scenario when ``spec.seed`` is set, else per day."""
    if spec.seed is not None:
        return substream(spec.seed, 0, 0, "victims")
    return substream(master_seed, day, 0, "victims")


@dataclass
class AttackOutcome:
    forecasts: np.ndarray
    victims: tuple[int, ...]
    sum_drift: float  # increase of the aggregated daily forecast caused by clamping


def apply_attack(forecasts, spec: AttackSpec, config: NeighborhoodConfig, rng: np.random.Generator,
                 victims=None) -> AttackOutcome:
    """Replace the victims' forecasts; every other row is returned untouched."""
    F = np.asarray(forecasts, dtype=float)
    if victims is None:
        victims = select_victims(config, spec.rho, rng)
    out = F.copy()
    if victims:
        idx = list(victims)
        out[idx] = spec.transform(F[idx])
    drift = float(out.sum() - F.sum())
    if drift > 0:
        logger.debug("clamping raised the aggregated forecast by %.4g", drift)
    return AttackOutcome(out, tuple(victims), drift)
