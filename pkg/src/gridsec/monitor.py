"""Forecast monitoring by the utility company: compare received forecasts with its own estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attacks import AttackSpec, apply_attack, victim_stream
from .forecast import ForecastErrorParams, mape, simulate_forecast
from .grid import NeighborhoodConfig
from ._rng import substream

DEFAULT_THRESHOLDS = {"average": 0.10, "deep-aggregated": 0.10, "deep-individual": 0.20}


@dataclass(frozen=True)
class MonitoringStrategy:
    """``kind``: average | deep-aggregated | deep-individual.

    ``mode`` selects the profile discrepancy: ``mean`` (daily MAPE) or the
    stricter ``max`` (largest relative deviation of any interval).
    """

    kind: str
    threshold: float | None = None
    mode: str = "mean"

    def __post_init__(self):
        if self.kind not in DEFAULT_THRESHOLDS:
            raise ValueError(f"unknown monitoring strategy {self.kind!r}")
        if self.threshold is None:
            object.__setattr__(self, "threshold", DEFAULT_THRESHOLDS[self.kind])
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")
        if self.mode not in ("mean", "max"):
            raise ValueError(f"unknown discrepancy mode {self.mode!r}")

    @classmethod
    def average_amount(cls, threshold=None):
        return cls("average", threshold)

    @classmethod
    def deep_aggregated(cls, threshold=None, mode="mean"):
        return cls("deep-aggregated", threshold, mode)

    @classmethod
    def deep_individual(cls, threshold=None, mode="mean"):
        return cls("deep-individual", threshold, mode)


@dataclass
class DetectionResult:
    detected: bool
    evidence: float | np.ndarray
    flagged: tuple[int, ...] = field(default=())


def discrepancy(received, estimate, mode: str = "mean"):
    """Relative gap between profiles, per profile along the last axis."""
    if mode == "mean":
        return mape(received, estimate)
    r = np.asarray(received, dtype=float)
    u = np.asarray(estimate, dtype=float)
    rel = np.divide(np.abs(r - u), np.abs(u), out=np.zeros_like(u), where=u != 0)
    out = rel.max(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def detect(received, uc_estimates, strategy: MonitoringStrategy, household_ids=None) -> DetectionResult:
    """Decide whether the received forecasts (rows = households) look tampered with."""
    R = np.asarray(received, dtype=float)
    U = np.asarray(uc_estimates, dtype=float)
    if R.shape != U.shape:
        raise ValueError(f"received {R.shape} and estimates {U.shape} differ in shape")
    if strategy.kind == "average":
        ref = U.sum()
        gap = abs(R.sum() - ref) / ref if ref > 0 else float(R.sum() > 0)
        return DetectionResult(bool(gap > strategy.threshold), float(gap))
    if strategy.kind == "deep-aggregated":
        gap = discrepancy(R.sum(axis=0), U.sum(axis=0), strategy.mode)
        return DetectionResult(bool(gap > strategy.threshold), float(gap))
    gaps = np.atleast_1d(discrepancy(R, U, strategy.mode))
    ids = np.arange(len(gaps)) if household_ids is None else np.asarray(household_ids)
    flagged = tuple(int(i) for i in ids[gaps > strategy.threshold])
    return DetectionResult(bool(flagged), gaps, flagged)


def detection_rate(attack: AttackSpec | None, strategy: MonitoringStrategy, corpus,
                   config: NeighborhoodConfig, params: ForecastErrorParams, seed: int) -> np.ndarray:
    """Per-day detection flags over a corpus of demand days (days x M x T)."""
    parts = list(config.participants)
    flags = []
    for day, D in enumerate(np.asarray(corpus, dtype=float)):
        F = np.array([simulate_forecast(D[m], params, substream(seed, day, m, "forecast"))
                      for m in range(D.shape[0])])
        U = np.array([simulate_forecast(D[m], params, substream(seed, day, m, "uc-estimate"))
                      for m in parts])
        if attack is not None:
            F = apply_attack(F, attack, config, victim_stream(attack, seed, day)).forecasts
        flags.append(detect(F[parts], U, strategy, household_ids=parts).detected)
    return np.array(flags, dtype=bool)


def max_undetected_rho(attack: AttackSpec, strategy: MonitoringStrategy, corpus,
                       config: NeighborhoodConfig, params: ForecastErrorParams, seed: int,
                       rho_grid=None) -> float:
    """Largest rho on the grid whose median outcome over the corpus is 'not detected'.

    Returns 0.0 when every grid point is detected.
    """
    if rho_grid is None:
        rho_grid = np.arange(config.N + 1) / config.N
    best = 0.0
    for rho in sorted(float(r) for r in rho_grid):
        a = AttackSpec(attack.kind, attack.param, rho, attack.seed)
        flags = detection_rate(a, strategy, corpus, config, params, seed)
        if flags.mean() <= 0.5:
            best = rho
    return best

