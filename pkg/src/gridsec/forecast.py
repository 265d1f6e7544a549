"""Synthetic demand forecasts: smoothed Gaussian errors proportional to the demand."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .grid import DomainError, check_profile


@dataclass(frozen=True)
class ForecastErrorParams:
    relative_sigma: float = 0.17
    target_mape: float = 0.08
    boundary: str = "circular"  # or "truncate": average only the neighbours that exist

    def __post_init__(self):
        if not self.relative_sigma > 0:
            raise ValueError("relative_sigma must be > 0")
        if not 0 < self.target_mape < 1:
            raise ValueError("target_mape must lie in (0, 1)")
        if self.boundary not in ("circular", "truncate"):
            raise ValueError(f"unknown boundary {self.boundary!r}")


def smooth_errors(raw, boundary: str = "circular") -> np.ndarray:
    """Three-point moving average of raw errors along the last axis."""
    e = np.asarray(raw, dtype=float)
    if boundary == "circular":
        return (np.roll(e, 1, axis=-1) + e + np.roll(e, -1, axis=-1)) / 3.0
    if boundary == "truncate":
        acc = e.copy()
        cnt = np.ones(e.shape[-1])
        acc[..., 1:] += e[..., :-1]
        acc[..., :-1] += e[..., 1:]
        cnt[1:] += 1
        cnt[:-1] += 1
        return acc / cnt
    raise ValueError(f"unknown boundary {boundary!r}")


def simulate_forecast(actual, params: ForecastErrorParams, rng: np.random.Generator,
                      standard_normals=None) -> np.ndarray:
    """Forecast = actual + smoothed error, floored at zero.

    ``standard_normals`` may supply the unit draws directly (same shape as
    ``actual``); this is how calibration reuses one set of draws across sigmas.
    """
    d = check_profile(actual, name="actual demand")
    z = rng.standard_normal(d.shape) if standard_normals is None else np.asarray(standard_normals)
    raw = d * params.relative_sigma * z
    return np.maximum(0.0, d + smooth_errors(raw, params.boundary))


def mape(forecast, actual):
    """Mean absolute relative error over intervals with non-zero actual value.

    Works along the last axis, so a stack of profiles gives one value per profile.
    """
    f = np.asarray(forecast, dtype=float)
    d = np.asarray(actual, dtype=float)
    if f.shape != d.shape:
        raise ValueError(f"shape mismatch {f.shape} vs {d.shape}")
    mask = d != 0
    n = mask.sum(axis=-1)
    if np.any(n == 0):
        raise DomainError("MAPE undefined: every interval of the reference is zero")
    rel = np.divide(np.abs(f - d), np.abs(d), out=np.zeros_like(d), where=mask)
    out = rel.sum(axis=-1) / n
    return float(out) if np.ndim(out) == 0 else out


def calibrate_sigma(demands, params: ForecastErrorParams, rng: np.random.Generator,
                    tol: float = 1e-6) -> ForecastErrorParams:
    """Bisect relative_sigma so the mean individual MAPE over ``demands`` hits the target.

    ``demands`` is any stack of daily profiles (..., T). One set of normal draws is
    reused for every trial sigma, which makes the MAPE monotone in sigma.
    """
    d = check_profile(demands, name="demands")
    z = rng.standard_normal(d.shape)

    def err(sigma):
        p = replace(params, relative_sigma=sigma)
        f = simulate_forecast(d, p, rng, standard_normals=z)
        return float(np.mean(mape(f, d)))

    lo, hi = 1e-6, 4.0
    if err(hi) < params.target_mape:
        raise ValueError("target MAPE not reachable")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if err(mid) < params.target_mape:
            lo = mid
        else:
            hi = mid
    return replace(params, relative_sigma=0.5 * (lo + hi))
