"""Household demand data: long-format CSV I/O and a seeded two-peak synthetic generator."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._rng import substream

CSV_HEADER = ("household", "day", "interval", "kwh")


class DemandFormatError(ValueError):
    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(message if row is None else f"row {row}: {message}")


class DemandIOError(OSError):
    def __init__(self, path, reason: str):
        self.path = str(path)
        super().__init__(f"cannot read demand file {self.path}: {reason}")


@dataclass(frozen=True)
class SyntheticDemandParams:
    """Morning and evening peaks on a daily base, scaled per household and jittered per day."""

    M: int = 25
    days: int = 30
    T: int = 24
    seed: int = 0
    household_sigma: float = 0.25  # log-normal spread of household size
    daily_sigma: float = 0.08  # log-normal noise per interval and day
    morning_peak: float = 7.5  # hour of day
    evening_peak: float = 19.0

    def __post_init__(self):
        for name in ("M", "days", "T"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.household_sigma < 0 or self.daily_sigma < 0:
            raise ValueError("noise levels must be non-negative")


def two_peak_template(T: int = 24, morning_peak: float = 7.5, evening_peak: float = 19.0) -> np.ndarray:
    """Typical household day in kWh per hour, sampled at T intervals."""
    h = np.arange(T) * 24.0 / T
    base = 0.55 + 0.15 * np.cos((h - 15.0) / 24.0 * 2 * np.pi)
    peaks = (0.7 * np.exp(-0.5 * ((h - morning_peak) / 1.3) ** 2)
             + 1.1 * np.exp(-0.5 * ((h - evening_peak) / 1.8) ** 2))
    return (base + peaks) * 24.0 / T


def synthetic_demands(params: SyntheticDemandParams) -> np.ndarray:
    """M x days x T demand tensor, fully determined by ``params.seed``."""
    tmpl = two_peak_template(params.T, params.morning_peak, params.evening_peak)
    out = np.empty((params.M, params.days, params.T))
    for m in range(params.M):
        size = np.exp(substream(params.seed, 0, m, "household").normal(0.0, params.household_sigma))
        for d in range(params.days):
            noise = substream(params.seed, d, m, "demand").normal(0.0, params.daily_sigma, params.T)
            out[m, d] = size * tmpl * np.exp(noise)
    return out


def load_demands(path, T: int | None = None) -> np.ndarray:
    """Read a ``household,day,interval,kwh`` CSV into an M x days x T array.

    Every (household, day, interval) triple must appear exactly once and the
    indices must be contiguous from zero.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DemandIOError(path, exc.strerror or str(exc)) from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise DemandFormatError(f"header must be {','.join(CSV_HEADER)}", 1)
        records = []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DemandFormatError(f"expected 4 fields, got {len(row)}", row_no)
            try:
                m, d, t = (int(v) for v in row[:3])
                kwh = float(row[3])
            except ValueError as exc:
                raise DemandFormatError(f"unparsable value ({exc})", row_no) from None
            if min(m, d, t) < 0:
                raise DemandFormatError("indices must be non-negative", row_no)
            if not np.isfinite(kwh) or kwh < 0:
                raise DemandFormatError(f"demand must be a non-negative real, got {row[3]}", row_no)
            records.append((m, d, t, kwh, row_no))
    if not records:
        raise DemandFormatError("no data rows")
    M = max(r[0] for r in records) + 1
    days = max(r[1] for r in records) + 1
    T_found = max(r[2] for r in records) + 1
    if T is not None and T_found != T:
        raise DemandFormatError(f"file has {T_found} intervals per day, expected {T}")
    if len(records) % T_found:
        raise DemandFormatError(f"{len(records)} rows is not a multiple of T={T_found}")
    out = np.full((M, days, T_found), np.nan)
    for m, d, t, kwh, row_no in records:
        if not np.isnan(out[m, d, t]):
            raise DemandFormatError(f"duplicate entry for household {m}, day {d}, interval {t}", row_no)
        out[m, d, t] = kwh
    if np.isnan(out).any():
        m, d, t = np.argwhere(np.isnan(out))[0]
        raise DemandFormatError(f"missing entry for household {m}, day {d}, interval {t}")
    return out


def write_demands(path, demands) -> None:
    D = np.asarray(demands, dtype=float)
    if D.ndim != 3:
        raise ValueError("demands must be M x days x T")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for (m, d, t), v in np.ndenumerate(D):
            w.writerow((m, d, t, repr(float(v))))
