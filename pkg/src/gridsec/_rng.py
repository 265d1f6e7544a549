"""Deterministic random substreams keyed by (master seed, day, household, purpose)."""

import numpy as np

PURPOSES = {
    "demand": 0,
    "forecast": 1,
    "uc-estimate": 2,
    "victims": 3,
    "household": 4,
    "calibration": 5,
}


def substream(master: int, day: int = 0, household: int = 0, purpose: str = "forecast"):
    key = (int(day), int(household), PURPOSES[purpose])
    return np.random.default_rng(np.random.SeedSequence(int(master), spawn_key=key))
