"""Brute-force equilibrium oracle for 2 x n bimatrix games.

The defender's mixed strategy is discretised on a grid; at each grid point the
attacker's (tolerance-widened) best-response set is computed, and the point is
kept if some attacker mix over that set makes the defender's mix a best response.
"""

import numpy as np


def defender_equilibrium_mask(A, B, step=1e-4, slack=None):
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    scale = max(np.abs(A).max(), np.abs(B).max(), 1e-12)
    slack = 2 * step * scale if slack is None else slack
    p = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    U = p[:, None] * B[0] + (1 - p[:, None]) * B[1]  # attacker payoff per column
    br = U >= U.max(axis=1, keepdims=True) - slack
    diff = A[0] - A[1]  # defender's gain from "row 0" against each column
    dmax = np.where(br, diff, -np.inf).max(axis=1)
    dmin = np.where(br, diff, np.inf).min(axis=1)
    interior = (dmin <= slack) & (dmax >= -slack)
    ok = interior.copy()
    ok[0] = dmin[0] <= slack  # pure row 1: some column where row 1 is no worse
    ok[-1] = dmax[-1] >= -slack
    return p, ok


def clusters(p, ok):
    """Contiguous runs of equilibrium grid points as (lo, hi)."""
    runs, start = [], None
    for i, flag in enumerate(ok):
        if flag and start is None:
            start = i
        if not flag and start is not None:
            runs.append((p[start], p[i - 1]))
            start = None
    if start is not None:
        runs.append((p[start], p[-1]))
    return runs


def matches(A, B, defender_probs, step=1e-4):
    """Every oracle run has a solver equilibrium in (or next to) it, and vice versa."""
    p, ok = defender_equilibrium_mask(A, B, step)
    runs = clusters(p, ok)
    pad = 10 * step
    sol = np.asarray(defender_probs, float)
    for lo, hi in runs:
        if not np.any((sol >= lo - pad) & (sol <= hi + pad)):
            return False, f"oracle run [{lo}, {hi}] has no solver equilibrium"
    for s in sol:
        if not any(lo - pad <= s <= hi + pad for lo, hi in runs):
            return False, f"solver equilibrium p={s} not confirmed by oracle"
    return True, ""
