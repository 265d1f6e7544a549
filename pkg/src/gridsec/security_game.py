"""Two-player monitoring game between the utility company and a forecast attacker.

The utility (rows) either monitors the aggregated forecast profile or not; the
attacker (columns) launches a weak attack, a strong attack, or none. Equilibria of
the 2 x 3 bimatrix game are found exactly by support enumeration.
"""

from __future__ import annotations

import enum
import itertools
import logging
from dataclasses import asdict, dataclass, field, fields

import numpy as np

logger = logging.getLogger(__name__)

ROW_LABELS = ("mon", "-mon")
COL_LABELS = ("att°", "att", "-att")


class AssumptionError(ValueError):
    def __init__(self, violated):
        self.violated = list(violated)
        names = ", ".join(f"{name} ({text})" for name, text in self.violated)
        super().__init__(f"game assumptions violated: {names}")


@dataclass(frozen=True)
class SecurityGamePayoffs:
    """Costs and losses of the game; the attacker's benefit equals the utility's loss."""

    c_mon: float
    c_def: float
    l_att_weak: float
    l_att_strong: float
    c_att_weak: float
    c_att_strong: float

    @property
    def b_weak(self) -> float:
        return self.l_att_weak

    @property
    def b_strong(self) -> float:
        return self.l_att_strong

    @property
    def scale(self) -> float:
        return max(abs(v) for v in asdict(self).values())

    def checks(self) -> list[tuple[str, str, bool]]:
        """Every modelling assumption as (name, inequality, satisfied)."""
        p = self
        return [
            ("positive_monitoring_cost", "c_mon > 0", p.c_mon > 0),
            ("non_negative_defence_cost", "c_def >= 0", p.c_def >= 0),
            ("weak_attack_profitable", "c_att_weak < l_att_weak", p.c_att_weak < p.l_att_weak),
            ("strong_attack_costlier", "c_att_strong > c_att_weak", p.c_att_strong > p.c_att_weak),
            ("strong_attack_more_damaging", "l_att_strong > l_att_weak", p.l_att_strong > p.l_att_weak),
            ("prevention_cheaper_than_damage", "c_mon + c_def < l_att_strong",
             p.c_mon + p.c_def < p.l_att_strong),
            ("strong_attack_profitable", "l_att_strong - c_att_strong > 0",
             p.l_att_strong - p.c_att_strong > 0),
            ("positive_attack_costs", "c_att_weak > 0 and c_att_strong > 0",
             p.c_att_weak > 0 and p.c_att_strong > 0),
        ]

    def violations(self) -> list[tuple[str, str]]:
        return [(name, text) for name, text, ok in self.checks() if not ok]

    def validate(self):
        bad = self.violations()
        if bad:
            raise AssumptionError(bad)
        return self


@dataclass(frozen=True)
class BimatrixGame:
    A: np.ndarray  # row player (utility) payoffs
    B: np.ndarray  # column player (attacker) payoffs
    row_labels: tuple[str, ...] = ROW_LABELS
    col_labels: tuple[str, ...] = COL_LABELS

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if A.shape != B.shape or A.ndim != 2:
            raise ValueError("payoff matrices must be 2-D with equal shapes")
        if A.shape != (len(self.row_labels), len(self.col_labels)):
            raise ValueError("labels do not match matrix dimensions")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def shape(self):
        return self.A.shape

    def scaled(self, c: float) -> "BimatrixGame":
        return BimatrixGame(self.A * c, self.B * c, self.row_labels, self.col_labels)

    def tolerance(self) -> float:
        return 1e-9 * max(np.abs(self.A).max(), np.abs(self.B).max())


@dataclass
class EquilibriumProfile:
    defender: np.ndarray
    attacker: np.ndarray
    kind: str  # pure-strict | pure-non-strict | mixed
    payoff_defender: float
    payoff_attacker: float
    defender_gain: float = 0.0  # best unilateral improvement (certificate, <= tol)
    attacker_gain: float = 0.0
    row_labels: tuple[str, ...] = field(default=ROW_LABELS)
    col_labels: tuple[str, ...] = field(default=COL_LABELS)

    @property
    def joint(self) -> np.ndarray:
        return np.outer(self.defender, self.attacker)

    @property
    def is_pure(self) -> bool:
        return self.kind.startswith("pure")

    def pure_labels(self) -> tuple[str, str] | None:
        if not self.is_pure:
            return None
        return self.row_labels[int(np.argmax(self.defender))], self.col_labels[int(np.argmax(self.attacker))]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "defender": dict(zip(self.row_labels, map(float, self.defender))),
            "attacker": dict(zip(self.col_labels, map(float, self.attacker))),
            "joint": {r: dict(zip(self.col_labels, map(float, row)))
                      for r, row in zip(self.row_labels, self.joint)},
            "expected_payoffs": {"defender": self.payoff_defender, "attacker": self.payoff_attacker},
            "certificate": {"defender_max_gain": self.defender_gain,
                            "attacker_max_gain": self.attacker_gain},
        }


class Case(enum.Enum):
    CASE1 = "case1"  # weak attack nets more: unique strict pure NE (-mon, att°)
    CASE2 = "case2"  # strong attack nets more: no pure NE
    CASE3 = "case3"  # equal net benefits: non-strict pure NE (-mon, att°)


def build_game(p: SecurityGamePayoffs) -> BimatrixGame:
    A = np.array([
        [-p.c_mon - p.l_att_weak, -p.c_mon - p.c_def, -p.c_mon],
        [-p.l_att_weak, -p.l_att_strong, 0.0],
    ])
    B = np.array([
        [p.l_att_weak - p.c_att_weak, -p.c_att_strong, 0.0],
        [p.l_att_weak - p.c_att_weak, p.l_att_strong - p.c_att_strong, 0.0],
    ])
    return BimatrixGame(A + 0.0, B + 0.0)


def ids_game(alpha_c, alpha_f, alpha_m, beta_c, beta_s) -> BimatrixGame:
    """Classic two-by-two intrusion detection game (monitor/not vs attack/not)."""
    A = np.array([[alpha_c, -alpha_f], [-alpha_m, 0.0]])
    B = np.array([[-beta_c, 0.0], [beta_s, 0.0]])
    return BimatrixGame(A + 0.0, B + 0.0, ROW_LABELS, ("att", "-att"))


def ids_parameters(p: SecurityGamePayoffs) -> dict:
    """Intrusion-detection parameters implied by the security game payoffs."""
    return {
        "alpha_c": -p.c_mon - p.c_def,
        "alpha_f": p.c_mon,
        "alpha_m": p.l_att_strong,
        "beta_c": p.c_att_strong,
        "beta_s": p.l_att_strong - p.c_att_strong,
    }


def restrict_to_ids(game: BimatrixGame) -> BimatrixGame:
    """Drop the weak-attack column."""
    return BimatrixGame(game.A[:, 1:], game.B[:, 1:], game.row_labels, game.col_labels[1:])


def delta(p: SecurityGamePayoffs) -> float:
    """Weak-attack net benefit minus strong-attack net benefit."""
    return (p.l_att_weak - p.c_att_weak) - (p.l_att_strong - p.c_att_strong)


def classify_case(p: SecurityGamePayoffs, tol: float | None = None) -> Case:
    p.validate()
    if tol is None:
        tol = 1e-9 * p.scale
    d = delta(p)
    if d > tol:
        return Case.CASE1
    if d < -tol:
        return Case.CASE2
    return Case.CASE3


def deviation_gains(game: BimatrixGame, x, y) -> tuple[float, float]:
    """Largest gain either player gets from a unilateral pure deviation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    vd = x @ game.A @ y
    va = x @ game.B @ y
    return float(np.max(game.A @ y) - vd), float(np.max(x @ game.B) - va)


def _profile(game: BimatrixGame, x, y, tol: float) -> EquilibriumProfile:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gd, ga = deviation_gains(game, x, y)
    pure = x.max() >= 1 - 1e-12 and y.max() >= 1 - 1e-12
    if pure:
        i, j = int(np.argmax(x)), int(np.argmax(y))
        a_dev = np.delete(game.A[:, j], i)
        b_dev = np.delete(game.B[i, :], j)
        strict = np.all(a_dev < game.A[i, j] - tol) and np.all(b_dev < game.B[i, j] - tol)
        kind = "pure-strict" if strict else "pure-non-strict"
    else:
        kind = "mixed"
    return EquilibriumProfile(x, y, kind, float(x @ game.A @ y), float(x @ game.B @ y), gd, ga,
                              game.row_labels, game.col_labels)


def pure_ne(game: BimatrixGame, tol: float | None = None) -> list[EquilibriumProfile]:
    """All pure profiles where no player gains from a unilateral deviation."""
    tol = game.tolerance() if tol is None else tol
    m, n = game.shape
    out = []
    for i, j in itertools.product(range(m), range(n)):
        if game.A[i, j] >= game.A[:, j].max() - tol and game.B[i, j] >= game.B[i, :].max() - tol:
            out.append(_profile(game, np.eye(m)[i], np.eye(n)[j], tol))
    return out


def _indifference(M: np.ndarray, rows, cols, tol: float):
    """Mix over ``cols`` making the rows of ``M[rows, cols]`` pay the same; None if not unique."""
    sub = M[np.ix_(rows, cols)]
    k = len(cols)
    lhs = np.zeros((len(rows) + 1, k + 1))
    lhs[:-1, :k] = sub
    lhs[:-1, k] = -1.0
    lhs[-1, :k] = 1.0
    rhs = np.zeros(len(rows) + 1)
    rhs[-1] = 1.0
    if np.linalg.matrix_rank(lhs) < k + 1:
        return None
    sol, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    if np.max(np.abs(lhs @ sol - rhs)) > max(tol, 1e-12):
        return None
    return sol[:k]


def mixed_ne(game: BimatrixGame, tol: float | None = None) -> list[EquilibriumProfile]:
    """All equilibria reachable by support enumeration, pure ones included.

    Support pairs whose indifference system has no unique solution (degenerate
    games) are skipped.
    """
    tol = game.tolerance() if tol is None else tol
    m, n = game.shape
    found: list[EquilibriumProfile] = []
    for size_r in range(1, m + 1):
        for rows in itertools.combinations(range(m), size_r):
            for size_c in range(1, n + 1):
                for cols in itertools.combinations(range(n), size_c):
                    xs = _indifference(game.B.T, cols, rows, tol)
                    ys = _indifference(game.A, rows, cols, tol)
                    if xs is None or ys is None:
                        logger.debug("support %s x %s skipped: no unique indifference solution", rows, cols)
                        continue
                    if xs.min() < -1e-12 or ys.min() < -1e-12:
                        continue
                    x = np.zeros(m)
                    y = np.zeros(n)
                    x[list(rows)] = np.clip(xs, 0.0, None)
                    y[list(cols)] = np.clip(ys, 0.0, None)
                    x /= x.sum()
                    y /= y.sum()
                    gd, ga = deviation_gains(game, x, y)
                    if gd > tol or ga > tol:
                        continue
                    if any(np.allclose(x, f.defender, atol=1e-9, rtol=0) and
                           np.allclose(y, f.attacker, atol=1e-9, rtol=0) for f in found):
                        continue
                    found.append(_profile(game, x, y, tol))
    return found


def payoffs_from_stats(gamma_strong: float, rho_strong: float, gamma_weak: float, rho_weak: float,
                       lam: float, kappa: float, c_mon: float = 0.0, c_def: float = 0.0) -> SecurityGamePayoffs:
    """Losses from bill-reduction magnitudes times the bill; costs linear in targeted fraction."""
    for name, r in (("rho_strong", rho_strong), ("rho_weak", rho_weak)):
        if not 0 <= r <= 1:
            raise ValueError(f"{name} must be a fraction in [0, 1]")
    return SecurityGamePayoffs(
        c_mon=c_mon,
        c_def=c_def,
        l_att_weak=abs(gamma_weak) * lam,
        l_att_strong=abs(gamma_strong) * lam,
        c_att_weak=rho_weak * kappa,
        c_att_strong=rho_strong * kappa,
    )


@dataclass
class Case2Check:
    lhs: float  # (gamma_weak - gamma_strong) / (rho_weak - rho_strong)
    cost_ratio: float  # kappa / lambda
    holds: bool
    weak_bound: float  # gamma_weak / rho_weak
    weak_bound_holds: bool


def case2_condition(gamma_strong, rho_strong, gamma_weak, rho_weak, kappa, lam) -> Case2Check:
    """Threshold on kappa/lambda above which the stats no longer give a mixed-only game."""
    if rho_weak == rho_strong:
        raise ValueError("weak and strong attacks target the same fraction; condition undefined")
    gs, gw = abs(gamma_strong), abs(gamma_weak)
    lhs = (gw - gs) / (rho_weak - rho_strong)
    ratio = kappa / lam
    bound = gw / rho_weak if rho_weak > 0 else float("inf")
    return Case2Check(lhs, ratio, lhs > ratio, bound, bound > ratio)


def sample_payoffs(case: Case, rng: np.random.Generator) -> SecurityGamePayoffs:
    """Random payoff vector satisfying every assumption and falling in ``case``."""
    lw = rng.uniform(0.5, 10.0)
    cw = rng.uniform(0.05, 0.95) * lw
    qw = lw - cw
    ls = lw + rng.uniform(0.5, 30.0)
    if case is Case.CASE1:
        qs = rng.uniform(0.05, 0.95) * qw
    elif case is Case.CASE2:
        qs = qw + rng.uniform(0.05, 0.95) * (ls - cw - qw)
    else:
        qs = qw
    cs = ls - qs
    c_mon = rng.uniform(0.02, 0.6) * ls
    c_def = rng.uniform(0.0, 0.95) * (ls - c_mon)
    return SecurityGamePayoffs(c_mon, c_def, lw, ls, cw, cs)


def monitoring_probability_report(n: int, rng: np.random.Generator, threshold: float = 0.70) -> dict:
    """Share of random mixed-only instances whose equilibrium monitors with p >= threshold."""
    probs = []
    for _ in range(n):
        g = build_game(sample_payoffs(Case.CASE2, rng))
        probs.extend(float(e.defender[0]) for e in mixed_ne(g) if e.kind == "mixed")
    probs = np.array(probs)
    return {
        "instances": n,
        "equilibria": int(probs.size),
        "threshold": threshold,
        "share_at_or_above": float(np.mean(probs >= threshold)) if probs.size else float("nan"),
        "min_p_mon": float(probs.min()) if probs.size else float("nan"),
        "median_p_mon": float(np.median(probs)) if probs.size else float("nan"),
    }


_RECORD_KEYS = [f.name for f in fields(SecurityGamePayoffs)]


def write_game_record(p: SecurityGamePayoffs) -> str:
    lines = [f"{k} = {getattr(p, k)!r}" for k in _RECORD_KEYS]
    lines.append("rows = " + ",".join(ROW_LABELS))
    lines.append("cols = " + ",".join(COL_LABELS))
    return "\n".join(lines) + "\n"


def read_game_record(text: str) -> SecurityGamePayoffs:
    """Parse ``key = value`` lines (``#`` comments allowed) into payoffs."""
    vals = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in ("rows", "cols"):
            expected = ROW_LABELS if key == "rows" else COL_LABELS
            if tuple(s.strip() for s in value.split(",")) != expected:
                raise ValueError(f"line {lineno}: {key} must be {','.join(expected)}")
            continue
        if key not in _RECORD_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        vals[key] = float(value)
    missing = set(_RECORD_KEYS) - set(vals)
    if missing:
        raise ValueError(f"missing payoff values: {sorted(missing)}")
    return SecurityGamePayoffs(**vals)
