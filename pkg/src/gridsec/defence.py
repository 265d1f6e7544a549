"""Turn simulated attack statistics into the monitoring game and report its equilibria."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .security_game import (Case, build_game, case2_condition, classify_case, delta, mixed_ne,
                            payoffs_from_stats, pure_ne)


class DefenceRefused(ValueError):
    def __init__(self, reason: str, violations=()):
        self.violations = [{"name": n, "inequality": t} for n, t in violations]
        super().__init__(reason)


@dataclass(frozen=True)
class AttackStats:
    """Bill-reduction magnitudes (fractions) for a strong and a weak variant of one attack.

    ``strong_detectable`` states whether the available monitoring catches the
    strong variant; the game is only meaningful when it does.
    """

    gamma_strong: float
    rho_strong: float
    gamma_weak: float
    rho_weak: float
    attack: str = ""
    strong_detectable: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> "AttackStats":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown stats keys: {sorted(unknown)}")
        return cls(**known)


def stats_from_sweep(sweep, attack: str, rho_strong: float, rho_weak: float,
                     participation: float = 1.0, strong_detectable: bool = True) -> AttackStats:
    """Median attacker savings of two sweep cells; a bill increase counts as zero saving."""
    gs = max(0.0, -sweep.cell(attack, participation, rho_strong).summary["attacker_change"]["median"]) / 100
    gw = max(0.0, -sweep.cell(attack, participation, rho_weak).summary["attacker_change"]["median"]) / 100
    return AttackStats(gs, rho_strong, gw, rho_weak, attack, strong_detectable)


def solve_defence(stats: AttackStats, lam: float, kappa: float, c_mon: float, c_def: float) -> dict:
    """Payoffs, assumption checks, case, equilibria and the cost-ratio condition as one report."""
    if not stats.strong_detectable:
        raise DefenceRefused("the strong attack is not detectable by the available monitoring, "
                             "so the monitoring game does not apply")
    p = payoffs_from_stats(stats.gamma_strong, stats.rho_strong, stats.gamma_weak, stats.rho_weak,
                           lam, kappa, c_mon, c_def)
    bad = p.violations()
    if bad:
        names = "; ".join(t for _, t in bad)
        raise DefenceRefused(f"assumptions violated: {names}", bad)
    case = classify_case(p)
    game = build_game(p)
    eqs = mixed_ne(game)
    report = {
        "attack": stats.attack,
        "inputs": {**asdict(stats), "lambda": lam, "kappa": kappa},
        "payoffs": asdict(p),
        "matrices": {"defender": game.A.tolist(), "attacker": game.B.tolist()},
        "assumptions": [{"name": n, "inequality": t, "satisfied": ok} for n, t, ok in p.checks()],
        "delta": delta(p),
        "case": case.value,
        "pure_equilibria": [e.to_dict() for e in pure_ne(game)],
        "equilibria": [e.to_dict() for e in eqs],
        "recommendation": _recommend(case, eqs),
    }
    if stats.rho_weak != stats.rho_strong:
        c = case2_condition(stats.gamma_strong, stats.rho_strong, stats.gamma_weak, stats.rho_weak, kappa, lam)
        report["cost_ratio_condition"] = asdict(c)
    return report


def _recommend(case: Case, eqs) -> str:
    if case is not Case.CASE2:
        return "do not monitor; weak attack expected"
    mixed = [e for e in eqs if e.kind == "mixed"]
    if not mixed:
        return "no equilibrium found"
    e = mixed[0]
    return (f"monitor with probability {e.defender[0]:.3f}; attacker plays weak/strong "
            f"with probabilities {e.attacker[0]:.3f}/{e.attacker[1]:.3f}")


def report_numbers(report: dict) -> dict:
    """Flat view of the first mixed equilibrium, handy for tables."""
    mixed = [e for e in report["equilibria"] if e["kind"] == "mixed"]
    if not mixed:
        return {}
    e = mixed[0]
    joint = np.array([[e["joint"][r][c] for c in ("att°", "att")] for r in ("mon", "-mon")])
    return {"p_mon": e["defender"]["mon"], "p_att_weak": e["attacker"]["att°"],
            "p_att_strong": e["attacker"]["att"], "p_no_att": e["attacker"]["-att"],
            "joint_pct": (100 * joint).round(1).tolist()}
