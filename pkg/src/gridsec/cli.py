"""Command line entry point: simulate, sweep, solve-game, detect, gen-demand."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import demand as demand_io
from .config import load_config
from .defence import AttackStats, DefenceRefused, solve_defence
from .monitor import MonitoringStrategy, detect
from .security_game import (build_game, classify_case, mixed_ne, monitoring_probability_report,
                            pure_ne, read_game_record)
from . import simulation


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _emit(obj, out: str | None):
    text = json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_simulate(args):
    overrides = list(args.set)
    if args.out:
        overrides.append(f"output.dir={json.dumps(str(Path(args.out).resolve()))}")
    cfg = load_config(args.config, overrides)
    result = simulation.run_scenario(cfg)
    paths = simulation.write_scenario(result, cfg.output_dir)
    if args.figures or cfg.figures:
        from .plotting import plot_scenario
        paths["figure"] = plot_scenario(result, cfg.output_dir / "scenario.png")
    _emit({"outputs": {k: str(v) for k, v in paths.items()}, "summary": result.summary}, None)


def cmd_sweep(args):
    overrides = list(args.set)
    if args.out:
        overrides.append(f"output.dir={json.dumps(str(Path(args.out).resolve()))}")
    cfg = load_config(args.config, overrides)
    res = simulation.sweep(cfg, args.participation, args.rho,
                           tuple(args.attacks.split(",")) if args.attacks else None,
                           workers=args.workers)
    paths = {k: str(v) for k, v in simulation.write_sweep(res, cfg.output_dir).items()}
    if args.figures or cfg.figures:
        from .plotting import plot_sweep
        paths["figures"] = [str(p) for p in plot_sweep(res, cfg.output_dir)]
    _emit({"outputs": paths, "cells": len(res.cells)}, None)


def cmd_solve_game(args):
    if args.sample_report:
        _emit(monitoring_probability_report(args.sample_report, np.random.default_rng(args.seed)), args.out)
        return
    if args.payoffs:
        p = read_game_record(Path(args.payoffs).read_text(encoding="utf-8"))
        bad = p.violations()
        if bad:
            raise DefenceRefused("assumptions violated: " + "; ".join(t for _, t in bad), bad)
        game = build_game(p)
        _emit({"case": classify_case(p).value,
               "pure_equilibria": [e.to_dict() for e in pure_ne(game)],
               "equilibria": [e.to_dict() for e in mixed_ne(game)]}, args.out)
        return
    if args.stats:
        raw = json.loads(Path(args.stats).read_text(encoding="utf-8"))
        params = {k: raw.pop(k) for k in ("lambda", "kappa", "c_mon", "c_def") if k in raw}
        stats = AttackStats.from_dict(raw)
    else:
        missing = [f for f in ("gamma_strong", "rho_strong", "gamma_weak", "rho_weak")
                   if getattr(args, f) is None]
        if missing:
            raise CliError("solve-game needs --stats, --payoffs or all of "
                           + ", ".join("--" + m.replace("_", "-") for m in missing))
        stats = AttackStats(args.gamma_strong, args.rho_strong, args.gamma_weak, args.rho_weak,
                            args.attack, not args.strong_undetectable)
        params = {}
    for key, flag in (("lambda", args.lam), ("kappa", args.kappa), ("c_mon", args.c_mon), ("c_def", args.c_def)):
        if flag is not None:
            params[key] = flag
    _emit(solve_defence(stats, params.get("lambda", 100.0), params.get("kappa", 10.0),
                        params.get("c_mon", 10.0), params.get("c_def", 20.0)), args.out)


def cmd_detect(args):
    R = demand_io.load_demands(args.received)
    U = demand_io.load_demands(args.estimates)
    if R.shape != U.shape:
        raise CliError(f"received {R.shape} and estimates {U.shape} differ in shape")
    strategy = MonitoringStrategy(args.strategy, args.threshold, args.mode)
    days = []
    for d in range(R.shape[1]):
        res = detect(R[:, d], U[:, d], strategy)
        days.append({"day": d, "detected": res.detected,
                     "evidence": np.atleast_1d(res.evidence).tolist(), "flagged": list(res.flagged)})
    _emit({"strategy": strategy.kind, "threshold": strategy.threshold, "mode": strategy.mode,
           "detected_days": sum(x["detected"] for x in days), "days": days}, args.out)


def cmd_gen_demand(args):
    params = demand_io.SyntheticDemandParams(M=args.M, days=args.days, T=args.T, seed=args.seed,
                                             household_sigma=args.household_sigma,
                                             daily_sigma=args.daily_sigma)
    D = demand_io.synthetic_demands(params)
    demand_io.write_demands(args.out, D)
    _emit({"output": str(args.out), "shape": list(D.shape)}, None)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="gridsec", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run one scenario")
    s.add_argument("config")
    s.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    s.add_argument("--out", help="output directory (overrides output.dir)")
    s.add_argument("--figures", action="store_true")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="grid over participation, targeted fraction and attack kind")
    s.add_argument("config")
    s.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    s.add_argument("--out")
    s.add_argument("--participation", type=_floats)
    s.add_argument("--rho", type=_floats)
    s.add_argument("--attacks", help="comma separated: shift,flat,mirror,scale")
    s.add_argument("--workers", type=int)
    s.add_argument("--figures", action="store_true")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("solve-game", help="equilibria of the monitoring game")
    s.add_argument("--stats", help="JSON with gamma/rho of a strong and a weak attack")
    s.add_argument("--payoffs", help="text record with the six payoff values")
    s.add_argument("--gamma-strong", type=float)
    s.add_argument("--rho-strong", type=float)
    s.add_argument("--gamma-weak", type=float)
    s.add_argument("--rho-weak", type=float)
    s.add_argument("--attack", default="")
    s.add_argument("--strong-undetectable", action="store_true")
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--kappa", type=float)
    s.add_argument("--c-mon", type=float)
    s.add_argument("--c-def", type=float)
    s.add_argument("--sample-report", type=int, metavar="N",
                   help="share of N random mixed-only games with monitoring probability >= 0.70")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve_game)

    s = sub.add_parser("detect", help="run a monitoring strategy on forecast CSVs")
    s.add_argument("received")
    s.add_argument("estimates")
    s.add_argument("--strategy", required=True, choices=["average", "deep-aggregated", "deep-individual"])
    s.add_argument("--threshold", type=float)
    s.add_argument("--mode", default="mean", choices=["mean", "max"])
    s.add_argument("--out")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("gen-demand", help="write a synthetic demand CSV")
    s.add_argument("--M", type=int, default=25)
    s.add_argument("--days", type=int, default=30)
    s.add_argument("--T", type=int, default=24)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--household-sigma", type=float, default=0.25)
    s.add_argument("--daily-sigma", type=float, default=0.08)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_demand)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                            format="%(levelname)s %(name)s: %(message)s")
        args.func(args)
        return 0
    except Exception as exc:  # every failure becomes one JSON line on stderr
        err = {"error": type(exc).__name__, "message": str(exc)}
        for attr in ("row", "violations", "path"):
            if getattr(exc, attr, None) is not None:
                err[attr] = getattr(exc, attr)
        sys.stderr.write(json.dumps(err, ensure_ascii=False) + "\n")
        return 1 if not isinstance(exc, CliError) else 2


if __name__ == "__main__":
    sys.exit(main())
