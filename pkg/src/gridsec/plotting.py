"""Figures for scenario and sweep outputs, rendered to image files (no display needed)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SAVE = {"dpi": 120, "bbox_inches": "tight", "metadata": {"Software": None}}


def plot_scenario(result, path) -> Path:
    """Daily PAR (attacked, baseline, no batteries) and daily bill changes."""
    days = [d.day for d in result.days]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax1.plot(days, [d.demand_par for d in result.days], color="0.6", label="no batteries")
    ax1.plot(days, [d.baseline_par for d in result.days], label="game, no attack")
    ax1.plot(days, [d.par for d in result.days], label="scenario")
    ax1.set_ylabel("PAR")
    ax1.legend(frameon=False, fontsize=8)
    ax2.axhline(0, color="0.8", lw=0.8)
    ax2.plot(days, [d.attacker_change for d in result.days], label="attacker")
    ax2.plot(days, [d.others_change for d in result.days], label="other participants")
    ax2.set_ylabel("bill change (%)")
    ax2.set_xlabel("day")
    ax2.legend(frameon=False, fontsize=8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def plot_sweep(result, out_dir) -> list[Path]:
    """Per attack: median attacker bill change over the grid, and median PAR by participation."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for attack in sorted({c.attack for c in result.cells}):
        ps, rs, G = result.grid(attack, "attacker_change")
        _, _, P = result.grid(attack, "par")
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
        lim = np.nanmax(np.abs(G)) or 1.0
        im = ax1.imshow(G, origin="lower", aspect="auto", cmap="RdBu", vmin=-lim, vmax=lim,
                        extent=_extent(rs, ps))
        fig.colorbar(im, ax=ax1, label="median attacker bill change (%)")
        ax1.set_xlabel("targeted fraction")
        ax1.set_ylabel("participation rate")
        for j, r in enumerate(rs):
            ax2.plot(ps, P[:, j], marker="o", label=f"rho={r:g}")
        ax2.set_xlabel("participation rate")
        ax2.set_ylabel("median PAR")
        ax2.legend(frameon=False, fontsize=8)
        fig.suptitle(attack)
        path = out_dir / f"sweep_{attack}.png"
        fig.savefig(path, **_SAVE)
        plt.close(fig)
        paths.append(path)
    return paths


def _extent(xs, ys):
    def edges(v):
        if len(v) == 1:
            return v[0] - 0.05, v[0] + 0.05
        step = np.diff(v).min() / 2
        return v[0] - step, v[-1] + step
    return (*edges(xs), *edges(ys))
