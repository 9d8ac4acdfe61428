"""SVG figure emitters for trajectories and bound curves."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def trajectory_figure(traj, design, path, title: str = "") -> None:
    """Stacked panels: infection ratio, aggregate rate, payoff state,
    paid reward rate, Lyapunov level (log scale)."""
    fig, axes = plt.subplots(5, 1, figsize=(7.0, 10.0), sharex=True)
    t = traj.times
    axes[0].plot(t, traj.I / design.I_star, lw=1.2)
    axes[0].axhline(1.0, color="gray", lw=0.6, ls="--")
    axes[0].set_ylabel("I(t) / I*")
    axes[1].plot(t, traj.B, lw=1.2)
    axes[1].axhline(design.beta_star, color="gray", lw=0.6, ls="--")
    axes[1].set_ylabel("B(t)")
    axes[2].plot(t, traj.q, lw=1.2)
    axes[2].axhline(0.0, color="gray", lw=0.6, ls="--")
    axes[2].set_ylabel("q(t)")
    axes[3].plot(t, traj.reward_cost, lw=1.2)
    axes[3].axhline(design.c_star, color="gray", lw=0.6, ls="--")
    axes[3].set_ylabel("r(t)'x(t)")
    L = np.where(traj.L > 0, traj.L, np.nan)
    axes[4].semilogy(t, L, lw=1.2)
    axes[4].set_ylabel("L(t)")
    axes[4].set_xlabel("t (days)")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def bound_figure(upsilons, pis, floor, path, *, label: str = "",
                 target: float | None = None) -> None:
    """Certified overshoot ratio as a function of the rate-gap weight."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(upsilons, pis, lw=1.4, label=label or None)
    ax.axhline(floor, color="gray", lw=0.8, ls="--", label="floor")
    if target is not None:
        ax.axhline(target, color="firebrick", lw=0.8, ls=":",
                   label="target")
    ax.set_xlabel("upsilon")
    ax.set_ylabel("certified peak I / I*")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def bound_overlay_figure(curves: dict, path) -> None:
    """Overlay several (upsilon, pi) curves, e.g. one per design target."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, (ups, pis) in curves.items():
        ax.plot(ups, pis, lw=1.4, label=label)
    ax.set_xlabel("upsilon")
    ax.set_ylabel("certified peak I / I*")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
