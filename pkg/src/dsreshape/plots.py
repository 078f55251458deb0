"""Figure rendering for rollouts, vector fields and benchmark reports.

All functions write image files (format from the path suffix) and are
safe to use headless; the Agg backend is forced on import.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_trajectory_figure(traj, path, demo=None, title=None):
    """Plot a rollout: 2-D path view, or per-dimension time series above 2-D."""
    if traj.dimension == 2:
        fig, ax = plt.subplots(figsize=(5, 5))
        if demo is not None:
            ax.plot(demo.pos[:, 0], demo.pos[:, 1], "r.", ms=3, label="demonstration")
        ax.plot(traj.x[:, 0], traj.x[:, 1], "b-", lw=1.5, label="rollout")
        ax.plot(*traj.x[0], "ks", ms=6, label="start")
        ax.plot(*traj.goal, "g*", ms=12, label="goal")
        ax.set_xlabel("x1")
        ax.set_ylabel("x2")
        ax.legend(loc="best", fontsize=8)
        ax.set_aspect("equal", adjustable="datalim")
    else:
        fig, axes = plt.subplots(traj.dimension, 1, sharex=True,
                                 figsize=(6, 1.4 * traj.dimension))
        for j, ax in enumerate(np.atleast_1d(axes)):
            ax.plot(traj.t, traj.x[:, j], "b-", lw=1.2)
            if demo is not None:
                ax.plot(demo.t, demo.pos[:, j], "r.", ms=2)
            ax.axhline(traj.goal[j], color="g", ls=":", lw=0.8)
            ax.set_ylabel(f"x{j + 1}")
        np.atleast_1d(axes)[-1].set_xlabel("t [s]")
    if title:
        fig.suptitle(title)
    _finish(fig, path)


def save_field_figure(grid, path, traj=None, demo=None, title=None):
    """Quiver plot of a 2-D field grid with optional overlays."""
    if grid.points.shape[1] != 2:
        raise ValueError("field figures are 2-D only")
    fig, ax = plt.subplots(figsize=(5.5, 5))
    p, v = grid.points, grid.vectors
    speed = np.linalg.norm(v, axis=1)
    ax.quiver(p[:, 0], p[:, 1], v[:, 0], v[:, 1], speed,
              cmap="viridis", width=0.003, alpha=0.85)
    if demo is not None:
        ax.plot(demo.pos[:, 0], demo.pos[:, 1], "r.", ms=3, label="demonstration")
    if traj is not None:
        ax.plot(traj.x[:, 0], traj.x[:, 1], "b-", lw=1.5, label="rollout")
        ax.plot(*traj.goal, "g*", ms=12)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    if demo is not None or traj is not None:
        ax.legend(loc="best", fontsize=8)
    if title:
        fig.suptitle(title)
    _finish(fig, path)


def save_bench_figure(report, path, title=None):
    """Per-demonstration metric bars grouped by motion."""
    rows = report.rows
    if not rows:
        raise ValueError("empty report")
    labels = [f"{r.motion}/{r.demo}" for r in rows]
    sea = [r.sea if r.sea is not None else np.nan for r in rows]
    vr = [r.v_rmse if r.v_rmse is not None else np.nan for r in rows]
    fig, axes = plt.subplots(1, 2, figsize=(max(6, 0.45 * len(rows) + 2), 4))
    for ax, vals, name in ((axes[0], sea, "SEA"), (axes[1], vr, "V_rmse")):
        ax.bar(range(len(rows)), vals, color="steelblue")
        ax.set_xticks(range(len(rows)))
        ax.set_xticklabels(labels, rotation=90, fontsize=6)
        ax.set_title(name)
    if title:
        fig.suptitle(title)
    _finish(fig, path)
