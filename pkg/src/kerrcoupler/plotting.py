"""Figure rendering for the CLI report paths (written to files, never shown)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import DeathInterval
from .master_eq import Trajectory


def render_trajectory(traj: Trajectory, path, title: str = "") -> None:
    """Concurrence and Bell-fidelity traces on a shared time axis."""
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    ax1.plot(traj.times, traj.concurrence, lw=1.2, color="tab:blue")
    ax1.set_ylabel("concurrence")
    ax1.set_ylim(-0.05, 1.05)
    ax1.grid(alpha=0.3)
    if title:
        ax1.set_title(title)
    ax2.plot(traj.times, traj.fid_b1, lw=1.0, label="fid B1")
    ax2.plot(traj.times, traj.fid_b2, lw=1.0, label="fid B2")
    ax2.plot(traj.times, traj.fid_b3, lw=1.0, label="fid B3")
    ax2.set_xlabel("t")
    ax2.set_ylabel("Bell fidelity")
    ax2.grid(alpha=0.3)
    ax2.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_sweep_map(param_values: np.ndarray, times: np.ndarray,
                     concurrence_map: np.ndarray, path,
                     param_name: str = "parameter") -> None:
    """Concurrence map over (time, parameter); dark pixels mark C = 0."""
    fig, ax = plt.subplots(figsize=(9, 6))
    mesh = ax.pcolormesh(times, param_values, concurrence_map,
                         cmap="gray", vmin=0.0, shading="auto")
    ax.set_xlabel("t")
    ax.set_ylabel(param_name)
    fig.colorbar(mesh, ax=ax, label="concurrence")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_events(traj: Trajectory, intervals: list[DeathInterval],
                  births: list[float], path) -> None:
    """Concurrence trace with death intervals shaded and birth times marked."""
    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(traj.times, traj.concurrence, lw=1.2, color="tab:blue")
    for iv in intervals:
        ax.axvspan(iv.t_start, iv.t_end, color="tab:red", alpha=0.25)
    for t in births:
        ax.axvline(t, color="tab:green", ls="--", lw=1.0)
    ax.set_xlabel("t")
    ax.set_ylabel("concurrence")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
