"""Static figures for training curves and trajectory geometry (Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_series(steps, values, path, ylabel, title=None, ylim=None):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(steps, values, marker="o", ms=3)
    ax.set_xlabel("training step")
    ax.set_ylabel(ylabel)
    if ylim is not None:
        ax.set_ylim(*ylim)
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_trajectories(tracks, path, title=None):
    """Plan view and altitude profile; ``tracks`` maps label -> (N, 3) array of x, y, z in meters."""
    fig, (top, side) = plt.subplots(1, 2, figsize=(10, 4))
    for label, xyz in tracks.items():
        xyz = np.asarray(xyz, dtype=float)
        (line,) = top.plot(xyz[:, 0] / 1000, xyz[:, 1] / 1000, label=label, lw=1)
        top.plot(xyz[-1, 0] / 1000, xyz[-1, 1] / 1000, "o", color=line.get_color(), ms=3)
        along = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(xyz[:, :2], axis=0).T))])
        side.plot(along / 1000, xyz[:, 2], color=line.get_color(), lw=1)
    top.set_xlabel("east [km]")
    top.set_ylabel("north [km]")
    top.set_aspect("equal", adjustable="datalim")
    side.set_xlabel("distance flown [km]")
    side.set_ylabel("altitude [m]")
    if len(tracks) <= 10:
        top.legend(fontsize=7)
    if title:
        fig.suptitle(title)
    return _save(fig, path)
