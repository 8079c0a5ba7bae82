"""Trial plots: error decay overlays and pixel-space target trajectories."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  backend must be pinned first

from .harness import TrialRecord
from .kinematics import CameraModel


def render_plot(
    labeled: list[tuple[str, TrialRecord]],
    path: str | Path,
    camera: CameraModel | None = None,
    title: str | None = None,
) -> None:
    """One SVG: error_norm vs t for every labeled record, plus 2D trajectories.

    Labels typically carry the alpha value so a sweep's traces for one
    environment overlay in a single figure.
    """
    if not labeled:
        raise ValueError("nothing to plot")
    camera = camera or CameraModel()
    fig, (ax_err, ax_traj) = plt.subplots(1, 2, figsize=(11, 4.5))

    for label, record in labeled:
        ts = [r.t for r in record.rows]
        errs = [r.error_norm_px for r in record.rows]
        ax_err.plot(ts, errs, label=label, linewidth=1.2)
    ax_err.set_xlabel("step")
    ax_err.set_ylabel("error [px]")
    ax_err.legend(fontsize=8)
    ax_err.grid(True, alpha=0.3)
    if title:
        ax_err.set_title(title)

    for label, record in labeled:
        xs = [r.target_px[0] for r in record.rows]
        ys = [r.target_px[1] for r in record.rows]
        ax_traj.plot(xs, ys, linewidth=1.0, label=label)
        if xs:
            ax_traj.plot(xs[0], ys[0], marker="o", markersize=4, color="black")
    cx, cy = camera.center
    ax_traj.axhline(cy, color="gray", linewidth=0.6)
    ax_traj.axvline(cx, color="gray", linewidth=0.6)
    ax_traj.set_xlim(0, camera.width)
    ax_traj.set_ylim(camera.height, 0)  # image coordinates, y down
    ax_traj.set_aspect("equal")
    ax_traj.set_xlabel("x [px]")
    ax_traj.set_ylabel("y [px]")
    ax_traj.set_title("target trajectory")

    fig.tight_layout()
    fig.savefig(str(path))
    plt.close(fig)
