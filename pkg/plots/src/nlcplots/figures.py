"""Figure builders for nlcsim time series and snapshots."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .readers import read_series, read_snapshot

PLOT_KINDS = ("energy", "residual", "field", "maxd")


@dataclass(frozen=True)
class PlotJob:
    """One figure request: an input file, a plot kind, an output image."""

    input_path: Path
    kind: str
    output_path: Path

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ValueError(
                f"unknown plot kind {self.kind!r}, expected one of {PLOT_KINDS}")


def _finish(fig, out_path: str | Path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_energy(csv_path: str | Path, out_path: str | Path) -> Path:
    """Total energy and its parts vs t, with dissipation on a twin axis."""
    s = read_series(csv_path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(s["t"], s["total_E"], "k.-", label="total E")
    ax.plot(s["t"], s["kinetic"], ".-", color="tab:blue", label="kinetic")
    ax.plot(s["t"], s["elastic"], ".-", color="tab:orange", label="elastic")
    ax.plot(s["t"], s["penalty"], ".-", color="tab:green", label="penalty")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax2 = ax.twinx()
    ax2.plot(s["t"], s["dissipation"], "x--", color="tab:red", label="dissipation")
    ax2.set_ylabel("dissipation", color="tab:red")
    ax2.tick_params(axis="y", labelcolor="tab:red")
    handles, labels = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax.legend(handles + h2, labels + l2, loc="best", fontsize=8)
    ax.set_title("energy decay")
    return _finish(fig, out_path)


def plot_residual(csv_path: str | Path, out_path: str | Path) -> Path:
    """Dissipation against -dE/dt (finite-differenced from the records),
    with the normalized energy-law residual on a twin axis."""
    s = read_series(csv_path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(s["t"], s["dissipation"], "x--", color="tab:red", label="dissipation")
    if len(s["t"]) >= 2:
        dedt = -np.gradient(s["total_E"], s["t"])
        ax.plot(s["t"], dedt, ".-", color="tab:blue", label="-dE/dt")
    ax.set_xlabel("t")
    ax.set_ylabel("rate")
    ax2 = ax.twinx()
    ax2.plot(s["t"], s["energy_residual"], ":", color="tab:gray",
             label="energy residual")
    ax2.set_ylabel("residual", color="tab:gray")
    ax2.tick_params(axis="y", labelcolor="tab:gray")
    handles, labels = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax.legend(handles + h2, labels + l2, loc="best", fontsize=8)
    ax.set_title("energy law check")
    return _finish(fig, out_path)


def plot_maxd(csv_path: str | Path, out_path: str | Path) -> Path:
    """max |d| over time with the unit bound marked."""
    s = read_series(csv_path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(s["t"], s["max_d"], ".-", color="tab:purple", label="max |d|")
    ax.axhline(1.0, color="k", linewidth=0.8, linestyle="--", label="|d| = 1")
    ax.set_xlabel("t")
    ax.set_ylabel("max |d|")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("maximum principle trace")
    return _finish(fig, out_path)


def plot_field(snapshot_path: str | Path, out_path: str | Path) -> Path:
    """Director quiver over a |u| heatmap for a 2d snapshot."""
    snap = read_snapshot(snapshot_path)
    if snap.dim != 2:
        raise ValueError(f"{snapshot_path}: 2D only, snapshot has dim={snap.dim}")
    n, length = snap.n, snap.length
    x = np.arange(n) * (length / n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    speed = np.sqrt(snap.u[0] ** 2 + snap.u[1] ** 2)

    fig, ax = plt.subplots(figsize=(6, 5))
    mesh = ax.pcolormesh(X, Y, speed, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="|u|")
    stride = max(1, n // 16)
    sl = (slice(None, None, stride),) * 2
    # explicit scale: a unit director spans 0.8 of the arrow spacing, and
    # autoscale would divide by zero on an all-zero field
    scale = n / (0.8 * stride * length)
    ax.quiver(X[sl], Y[sl], snap.d[0][sl], snap.d[1][sl],
              color="white", scale_units="xy", scale=scale, width=0.004)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    ax.set_title(f"t = {snap.t:g}  (model {snap.model}, n = {n})")
    return _finish(fig, out_path)


_DISPATCH = {
    "energy": plot_energy,
    "residual": plot_residual,
    "maxd": plot_maxd,
    "field": plot_field,
}


def run_job(job: PlotJob) -> Path:
    return _DISPATCH[job.kind](job.input_path, job.output_path)
