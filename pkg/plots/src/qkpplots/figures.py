"""Figure rendering: convergence fits, conserved-quantity series, snapshots."""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .qkpf import read_field
from .studycsv import read_study_csv, read_timeseries_csv

KINDS = ("convergence", "timeseries", "snapshot")


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: input path(s), output image path, figure kind."""

    inputs: tuple
    output: str
    kind: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")

    def render(self) -> str:
        if self.kind == "convergence":
            return plot_convergence(self.inputs[0], self.output, **self.options)
        if self.kind == "timeseries":
            return plot_timeseries(self.inputs[0], self.output, **self.options)
        return plot_snapshot(self.inputs[0], self.output, **self.options)


def fit_loglog_slope(eps, err):
    """Least-squares slope/intercept of log(err) vs log(eps)."""
    slope, intercept = np.polyfit(np.log(eps), np.log(err), 1)
    return float(slope), float(np.exp(intercept))


def plot_convergence(csv_path, out_path, column="h1_err_n") -> str:
    """Log-log error-vs-eps scatter with the fitted-order reference line."""
    data = read_study_csv(csv_path)
    eps = np.array([row["eps"] for row in data.rows])
    err = np.array([row[column] for row in data.rows])
    slope, constant = fit_loglog_slope(eps, err)

    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.loglog(eps, err, "o", color="tab:blue", label=column)
    grid_eps = np.array([eps.min() * 0.8, eps.max() * 1.25])
    ax.loglog(grid_eps, constant * grid_eps**slope, "--", color="tab:gray",
              label=f"fit: order≈{slope:.2f}")
    ax.set_xlabel(r"$\varepsilon$")
    ax.set_ylabel(r"$\sup_t \|\cdot\|_{H^1}$")
    ax.set_title("normalized error vs amplitude parameter")
    ax.annotate(f"order≈{slope:.2f}", xy=(0.05, 0.9), xycoords="axes fraction")
    ax.legend(loc="lower right", fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_timeseries(csv_path, out_path, columns=None) -> str:
    """Conserved-quantity traces against time."""
    data = read_timeseries_csv(csv_path)
    t = data["t"]
    names = columns or [name for name in data if name != "t"]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name in names:
        ax.plot(t, data[name], label=name)
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_snapshot(qkpf_path, out_path, cmap="RdBu_r") -> str:
    """Heatmap of one QKPF field with axes in (x1, x2)."""
    dump = read_field(qkpf_path)
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    # values[i1, i2] -> imshow wants rows = x2 for a horizontal x1 axis
    vmax = float(np.max(np.abs(dump.values))) or 1.0
    image = ax.imshow(
        dump.values.T,
        origin="lower",
        extent=(0.0, dump.l1, 0.0, dump.l2),
        aspect="auto",
        cmap=cmap,
        vmin=-vmax,
        vmax=vmax,
    )
    fig.colorbar(image, ax=ax, shrink=0.9)
    ax.set_xlabel(r"$x_1$")
    ax.set_ylabel(r"$x_2$")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
