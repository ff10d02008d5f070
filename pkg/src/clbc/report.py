"""Figure rendering for run and sweep reports.

Every report writes the delimited trace/summary files first and then a
small set of matplotlib figures next to them: tracking error, estimation
error, control input and exciting strength for single runs; overlaid
tracking/estimation curves for sweeps.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .runner import MetricsRecord, Trace


def _style(ax, xlabel, ylabel):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)


def render_run_figures(trace: Trace, outdir: str, stem: str = "run") -> list[str]:
    """Render the four-panel overview for one run; returns written paths."""
    t = trace.t
    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    ax = axes[0, 0]
    ax.semilogy(t, np.abs(trace.column("e1")) + 1e-12, lw=0.8)
    _style(ax, "time (s)", "|e1|")
    ax.set_title("tracking error")

    ax = axes[0, 1]
    ax.semilogy(t, trace.column("theta_err_norm") + 1e-12, lw=0.8,
                label="all channels")
    ax.semilogy(t, trace.column("theta_err_zeta_norm") + 1e-12, lw=0.8,
                label="active channels")
    ax.legend(fontsize=8)
    _style(ax, "time (s)", "estimation error norm")
    ax.set_title("parameter estimation")

    ax = axes[1, 0]
    ax.plot(t, trace.column("u"), lw=0.8)
    _style(ax, "time (s)", "u")
    ax.set_title("control input")

    ax = axes[1, 1]
    ax.semilogy(t, trace.column("sigma_c"), lw=0.8, label="sigma_c")
    ax2 = ax.twinx()
    ax2.step(t, trace.column("stage"), where="post", color="tab:red",
             lw=0.8, alpha=0.6, label="stage")
    ax2.set_ylabel("stage")
    _style(ax, "time (s)", "sigma_c")
    ax.set_title("exciting strength")

    fig.suptitle(f"{trace.meta.get('plant', '')} / {trace.meta.get('controller', '')}")
    fig.tight_layout()
    path = os.path.join(outdir, f"{stem}_overview.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return [path]


def render_sweep_figures(runs: list[tuple[str, Trace]], outdir: str,
                         stem: str = "sweep") -> list[str]:
    """Overlay |e1| and the estimation error for a list of labelled runs."""
    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    for label, trace in runs:
        t = trace.t
        axes[0].semilogy(t, np.abs(trace.column("e1")) + 1e-12, lw=0.8, label=label)
        axes[1].semilogy(t, trace.column("theta_err_norm") + 1e-12, lw=0.8, label=label)
    _style(axes[0], "time (s)", "|e1|")
    axes[0].set_title("tracking error")
    _style(axes[1], "time (s)", "estimation error norm")
    axes[1].set_title("parameter estimation")
    axes[1].legend(fontsize=7, ncol=2)
    fig.tight_layout()
    path = os.path.join(outdir, f"{stem}_comparison.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return [path]


def write_run_report(trace: Trace, metrics: MetricsRecord, outdir: str,
                     stem: str = "run", figures: bool = True) -> dict[str, str]:
    """Write trace.csv + summary.csv (+ figures) for one run."""
    os.makedirs(outdir, exist_ok=True)
    paths = {"trace": os.path.join(outdir, f"{stem}_trace.csv"),
             "summary": os.path.join(outdir, f"{stem}_summary.csv")}
    trace.to_csv(paths["trace"])
    metrics.to_csv(paths["summary"])
    if figures:
        for i, p in enumerate(render_run_figures(trace, outdir, stem)):
            paths[f"figure{i}"] = p
    return paths
