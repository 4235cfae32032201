"""Figure rendering for run reports.

Each CLI command drops PNG figures next to its delimited outputs: the
histogram with the fitted classes and mixture overlaid, the convergence
curve, threshold positions, and the method-comparison bars.
"""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .histogram import GRAY_LEVELS, Histogram
from .mixture import GaussianClass, MixtureModel, mixture_density

_LEVELS = np.arange(GRAY_LEVELS)


def _plot_histogram(ax, histogram: Histogram):
    ax.fill_between(_LEVELS, histogram.bins, step="mid", alpha=0.35,
                    color="0.5", label="histogram")
    ax.set_xlabel("gray level")
    ax.set_ylabel("frequency")
    ax.set_xlim(0, GRAY_LEVELS - 1)


def _plot_mixture(ax, model: MixtureModel):
    grid = np.linspace(0, GRAY_LEVELS - 1, 1024)
    for idx, c in enumerate(model.classes):
        single = MixtureModel([GaussianClass(1.0, c.mean, c.stddev)])
        ax.plot(grid, c.weight * mixture_density(single, grid), "--", lw=1,
                label=f"class {idx}")
    ax.plot(grid, mixture_density(model, grid), "k-", lw=1.5, label="mixture")


def save_fit_figure(histogram: Histogram, model: MixtureModel, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    _plot_histogram(ax, histogram)
    _plot_mixture(ax, model)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_convergence_figure(best_j, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(np.arange(len(best_j)), best_j, lw=1.5)
    ax.set_xlabel("iteration")
    ax.set_ylabel("best objective")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_threshold_figure(histogram: Histogram, model: MixtureModel, cuts, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    _plot_histogram(ax, histogram)
    _plot_mixture(ax, model)
    for t in cuts:
        ax.axvline(t, color="C3", lw=1.2, ls=":")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_comparison_figure(rows, path) -> None:
    """Bar chart of final objective per (method, init); rows are CSV dicts."""
    methods = sorted({r["method"] for r in rows})
    inits = sorted({int(r["init_id"]) for r in rows})
    width = 0.8 / max(len(methods), 1)
    fig, ax = plt.subplots(figsize=(7, 4))
    for mi, method in enumerate(methods):
        xs, ys = [], []
        for ii, init in enumerate(inits):
            for r in rows:
                if r["method"] == method and int(r["init_id"]) == init:
                    xs.append(ii + mi * width)
                    ys.append(float(r["final_J"]))
        ax.bar(xs, ys, width=width, label=method)
    ax.set_yscale("log")
    ax.set_xticks([i + width * (len(methods) - 1) / 2 for i in range(len(inits))])
    ax.set_xticklabels([f"init {i}" for i in inits])
    ax.set_ylabel("final objective")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_histogram_figure(histogram: Histogram, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    _plot_histogram(ax, histogram)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
