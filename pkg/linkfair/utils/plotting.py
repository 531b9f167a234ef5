"""Plots comparing allocation schemes over a simulation run.
"""

__all__ = ['plot_jain', 'plot_utility_averages', 'save_report_plots']

import numpy as np
import logging
import os
from matplotlib import pyplot as plt
import seaborn as sns


def plot_jain(report, ax=None, palette=None):
    """Jain's fairness index over gains for every transmission, one line per
    scheme, with the run mean as a dashed line.

    Arguments
    ---------
    report : SimReport
        simulation outcome.
    ax : matplotlib.pyplot.Axes, None
        axes on which to plot (optional).
    palette : str, list, None
        seaborn palette.

    Returns
    -------
    ax : matplotlib.pyplot.Axes
    """
    if ax is None:
        _, ax = plt.subplots(figsize=(6, 3.5))
    stats = report.statistics
    schemes = stats.schemes
    colors = sns.color_palette(palette, len(schemes))
    for scheme, c in zip(schemes, colors):
        jain = stats.jain_per_transmission[scheme]
        ax.plot(np.arange(len(jain)), jain, lw=0.5, alpha=0.6, c=c,
                label=scheme)
        if np.any(~np.isnan(jain)):
            ax.axhline(np.nanmean(jain), ls='--', c=c)
    ax.set_ylim(1/max(report.config.receivers, 1) - 0.02, 1.02)
    ax.set_xlabel("transmission")
    ax.set_ylabel("Jain index of gains")
    ax.legend(loc='lower right')
    return ax


def plot_utility_averages(report, ax=None, palette=None):
    """Mean utility of every receiver under every scheme, with confidence
    intervals.
    """
    if ax is None:
        _, ax = plt.subplots(figsize=(6, 3.5))
    stats = report.statistics
    schemes = stats.schemes
    colors = sns.color_palette(palette, len(schemes))
    n = report.config.receivers
    width = 0.8/max(len(schemes), 1)
    for i, (scheme, c) in enumerate(zip(schemes, colors)):
        means = stats.utility_means(scheme)
        x = np.arange(n) + (i - (len(schemes) - 1)/2)*width
        ax.bar(x, [m.mean for m in means], width, color=c, label=scheme)
        ax.errorbar(x, [m.mean for m in means],
                    yerr=[m.half_width for m in means], fmt='none', c='k',
                    capsize=2, lw=1)
    for r, spec in enumerate(report.config.utility_specs):
        ax.hlines(spec.u_min, r - 0.45, r + 0.45, ls=':', color='gray')
    ax.set_xticks(np.arange(n))
    ax.set_xticklabels([f"{r}\n{s.kind}" for r, s in
                        enumerate(report.config.utility_specs)])
    if schemes:
        ax.legend(loc='lower right')
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("receiver")
    ax.set_ylabel("mean utility")
    return ax


def save_report_plots(report, out_dir: str, fmt: str = 'png') -> list:
    """Save both plots to `out_dir`; returns the written paths."""
    paths = []
    for name, func in [('jain', plot_jain),
                       ('utilities', plot_utility_averages)]:
        fig, ax = plt.subplots(figsize=(6, 3.5))
        func(report, ax=ax)
        path = os.path.join(out_dir, f"{name}.{fmt}")
        fig.savefig(path, bbox_inches='tight')
        plt.close(fig)
        logging.info(f"saved plot: {path}")
        paths.append(path)
    return paths
