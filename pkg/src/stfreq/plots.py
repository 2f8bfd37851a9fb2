"""File-output figures for the command-line report paths.

Every function renders one PNG next to the delimited output and returns
the path written.  The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "fv_figure",
    "variogram_figure",
    "nugget_figure",
    "fit_figure",
    "indep_figure",
    "panel_figure",
]


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def fv_figure(fv, path):
    """Raw and smoothed frequency variogram, with a 2-sigma band when the
    variance track is present."""
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(fv.freqs, fv.raw, color="0.75", lw=0.8, label="raw")
    ax.plot(fv.freqs, fv.smoothed, color="C0", lw=1.6, label="smoothed")
    if fv.variance is not None:
        band = 2.0 * np.sqrt(fv.variance)
        ax.fill_between(
            fv.freqs,
            fv.smoothed - band,
            fv.smoothed + band,
            color="C0",
            alpha=0.2,
            lw=0,
        )
    ax.set_xlabel("angular frequency")
    ax.set_ylabel("frequency variogram")
    ax.set_title("lag %s  (%d pairs)" % (np.round(fv.h, 3).tolist(), fv.count))
    ax.legend(frameon=False)
    return _save(fig, path)


def variogram_figure(rows, path):
    """Time-domain variogram and covariance against time lag, one line per
    spatial lag norm.  ``rows`` are dicts with h_norm, u, gamma_hat, c_hat."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
    norms = sorted({r["h_norm"] for r in rows})
    for norm in norms:
        sub = sorted((r for r in rows if r["h_norm"] == norm), key=lambda r: r["u"])
        us = [r["u"] for r in sub]
        axes[0].plot(us, [r["gamma_hat"] for r in sub], marker="o", ms=3, label="|h|=%g" % norm)
        axes[1].plot(us, [r["c_hat"] for r in sub], marker="o", ms=3, label="|h|=%g" % norm)
    axes[0].set_ylabel("variogram")
    axes[1].set_ylabel("covariance")
    for ax in axes:
        ax.set_xlabel("time lag")
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def nugget_figure(scan, path):
    """Integrated frequency variogram against lag norm with the two-point
    extrapolation to zero separation."""
    fig, ax = plt.subplots(figsize=(6, 4))
    norms = [r.h_norm for r in scan.rows]
    vals = [r.integrated_fv for r in scan.rows]
    ax.plot(norms, vals, "o", color="C0", label="integrated")
    x1, y1 = norms[0], vals[0]
    slope = (vals[1] - y1) / (norms[1] - x1)
    xs = np.linspace(0.0, norms[1], 50)
    ax.plot(xs, scan.intercept + slope * xs, "--", color="C3", lw=1.0)
    ax.plot([0.0], [scan.intercept], "s", color="C3", label="intercept %.4g" % scan.intercept)
    ax.set_xlabel("lag norm")
    ax.set_ylabel("integrated frequency variogram")
    ax.legend(frameon=False)
    return _save(fig, path)


def fit_figure(problem, result, path):
    """Pair-averaged periodograms with the fitted spectra overlaid, plus
    the optimizer's best-value trace."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    omegas = problem.omegas
    for ld, ibar in zip(problem.lags, problem.mean_periodograms()):
        (line,) = axes[0].plot(omegas, ibar, lw=0.7, alpha=0.5)
        g0 = problem.model.g0(
            problem.model.initial_theta(result.psi_hat), ld.h, omegas
        )
        axes[0].plot(
            omegas,
            g0,
            lw=1.8,
            color=line.get_color(),
            label="|h|=%.3g" % np.linalg.norm(ld.h),
        )
    axes[0].set_yscale("log")
    axes[0].set_xlabel("angular frequency")
    axes[0].set_ylabel("mean periodogram / fitted spectrum")
    axes[0].legend(frameon=False, fontsize=8)
    axes[1].plot(result.trace, color="C0")
    axes[1].set_xlabel("iteration")
    axes[1].set_ylabel("criterion (best so far)")
    fig.tight_layout()
    return _save(fig, path)


def indep_figure(report, path):
    """Per-block -ln lambda values against the null mean and 2-sigma band."""
    fig, ax = plt.subplots(figsize=(7, 4))
    vals = -np.log(report.lambda_ls)
    blocks = np.arange(1, vals.shape[0] + 1)
    ax.plot(blocks, vals, "o", color="C0", label="blocks")
    per_block_sd = np.sqrt(report.variance * report.n_blocks)
    ax.axhline(report.mean, color="C3", lw=1.2, label="null mean")
    ax.axhspan(
        report.mean - 2 * per_block_sd,
        report.mean + 2 * per_block_sd,
        color="C3",
        alpha=0.12,
        lw=0,
    )
    ax.set_xlabel("frequency block")
    ax.set_ylabel("-ln lambda")
    ax.set_title(
        "statistic %.3f, p = %.4f (%s)"
        % (report.statistic, report.p_value, "reject" if report.reject else "retain")
    )
    ax.legend(frameon=False)
    return _save(fig, path)


def panel_figure(panel, path):
    """Stacked station series, vertically offset for legibility."""
    fig, ax = plt.subplots(figsize=(8, 4))
    t = np.arange(1, panel.n + 1)
    spread = 3.0 * np.median(np.std(panel.values, axis=1)) or 1.0
    for i, sid in enumerate(panel.stations.ids):
        ax.plot(t, panel.values[i] + i * spread, lw=0.8, label=str(sid))
    ax.set_xlabel("t")
    ax.set_yticks([])
    if panel.m <= 12:
        ax.legend(frameon=False, fontsize=7, ncol=2)
    return _save(fig, path)
