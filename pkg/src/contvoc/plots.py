"""Figure rendering for the report paths: masks, ECDFs, metrics, loss traces.

Every figure lands next to its CSV counterpart; the CSVs remain the
authoritative data. Uses the Agg backend so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_mask_overview(path, times, cnm, mvf, threshold, nyquist):
    """Mask value over time against the MVF contour, threshold marked."""
    fig, ax1 = plt.subplots(figsize=(9, 3.2))
    ax1.plot(times, cnm, color="tab:blue", lw=1.0, label="cNM")
    ax1.axhline(threshold, color="black", ls=":", lw=1.0,
                label=f"threshold = {threshold:g}")
    ax1.set_xlabel("time (s)")
    ax1.set_ylabel("mask value")
    ax1.set_ylim(-0.02, 1.02)
    ax2 = ax1.twinx()
    ax2.plot(times, mvf, color="tab:red", ls="--", lw=1.0, label="MVF")
    ax2.set_ylabel("MVF (Hz)")
    ax2.set_ylim(0, nyquist * 1.05)
    lines1, labels1 = ax1.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax1.legend(lines1 + lines2, labels1 + labels2, loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_ecdf_plot(path, curves: dict):
    """Overlay ECDF curves; `curves` maps label -> EcdfCurve."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, curve in curves.items():
        ax.step(curve.sorted_values, curve.cumulative, where="post", label=label)
    ax.set_xlabel("value")
    ax.set_ylabel("cumulative fraction")
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_metric_bars(path, names, reports):
    """Per-utterance bars for each metric column of a list of MetricReports."""
    columns = [("mcd_db", "MCD (dB)"), ("f0_rmse_hz", "F0 RMSE (Hz)"),
               ("mvf_rmse_hz", "MVF RMSE (Hz)"), ("corr", "CORR")]
    fig, axes = plt.subplots(2, 2, figsize=(10, 6))
    x = np.arange(len(names))
    for ax, (field, label) in zip(axes.ravel(), columns):
        values = [getattr(r, field) for r in reports]
        ax.bar(x, values, color="tab:blue")
        ax.set_title(label, fontsize=9)
        ax.set_xticks(x)
        ax.set_xticklabels(names, rotation=60, fontsize=6, ha="right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_loss_trace(path, trace):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.semilogy(np.arange(1, len(trace) + 1), trace, lw=1.0)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean squared error")
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
