"""Matplotlib figures for sweep results, written straight to files."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .config import format_bits  # noqa: E402
from .harness import ResultRecord  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "savefig.bbox": "tight",
}

MARKERS = {"ProposedLMMSE": "o", "ProposedOMP_LMMSE": "s", "UnawareLMMSE": "^", "LS": "x"}


def figure_size(scale: float = 1.0):
    width = 3.5 * scale
    return width, width * (np.sqrt(5.0) - 1.0) / 2.0


def render_nmse_figure(records: Sequence[ResultRecord], path, title: str = "") -> Path:
    """NMSE in dB against SNR, one curve per (estimator, bits) with stderr bars."""
    curves = defaultdict(list)
    for r in records:
        curves[(r.estimator, format_bits(r.bits))].append(r)
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figure_size(1.3))
        for (estimator, bits), rows in sorted(curves.items()):
            rows = sorted(rows, key=lambda r: r.snr_db)
            snr = np.array([r.snr_db for r in rows])
            mean = np.array([r.nmse_mean for r in rows])
            err = np.array([r.nmse_stderr for r in rows])
            lo = 10 * np.log10(np.maximum(mean - err, 1e-300))
            hi = 10 * np.log10(mean + err)
            db = 10 * np.log10(mean)
            ax.errorbar(
                snr, db, yerr=[db - lo, hi - db], marker=MARKERS.get(estimator, "."), capsize=2,
                label=f"{estimator}, b={bits}",
            )
        ax.set_xlabel("SNR [dB]")
        ax.set_ylabel("NMSE [dB]")
        if title:
            ax.set_title(title)
        ax.grid(True, alpha=0.3)
        ax.legend(ncol=2)
        fig.savefig(path, dpi=150)
        plt.close(fig)
    return path
