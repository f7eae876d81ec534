"""Static error-trajectory figures written next to the CSV outputs."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "consensus-lab",
}


def figsize(scale: float = 1.0) -> tuple[float, float]:
    width = 5.5 * scale
    return width, width * (math.sqrt(5.0) - 1.0) / 2.0


def plot_error_traces(series: Mapping[str, Sequence[float]], path: str | Path,
                      title: str = "", ylabel: str = "e(k)") -> Path:
    """Overlay ``e(k)`` curves, one per label, and save the figure to ``path``.

    The file type follows the suffix (``.png``, ``.svg``, ``.pdf``).
    """
    path = Path(path)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=figsize())
        for label, values in series.items():
            ax.plot(range(len(values)), values, label=label)
        ax.set_xlabel("k")
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right")
        fig.tight_layout()
        metadata = {"Software": None} if path.suffix.lower() == ".png" else None
        fig.savefig(path, dpi=150, metadata=metadata)
        plt.close(fig)
    return path
