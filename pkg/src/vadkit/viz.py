"""Plots: per-frame anomaly-score curve with shaded anomalous ranges."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .dataset import TemporalAnnotation
from .evaluate import ScoreSeries


def plot_score_curve(series: ScoreSeries, annotation: TemporalAnnotation | None,
                     out_path) -> Path:
    """Normalized score per frame, anomalous ranges shaded."""
    out_path = Path(out_path)
    fig, ax = plt.subplots(figsize=(8, 3))
    frames = range(len(series.normalized))
    ax.plot(frames, series.normalized, lw=1.5, color="tab:blue",
            label="anomaly score")
    if annotation is not None:
        for i, (s, e) in enumerate(annotation.anomalous_ranges):
            ax.axvspan(s, e, color="tab:red", alpha=0.25,
                       label="anomalous" if i == 0 else None)
    ax.set_xlabel("frame")
    ax.set_ylabel("normalized score")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(series.video_id)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path
