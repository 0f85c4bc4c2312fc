"""Figures written straight to image files (non-interactive backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .dataset import RatingsTable  # noqa: E402
from .signal.audio import Spectrogram  # noqa: E402
from .signal.hanjalic import AffectCurve  # noqa: E402

# fixed metadata keeps PNG bytes stable between runs
_META = {"Software": None}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def plot_rating_distributions(table: RatingsTable, path) -> Path:
    dims = table.dims
    fig, axes = plt.subplots(1, len(dims), figsize=(4 * len(dims), 3), squeeze=False)
    for ax, dim in zip(axes[0], dims):
        lo, hi = table.scales[dim]
        vals = table[dim][~np.isnan(table[dim])]
        ax.hist(vals, bins=np.arange(lo, hi + 2) - 0.5, color="0.4", rwidth=0.85)
        ax.set_xticks(range(lo, hi + 1))
        ax.set_title(dim)
        ax.set_xlabel("score")
    axes[0][0].set_ylabel("count")
    fig.tight_layout()
    return _save(fig, path)


def plot_mean_scatter(table: RatingsTable, path, x: str = "V", y: str = "A") -> Path:
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.scatter(np.nanmean(table[x], axis=0), np.nanmean(table[y], axis=0), s=12, color="k")
    ax.set_xlabel(f"mean {x}")
    ax.set_ylabel(f"mean {y}")
    fig.tight_layout()
    return _save(fig, path)


def plot_curves(curves: Sequence[AffectCurve], path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 3))
    for c in curves:
        ax.plot(np.arange(len(c)), c.values, label=c.dimension)
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("time (s)")
    ax.legend(loc="upper right")
    fig.tight_layout()
    return _save(fig, path)


def plot_spectrogram(spec: Spectrogram, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3))
    db = 20 * np.log10(spec.magnitudes.T + 1e-10)
    t, f = spec.times(), spec.frequencies()
    ax.imshow(db, origin="lower", aspect="auto", cmap="magma",
              extent=(t[0], t[-1] if len(t) > 1 else t[0] + spec.hop_s, f[0], f[-1]))
    ax.set_xlabel("time (s)")
    ax.set_ylabel("frequency (Hz)")
    fig.tight_layout()
    return _save(fig, path)


def plot_schedule(report: dict, path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 1.8))
    total = report["program_length_s"]
    ax.broken_barh([(0, total)], (0, 1), color="0.85")
    for item in report["timeline"]:
        ax.broken_barh([(item["start_s"], max(item["end_s"] - item["start_s"], total / 200))],
                       (0, 1), color="tab:red")
        ax.text(item["start_s"], 1.1, item["ad_id"], fontsize=7, rotation=45)
    ax.set_xlim(0, total)
    ax.set_ylim(0, 2)
    ax.set_yticks([])
    ax.set_xlabel("composed program time (s)")
    fig.tight_layout()
    return _save(fig, path)
