"""Figure rendering for run reports.

Every command that emits delimited output also drops PNG figures next to
it.  All rendering goes through the Agg backend so headless runs work.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _finish(fig: "plt.Figure", path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def save_resolution_curves(
    path: Path,
    t_res_values: Sequence[float],
    curves: dict[float, Sequence[float]],
) -> Path:
    """Resolution limit vs time resolution, one line per standoff distance."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for distance, limits in sorted(curves.items()):
        ax.loglog(np.asarray(t_res_values) * 1e12, limits, marker="o", label=f"D = {distance:g} m")
    ax.set_xlabel("time resolution (ps)")
    ax.set_ylabel("resolvable feature (m)")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def save_ring_maps(path: Path, labeled: dict[str, np.ndarray]) -> Path:
    """Side-by-side time-bin label images, one panel per configuration."""
    n = len(labeled)
    fig, axes = plt.subplots(1, n, figsize=(4 * n, 4), squeeze=False)
    for ax, (title, labels) in zip(axes[0], sorted(labeled.items())):
        im = ax.imshow(labels, cmap="twilight", origin="lower")
        ax.set_title(title)
        ax.set_xticks([])
        ax.set_yticks([])
        fig.colorbar(im, ax=ax, shrink=0.8)
    return _finish(fig, path)


def save_coherence_lines(
    path: Path,
    x_values: Sequence[float],
    series: dict[str, Sequence[float]],
    x_label: str,
    log_y: bool = True,
) -> Path:
    """Coherence vs a swept parameter, one line per configuration family."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label in sorted(series):
        ax.plot(x_values, series[label], marker="o", label=label)
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel(x_label)
    ax.set_ylabel("avg coherence")
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def save_pattern_gallery(
    path: Path, values: np.ndarray, shape: tuple[int, int], max_panels: int = 16
) -> Path:
    """First few patterns reshaped onto the scene grid, signed colormap."""
    ny, nx = shape
    n = min(values.shape[0], max_panels)
    cols = int(np.ceil(np.sqrt(n)))
    rows = int(np.ceil(n / cols))
    fig, axes = plt.subplots(rows, cols, figsize=(2.2 * cols, 2.2 * rows), squeeze=False)
    for k in range(rows * cols):
        ax = axes[k // cols][k % cols]
        ax.set_xticks([])
        ax.set_yticks([])
        if k < n:
            ax.imshow(values[k].reshape(ny, nx), cmap="coolwarm", vmin=-1, vmax=1, origin="lower")
        else:
            ax.axis("off")
    return _finish(fig, path)


def save_recon_comparison(path: Path, panels: dict[str, np.ndarray]) -> Path:
    """Ground truth next to reconstructions, shared gray scale."""
    n = len(panels)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.4), squeeze=False)
    for ax, (title, img) in zip(axes[0], panels.items()):
        ax.imshow(img, cmap="gray", vmin=0, vmax=1, origin="lower")
        ax.set_title(title, fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
    return _finish(fig, path)


def save_min_patterns(
    path: Path,
    k_values: Sequence[int],
    series: dict[float, Sequence[float]],
) -> Path:
    """Measurements needed for target quality vs sensor count, per time resolution."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for t_res, m_values in sorted(series.items()):
        ax.semilogy(k_values, m_values, marker="s", label=f"T = {t_res * 1e12:g} ps")
    ax.set_xlabel("number of sensors")
    ax.set_ylabel("patterns required")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)
