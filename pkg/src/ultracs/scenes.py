"""Synthetic piecewise-smooth test targets in [0, 1]."""

from __future__ import annotations

import numpy as np


def make_scene(kind: str, nx: int, ny: int, seed: int = 0) -> np.ndarray:
    """Generate a (ny, nx) target image.

    kinds: "shapes" (a few overlaid rectangles and disks on a dim ramp,
    TV-friendly with sharp edges), "bars" (vertical stripe chart for
    resolution reading), "constant" (flat half-gray field).
    """
    if nx < 1 or ny < 1:
        raise ValueError("scene dimensions must be positive")
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:ny, 0:nx]
    u = (xx + 0.5) / nx
    v = (yy + 0.5) / ny
    if kind == "constant":
        return np.full((ny, nx), 0.5)
    if kind == "bars":
        # stripe period grows left to right, dark background
        img = np.zeros((ny, nx))
        period = 2
        x = 0
        while x < nx:
            img[:, x : min(x + max(period // 2, 1), nx)] = 1.0
            x += period
            period += 2
        return img
    if kind == "shapes":
        img = 0.1 + 0.1 * u  # faint ramp keeps the background off zero
        for _ in range(3):
            x0, y0 = rng.uniform(0.1, 0.6, 2)
            w, h = rng.uniform(0.15, 0.35, 2)
            level = rng.uniform(0.4, 0.9)
            img[(u >= x0) & (u < x0 + w) & (v >= y0) & (v < y0 + h)] = level
        for _ in range(2):
            cx, cy = rng.uniform(0.2, 0.8, 2)
            r = rng.uniform(0.08, 0.2)
            level = rng.uniform(0.5, 1.0)
            img[(u - cx) ** 2 + (v - cy) ** 2 <= r * r] = level
        return np.clip(img, 0.0, 1.0)
    raise ValueError(f"unknown scene kind {kind!r}")
