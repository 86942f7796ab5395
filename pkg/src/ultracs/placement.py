"""Sensor placement over a planar array region.

With few time-resolved sensors the dominant driver of operator coherence
is geometric diversity: sensors that sit close together produce nearly
identical ring systems and thus nearly duplicate measurement rows.  The
separation objective maximized here sums each sensor's distance to its
nearest neighbor.  An exhaustive lattice search gives the exact optimum
for small K; a centroidal (Lloyd) relaxation scales to larger counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .coherence import coherence_frobenius
from .transport import SceneGrid, Sensor, build_transport

_GRID_SEARCH_LIMIT = 20_000_000  # max candidate subsets before refusing


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle on the sensor plane."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError("region must have positive extent")

    @classmethod
    def square(cls, side: float, center: tuple[float, float] = (0.0, 0.0)) -> "Region":
        h = side / 2
        return cls(center[0] - h, center[0] + h, center[1] - h, center[1] + h)

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2, (self.y_min + self.y_max) / 2)

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def contains(self, xy: np.ndarray, tol: float = 1e-9) -> bool:
        xy = np.atleast_2d(xy)
        return bool(
            np.all(xy[:, 0] >= self.x_min - tol)
            and np.all(xy[:, 0] <= self.x_max + tol)
            and np.all(xy[:, 1] >= self.y_min - tol)
            and np.all(xy[:, 1] <= self.y_max + tol)
        )


@dataclass
class Placement:
    """K sensor positions with the separation objective they achieve."""

    positions: np.ndarray  # (K, 2)
    objective: float  # sum of nearest-neighbor distances; inf for K = 1
    method: str
    converged: bool = True
    iterations: int = 0


def separation_objective(positions: np.ndarray) -> float:
    """Sum over sensors of the distance to each one's nearest neighbor.

    Undefined for a single sensor; inf is returned as the conventional
    "nothing to collide with" value.
    """
    p = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    if p.shape[0] < 2:
        return float("inf")
    diff = p[:, None, :] - p[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(d, np.inf)
    return float(d.min(axis=1).sum())


def place_grid_search(region: Region, k: int, grid_n: int = 8) -> Placement:
    """Exact best-separation placement over a grid_n x grid_n candidate lattice.

    Enumerates every K-subset of lattice points; ties go to the first
    subset in lexicographic (x, y) candidate order, so results are
    deterministic.  Cost grows as C(grid_n^2, K); the subset count is
    capped to keep runtimes sane.
    """
    if k < 1:
        raise ValueError("need at least one sensor")
    if k == 1:
        return Placement(np.array([region.center]), float("inf"), "grid")
    xs = np.linspace(region.x_min, region.x_max, grid_n)
    ys = np.linspace(region.y_min, region.y_max, grid_n)
    # x slowest so that candidate order is lexicographic in (x, y)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    candidates = np.column_stack([xx.ravel(), yy.ravel()])
    n = candidates.shape[0]
    if k > n:
        raise ValueError(f"cannot place {k} sensors on {n} lattice points")
    n_subsets = math.comb(n, k)
    if n_subsets > _GRID_SEARCH_LIMIT:
        raise ValueError(
            f"{n_subsets} candidate subsets exceeds the exhaustive-search cap; "
            "reduce grid_n or use the relaxation"
        )
    diff = candidates[:, None, :] - candidates[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    np.fill_diagonal(dist, np.inf)
    best_obj = -1.0
    best_idx: tuple[int, ...] | None = None
    for idx in combinations(range(n), k):
        sub = dist[np.ix_(idx, idx)]
        obj = sub.min(axis=1).sum()
        if obj > best_obj:
            best_obj = obj
            best_idx = idx
    assert best_idx is not None
    return Placement(candidates[list(best_idx)], float(best_obj), "grid")


def place_lloyd(
    region: Region,
    k: int,
    seed: int = 0,
    raster_n: int = 256,
    max_iter: int = 200,
    tol: float = 1e-9,
) -> Placement:
    """Centroidal-relaxation placement for sensor counts beyond brute force.

    Rasterizes the region, repeatedly assigns raster cells to their nearest
    sensor, and moves each sensor to its cell-set centroid.  Fixed points
    spread sensors evenly; the spread is a good (not certified-optimal)
    separation configuration.  The relaxation is not monotone in the
    separation objective, so the best iterate seen is what gets returned.
    """
    if k < 1:
        raise ValueError("need at least one sensor")
    rng = np.random.default_rng(seed)
    if k == 1:
        # single Voronoi cell is the whole region; centroid in one step
        return Placement(np.array([region.center]), float("inf"), "lloyd", True, 1)
    pos = np.column_stack(
        [
            rng.uniform(region.x_min, region.x_max, k),
            rng.uniform(region.y_min, region.y_max, k),
        ]
    )
    xs = np.linspace(region.x_min, region.x_max, raster_n)
    ys = np.linspace(region.y_min, region.y_max, raster_n)
    xx, yy = np.meshgrid(xs, ys)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    best_pos = pos.copy()
    best_obj = separation_objective(pos)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        d2 = (
            (pts[:, 0, None] - pos[None, :, 0]) ** 2
            + (pts[:, 1, None] - pos[None, :, 1]) ** 2
        )
        owner = np.argmin(d2, axis=1)
        counts = np.bincount(owner, minlength=k).astype(np.float64)
        sx = np.bincount(owner, weights=pts[:, 0], minlength=k)
        sy = np.bincount(owner, weights=pts[:, 1], minlength=k)
        new_pos = pos.copy()
        occupied = counts > 0
        new_pos[occupied, 0] = sx[occupied] / counts[occupied]
        new_pos[occupied, 1] = sy[occupied] / counts[occupied]
        # an empty cell means two sensors collided; rescatter the orphan
        for j in np.flatnonzero(~occupied):
            new_pos[j] = [
                rng.uniform(region.x_min, region.x_max),
                rng.uniform(region.y_min, region.y_max),
            ]
        move = float(np.max(np.linalg.norm(new_pos - pos, axis=1)))
        pos = new_pos
        obj = separation_objective(pos)
        if obj > best_obj:
            best_obj = obj
            best_pos = pos.copy()
        if move < tol:
            converged = True
            break
    return Placement(best_pos, best_obj, "lloyd", converged, it)


def place_sensors(region: Region, k: int, method: str = "auto", seed: int = 0) -> Placement:
    """Dispatch between the exact search and the relaxation.

    "auto" uses the exhaustive lattice search up to K = 4 and the
    relaxation beyond, trading certified optimality for runtime.
    """
    if method == "auto":
        method = "grid" if k <= 4 else "lloyd"
    if method == "grid":
        return place_grid_search(region, k)
    if method == "lloyd":
        return place_lloyd(region, k, seed=seed)
    raise ValueError(f"unknown placement method {method!r}")


def placement_coherence_sweep(
    scene: SceneGrid,
    region: Region,
    k_list: Sequence[int],
    t_list: Sequence[float],
    method: str = "auto",
    seed: int = 0,
) -> list[dict[str, float]]:
    """Coherence of the bare (uniformly lit) transport stack over a (K, T) grid.

    For each combination: place K sensors, stack their transport matrices,
    and score the stack's average coherence.  This isolates the geometry's
    contribution, since the implied pattern set is a single all-ones row.
    Rows come back as dicts with keys k, t_res, area, mu, positions.
    """
    rows: list[dict[str, float]] = []
    for k in k_list:
        placed = place_sensors(region, int(k), method=method, seed=seed)
        for t_res in t_list:
            transports = [
                build_transport(scene, Sensor(float(x), float(y), float(t_res)))
                for x, y in placed.positions
            ]
            stacked = np.vstack([t.entries for t in transports])
            rows.append(
                {
                    "k": int(k),
                    "t_res": float(t_res),
                    "area": region.area,
                    "mu": coherence_frobenius(stacked),
                    "positions": placed.positions.copy(),
                }
            )
    return rows
