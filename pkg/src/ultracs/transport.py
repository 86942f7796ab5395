"""Time-resolved light transport for a planar scene.

A pulsed source illuminates a plane at standoff distance D; an
omnidirectional sensor on the z=0 plane time-tags returning photons with
resolution T.  Constant-distance circles around the sensor's footprint map
to time bins, so the transport operator sends each scene pixel to exactly
one bin with an inverse-square intensity weight.

Geometry conventions (fixed, relied on by every downstream module):

* pixel centers span the full extent inclusively, i.e. ``nx`` points from
  -width/2 to +width/2 around ``center_xy`` (pitch = width/(nx-1));
* pixels are ordered row-major with x fastest: ``l = iy * nx + ix``;
* SI units throughout, c = 299 792 458 m/s.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s


@dataclass(frozen=True)
class SceneGrid:
    """Discretized planar target at z = distance_m, parallel to the sensor plane."""

    width_m: float
    height_m: float
    nx: int
    ny: int
    distance_m: float
    center_xy: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"pixel counts must be >= 1, got {self.nx}x{self.ny}")
        if self.width_m <= 0 or self.height_m <= 0:
            raise ValueError("scene extent must be positive")
        if self.distance_m <= 0:
            raise ValueError("standoff distance must be positive")

    @property
    def n_pixels(self) -> int:
        return self.nx * self.ny

    @property
    def pitch_x(self) -> float:
        return self.width_m / (self.nx - 1) if self.nx > 1 else self.width_m

    @property
    def pitch_y(self) -> float:
        return self.height_m / (self.ny - 1) if self.ny > 1 else self.height_m

    def axis_x(self) -> np.ndarray:
        cx = self.center_xy[0]
        if self.nx == 1:
            return np.array([cx])
        return np.linspace(cx - self.width_m / 2, cx + self.width_m / 2, self.nx)

    def axis_y(self) -> np.ndarray:
        cy = self.center_xy[1]
        if self.ny == 1:
            return np.array([cy])
        return np.linspace(cy - self.height_m / 2, cy + self.height_m / 2, self.ny)

    def pixel_centers(self) -> np.ndarray:
        """(L, 2) lateral pixel-center coordinates, row-major with x fastest."""
        xx, yy = np.meshgrid(self.axis_x(), self.axis_y())  # shape (ny, nx)
        return np.column_stack([xx.ravel(), yy.ravel()])


@dataclass(frozen=True)
class LineScene:
    """1-D target on a line at standoff distance_m, used for the axial analysis."""

    half_extent_m: float
    n_pixels: int
    distance_m: float
    symmetric: bool = True

    def __post_init__(self) -> None:
        if self.half_extent_m <= 0 or self.distance_m <= 0:
            raise ValueError("extent and distance must be positive")
        if self.n_pixels < 1:
            raise ValueError("need at least one pixel")

    def positions(self) -> np.ndarray:
        if self.n_pixels == 1:
            return np.array([0.0 if self.symmetric else self.half_extent_m])
        if self.symmetric:
            x = np.linspace(-self.half_extent_m, self.half_extent_m, self.n_pixels)
            # enforce exact antisymmetry so mirrored pixels are equidistant
            return (x - x[::-1]) / 2
        return np.linspace(0.0, self.half_extent_m, self.n_pixels)


@dataclass(frozen=True)
class Sensor:
    """Time-resolved detector on the z=0 plane."""

    x: float
    y: float
    t_res: float  # time-bin width, seconds

    def __post_init__(self) -> None:
        if self.t_res <= 0:
            raise ValueError("time resolution must be positive")


@dataclass
class TransportMatrix:
    """Per-sensor N x L map from scene pixels to time bins.

    Every column holds a single nonzero entry: the pixel's full 1/d^2
    weight in the bin of its center's arrival time.
    """

    entries: np.ndarray
    n_bins: int
    t0: float  # earliest arrival time, seconds
    sensor: Sensor
    scene: Union[SceneGrid, LineScene]

    @property
    def n_pixels(self) -> int:
        return self.entries.shape[1]


@dataclass
class RingMap:
    """Per-pixel time-bin labels on the scene grid (the ring image)."""

    labels: np.ndarray  # (ny, nx) int
    n_bins: int
    t0: float
    sensor: Sensor
    scene: SceneGrid


def pixel_distances(scene: SceneGrid, sensor: Sensor) -> np.ndarray:
    """Euclidean sensor-to-pixel-center distances, one per pixel (length L)."""
    centers = scene.pixel_centers()
    dx = centers[:, 0] - sensor.x
    dy = centers[:, 1] - sensor.y
    return np.sqrt(dx * dx + dy * dy + scene.distance_m**2)


def bin_assignment(distances: np.ndarray, t_res: float) -> tuple[np.ndarray, int, float]:
    """Nearest-bin (floor) discretization of arrival times.

    Returns (bin index per pixel, bin count N, earliest arrival t0).
    t0 is the minimum over the given distances, so a laterally offset grid
    still starts at bin zero.
    """
    t = np.asarray(distances, dtype=np.float64) / SPEED_OF_LIGHT
    t0 = float(t.min())
    bins = np.floor((t - t0) / t_res).astype(np.int64)
    return bins, int(bins.max()) + 1, t0


def _transport_from_distances(
    distances: np.ndarray, t_res: float
) -> tuple[np.ndarray, int, float]:
    bins, n_bins, t0 = bin_assignment(distances, t_res)
    entries = np.zeros((n_bins, distances.size))
    entries[bins, np.arange(distances.size)] = 1.0 / distances**2
    return entries, n_bins, t0


def build_transport(scene: SceneGrid, sensor: Sensor) -> TransportMatrix:
    """Construct the N x L transport matrix for one sensor.

    H[n(l), l] = 1/d_l^2 with n(l) = floor((d_l/c - t0) / T) and
    t0 = min_l d_l / c.  Extremely coarse T collapses everything into a
    single bin (N = 1), the classic one-bucket detector.
    """
    d = pixel_distances(scene, sensor)
    entries, n_bins, t0 = _transport_from_distances(d, sensor.t_res)
    return TransportMatrix(entries, n_bins, t0, sensor, scene)


def ring_map(scene: SceneGrid, sensor: Sensor) -> RingMap:
    """Per-pixel bin labels, identical to the rows selected by build_transport."""
    d = pixel_distances(scene, sensor)
    bins, n_bins, t0 = bin_assignment(d, sensor.t_res)
    return RingMap(bins.reshape(scene.ny, scene.nx), n_bins, t0, sensor, scene)


def ring_radii(distance_m: float, t_res: float, n_bins: int, t0: float | None = None) -> np.ndarray:
    """Lateral radii where the bin label increments: sqrt(c^2 (nT + t0)^2 - D^2).

    By default t0 = D/c (sensor directly under some scene point).  Entry n
    is the inner radius of ring n, so entry 0 is 0 for the default t0.
    """
    if t0 is None:
        t0 = distance_m / SPEED_OF_LIGHT
    n = np.arange(n_bins)
    reach = (SPEED_OF_LIGHT * (n * t_res + t0)) ** 2 - distance_m**2
    return np.sqrt(np.maximum(reach, 0.0))


def resolution_limit(distance_m: float, t_res: float) -> float:
    """Smallest recoverable lateral feature for a single sensor: cT*sqrt(1 + 2D/(cT))."""
    if distance_m < 0:
        raise ValueError("distance must be non-negative")
    if t_res <= 0:
        raise ValueError("time resolution must be positive")
    ct = SPEED_OF_LIGHT * t_res
    return ct * np.sqrt(1.0 + 2.0 * distance_m / ct)


def dynamic_range_coverage(distance_m: float, sat_ratio: float) -> float:
    """Farthest measurable lateral offset sqrt(B - 1) * D.

    `sat_ratio` is the saturation-to-noise-floor intensity ratio B; the
    inverse-square falloff makes points beyond this radius drop under the
    noise floor once the gain is set to avoid saturating the nearest point.
    """
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    if sat_ratio <= 1.0:
        raise ValueError(f"saturation ratio must exceed 1, got {sat_ratio}")
    return float(np.sqrt(sat_ratio - 1.0) * distance_m)


def one_d_transport(
    half_extent_m: float,
    n_pixels: int,
    distance_m: float,
    t_res: float,
    symmetric: bool = True,
) -> TransportMatrix:
    """Transport matrix for a 1-D scene with the sensor at the origin.

    With `symmetric` the pixels span [-half_extent, +half_extent]; mirrored
    pixels are equidistant and therefore produce identical columns.  With
    `symmetric=False` only the positive half-line is modeled.
    """
    scene = LineScene(half_extent_m, n_pixels, distance_m, symmetric)
    x = scene.positions()
    d = np.sqrt(distance_m**2 + x * x)
    entries, n_bins, t0 = _transport_from_distances(d, t_res)
    return TransportMatrix(entries, n_bins, t0, Sensor(0.0, 0.0, t_res), scene)


def single_pixel_transport(
    scene: SceneGrid,
    sensor: Sensor | None = None,
    exact_ones: bool = True,
) -> TransportMatrix:
    """One-row operator of the classic bucket-detector architecture.

    `exact_ones` uses a row of ones (the textbook convention); otherwise the
    physical 1/d^2 weights are kept.  Either way N = 1.
    """
    if sensor is None:
        sensor = Sensor(0.0, 0.0, 1.0)
    d = pixel_distances(scene, sensor)
    if exact_ones:
        row = np.ones_like(d)
    else:
        row = 1.0 / d**2
    return TransportMatrix(row[None, :], 1, float(d.min() / SPEED_OF_LIGHT), sensor, scene)
