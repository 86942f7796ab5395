"""Tests for sensor placement search."""

import numpy as np
import pytest

from ultracs.placement import (
    Region,
    place_grid_search,
    place_lloyd,
    place_sensors,
    placement_coherence_sweep,
    separation_objective,
)
from ultracs.transport import SceneGrid


def test_objective_hand_case():
    pts = np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]])
    # nearest neighbors: 3, 3, 4
    assert separation_objective(pts) == pytest.approx(10.0, rel=1e-15)


def test_objective_single_point_infinite():
    assert separation_objective(np.array([[1.0, 2.0]])) == np.inf


def test_grid_search_two_sensors_opposite_corners():
    region = Region.square(0.1)
    placement = place_grid_search(region, 2, grid_n=5)
    got = set(map(tuple, np.round(placement.positions, 12)))
    assert got == {(-0.05, -0.05), (0.05, 0.05)}
    # the two nearest-neighbor terms both equal the full diagonal
    diag = np.sqrt(2.0) * 0.1
    assert placement.objective == pytest.approx(2.0 * diag, rel=1e-12)


def test_grid_search_four_sensors_all_corners():
    region = Region.square(0.2, (1.0, -2.0))
    placement = place_grid_search(region, 4, grid_n=4)
    got = set(map(tuple, np.round(placement.positions, 9)))
    assert got == {(0.9, -2.1), (0.9, -1.9), (1.1, -2.1), (1.1, -1.9)}
    assert placement.objective == pytest.approx(4 * 0.2, rel=1e-12)


def test_grid_search_single_sensor_center():
    region = Region.square(0.3, (0.5, 0.25))
    placement = place_grid_search(region, 1, grid_n=7)
    np.testing.assert_allclose(placement.positions, [[0.5, 0.25]], atol=1e-15)
    assert placement.objective == np.inf


def test_grid_search_subset_cap():
    region = Region.square(0.1)
    with pytest.raises(ValueError):
        place_grid_search(region, 12, grid_n=30)


def test_grid_search_deterministic():
    region = Region.square(1.0)
    a = place_grid_search(region, 3, grid_n=6)
    b = place_grid_search(region, 3, grid_n=6)
    np.testing.assert_array_equal(a.positions, b.positions)
    assert a.objective == b.objective


def test_lloyd_single_sensor_center():
    region = Region.square(0.5, (0.2, -0.4))
    placement = place_lloyd(region, 1, seed=3)
    np.testing.assert_allclose(placement.positions, [[0.2, -0.4]], atol=1e-3)
    assert placement.converged


def test_lloyd_two_sensors_spread_out():
    region = Region.square(1.0)
    for seed in range(20):
        placement = place_lloyd(region, 2, seed=seed)
        d = np.linalg.norm(placement.positions[0] - placement.positions[1])
        assert d >= 0.5


def test_lloyd_never_worse_than_its_init():
    # best-iterate tracking starts at the initial draw, so the returned
    # objective can never fall below the init's
    region = Region.square(1.0)
    for k in range(2, 9):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            init = np.column_stack(
                [rng.uniform(-0.5, 0.5, k), rng.uniform(-0.5, 0.5, k)]
            )
            start = separation_objective(init)
            final = place_lloyd(region, k, seed=seed).objective
            assert final >= start - 1e-12


def test_lloyd_positions_inside_region():
    region = Region.square(0.8, (2.0, 3.0))
    for seed in (0, 1, 2):
        placement = place_lloyd(region, 5, seed=seed)
        assert region.contains(placement.positions)


def test_lloyd_deterministic_per_seed():
    region = Region.square(0.6)
    a = place_lloyd(region, 4, seed=9)
    b = place_lloyd(region, 4, seed=9)
    np.testing.assert_array_equal(a.positions, b.positions)


def test_auto_method_dispatch():
    region = Region.square(0.1)
    small = place_sensors(region, 2)
    assert small.method == "grid"
    large = place_sensors(region, 5)
    assert large.method == "lloyd"


def test_sweep_monotone_in_time_resolution():
    grid = SceneGrid(width_m=2.0, height_m=2.0, nx=10, ny=10, distance_m=10.0)
    region = Region.square(0.1)
    rows = placement_coherence_sweep(
        grid, region, k_list=[1, 2], t_list=[2e-11, 1e-10, 4e-10], method="grid"
    )
    assert len(rows) == 6
    for k in (1, 2):
        mus = [r["mu"] for r in rows if r["k"] == k]
        assert mus == sorted(mus)
        assert mus[0] < mus[-1]


def test_sweep_rank_one_limit():
    # a single sensor with one huge bin collapses every column together
    grid = SceneGrid(width_m=1.0, height_m=1.0, nx=4, ny=4, distance_m=10.0)
    region = Region.square(0.01)
    rows = placement_coherence_sweep(
        grid, region, k_list=[1], t_list=[1.0], method="grid"
    )
    l = grid.n_pixels
    assert rows[0]["mu"] == pytest.approx(l - 1.0, rel=1e-9)
