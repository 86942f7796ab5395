"""Tests for operator assembly, measurement simulation, and recovery."""

import numpy as np
import pytest

from ultracs.patterns import PatternSet, baseline_patterns, stack_transports
from ultracs.simrecon import (
    Measurement,
    assemble_operator,
    pinv_reconstruct,
    simulate_measurement,
    tv_reconstruct,
)
from ultracs.transport import (
    SceneGrid,
    Sensor,
    build_transport,
    one_d_transport,
    pixel_distances,
)


def small_setup(nx=12, ny=12, t_res=5e-11, sensors=((0.0, 0.0),)):
    grid = SceneGrid(width_m=1.0, height_m=1.0, nx=nx, ny=ny, distance_m=4.0)
    transports = [build_transport(grid, Sensor(x, y, t_res)) for x, y in sensors]
    return grid, transports


def blocky_image(ny, nx):
    img = np.full((ny, nx), 0.2)
    img[ny // 4 : 3 * ny // 4, nx // 4 : 3 * nx // 4] = 0.8
    img[1:3, 1:3] = 0.5
    return img


def test_assemble_hand_case():
    grid, transports = small_setup(nx=3, ny=3, sensors=((-0.1, 0.0), (0.1, 0.0)))
    lam = np.array([[1.0, -1.0, 0.5, 1.0, -0.5, 1.0, 0.25, -1.0, 1.0],
                    [0.5, 1.0, 1.0, -1.0, 1.0, 0.75, 1.0, 1.0, -0.25]])
    patterns = PatternSet(lam, "manual")
    op = assemble_operator(transports, patterns)
    h = np.vstack([t.entries for t in transports])
    expected = np.vstack([h @ np.diag(lam[0]), h @ np.diag(lam[1])])
    np.testing.assert_allclose(op.matrix, expected, rtol=1e-15)
    np.testing.assert_allclose(op.col_norms, np.linalg.norm(expected, axis=0), rtol=1e-14)
    assert op.scene == grid
    # block row ranges: pattern-major, sensor blocks inside
    n0 = transports[0].entries.shape[0]
    n1 = transports[1].entries.shape[0]
    per = n0 + n1
    assert op.block_rows[(0, 0)] == (0, n0)
    assert op.block_rows[(1, 0)] == (n0, per)
    assert op.block_rows[(0, 1)] == (per, per + n0)
    assert op.block_rows[(1, 1)] == (per + n0, 2 * per)
    assert op.n_rows == 2 * per


def test_assemble_all_ones_is_bare_stack():
    grid, transports = small_setup(nx=4, ny=4)
    patterns = baseline_patterns("all_ones", 1, 16)
    op = assemble_operator(transports, patterns)
    np.testing.assert_array_equal(op.matrix, transports[0].entries)


def test_assemble_zero_pattern_entry_zeroes_column():
    grid, transports = small_setup(nx=3, ny=3)
    lam = np.ones((1, 9))
    lam[0, 4] = 0.0
    op = assemble_operator(transports, PatternSet(lam, "manual"))
    assert np.all(op.matrix[:, 4] == 0.0)
    assert op.col_norms[4] == 0.0


def test_assemble_byte_cap():
    grid, transports = small_setup(nx=8, ny=8)
    patterns = baseline_patterns("bernoulli", 4, 64)
    need = 4 * transports[0].entries.shape[0] * 64 * 8
    with pytest.raises(ValueError):
        assemble_operator(transports, patterns, max_bytes=need - 1)
    assemble_operator(transports, patterns, max_bytes=need)


def test_assemble_scene_consistency_checks():
    grid_a, ta = small_setup(nx=3, ny=3)
    grid_b = SceneGrid(width_m=2.0, height_m=2.0, nx=3, ny=3, distance_m=4.0)
    tb = build_transport(grid_b, Sensor(0.0, 0.0, 5e-11))
    patterns = baseline_patterns("all_ones", 1, 9)
    with pytest.raises(ValueError):
        assemble_operator([ta[0], tb], patterns)
    with pytest.raises(ValueError):
        assemble_operator(ta, patterns, scene=grid_b)
    stacked = stack_transports(ta)
    with pytest.raises(ValueError):
        assemble_operator(stacked, patterns)  # stack alone carries no scene
    op = assemble_operator(stacked, patterns, scene=grid_a)
    np.testing.assert_array_equal(op.matrix, ta[0].entries)


def test_assemble_size_mismatches():
    grid, transports = small_setup(nx=3, ny=3)
    with pytest.raises(ValueError):
        assemble_operator(transports, baseline_patterns("all_ones", 1, 8))
    other = SceneGrid(width_m=1.0, height_m=1.0, nx=2, ny=2, distance_m=4.0)
    with pytest.raises(ValueError):
        assemble_operator(transports, baseline_patterns("all_ones", 1, 9), scene=other)


def test_measurement_noiseless_paths():
    grid, transports = small_setup()
    op = assemble_operator(transports, baseline_patterns("bernoulli", 6, 144, seed=0))
    f = blocky_image(12, 12)
    clean = op.matrix @ f.ravel()
    for snr in (None, np.inf):
        m = simulate_measurement(op, f, snr_db=snr)
        np.testing.assert_array_equal(m.values, clean)
        assert m.snr_db is None
        assert m.sigma == 0.0


def test_measurement_linearity():
    grid, transports = small_setup()
    op = assemble_operator(transports, baseline_patterns("bernoulli", 6, 144, seed=0))
    f = 0.4 * blocky_image(12, 12)
    single = simulate_measurement(op, f).values
    double = simulate_measurement(op, 2.0 * f).values
    np.testing.assert_allclose(double, 2.0 * single, rtol=1e-12)


def test_measurement_realized_snr():
    grid, transports = small_setup()
    op = assemble_operator(transports, baseline_patterns("bernoulli", 100, 144, seed=1))
    f = blocky_image(12, 12)
    clean = op.matrix @ f.ravel()
    realized = []
    for seed in range(5):
        m = simulate_measurement(op, f, snr_db=30.0, seed=seed)
        noise = m.values - clean
        realized.append(20.0 * np.log10(np.linalg.norm(clean) / np.linalg.norm(noise)))
    assert np.mean(realized) == pytest.approx(30.0, abs=0.5)


def test_measurement_seed_reproducible():
    grid, transports = small_setup()
    op = assemble_operator(transports, baseline_patterns("bernoulli", 6, 144, seed=0))
    f = blocky_image(12, 12)
    a = simulate_measurement(op, f, snr_db=40.0, seed=9)
    b = simulate_measurement(op, f, snr_db=40.0, seed=9)
    np.testing.assert_array_equal(a.values, b.values)
    c = simulate_measurement(op, f, snr_db=40.0, seed=10)
    assert not np.array_equal(a.values, c.values)


def test_measurement_input_validation():
    grid, transports = small_setup(nx=3, ny=3)
    op = assemble_operator(transports, baseline_patterns("all_ones", 1, 9))
    with pytest.raises(ValueError):
        simulate_measurement(op, np.zeros((3, 3)), snr_db=40.0)  # no signal
    with pytest.raises(ValueError):
        simulate_measurement(op, np.full((3, 3), 1.5))  # out of range
    with pytest.raises(ValueError):
        simulate_measurement(op, -0.1 * np.ones((3, 3)))
    with pytest.raises(ValueError):
        simulate_measurement(op, np.ones((4, 4)))  # wrong size


def test_tv_recovers_blocky_scene_noiseless():
    grid, transports = small_setup(sensors=((-0.05, -0.05), (0.05, 0.05)))
    op = assemble_operator(transports, baseline_patterns("bernoulli", 60, 144, seed=2))
    f = blocky_image(12, 12)
    m = simulate_measurement(op, f)
    result = tv_reconstruct(op, m, reference=f)
    rel = np.linalg.norm(result.image - f) / np.linalg.norm(f)
    assert rel < 1e-2
    assert result.method == "tv"
    assert result.psnr is not None and result.psnr > 40.0


def test_tv_constant_scene():
    grid, transports = small_setup()
    op = assemble_operator(transports, baseline_patterns("bernoulli", 40, 144, seed=3))
    f = np.full((12, 12), 0.5)
    result = tv_reconstruct(op, simulate_measurement(op, f))
    np.testing.assert_allclose(result.image, f, atol=5e-3)


def test_tv_objective_history_non_increasing():
    grid, transports = small_setup()
    op = assemble_operator(transports, baseline_patterns("bernoulli", 30, 144, seed=4))
    f = blocky_image(12, 12)
    m = simulate_measurement(op, f, snr_db=40.0, seed=0)
    result = tv_reconstruct(op, m)
    hist = result.objective_history
    assert len(hist) == result.iterations
    assert all(b <= a for a, b in zip(hist, hist[1:]))
    assert result.residual_norm >= 0.0


def test_tv_quality_improves_with_more_patterns():
    grid, transports = small_setup()
    f = blocky_image(12, 12)
    mean_err = {}
    for m_count in (10, 40):
        op = assemble_operator(
            transports, baseline_patterns("bernoulli", m_count, 144, seed=5)
        )
        errs = []
        for seed in range(5):
            meas = simulate_measurement(op, f, snr_db=40.0, seed=seed)
            rec = tv_reconstruct(op, meas)
            errs.append(np.linalg.norm(rec.image - f))
        mean_err[m_count] = np.mean(errs)
    assert mean_err[40] < mean_err[10]


def test_tv_input_validation():
    grid, transports = small_setup(nx=3, ny=3)
    op = assemble_operator(transports, baseline_patterns("all_ones", 1, 9))
    with pytest.raises(ValueError):
        tv_reconstruct(op, np.zeros(op.n_rows + 1))
    line = one_d_transport(1.0, 9, 4.0, 5e-11)
    line_op = assemble_operator([line], baseline_patterns("all_ones", 1, 9))
    with pytest.raises(ValueError):
        tv_reconstruct(line_op, np.zeros(line_op.n_rows))


def test_pinv_orthogonal_rows_exact():
    rng = np.random.default_rng(6)
    q, _ = np.linalg.qr(rng.normal(size=(9, 9)))
    f = rng.uniform(size=9)
    est = pinv_reconstruct(q, q @ f).image
    np.testing.assert_allclose(est, f, rtol=1e-10, atol=1e-12)


def test_pinv_zero_measurement_zero_estimate():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(5, 8))
    result = pinv_reconstruct(a, np.zeros(5))
    np.testing.assert_array_equal(result.image, np.zeros(8))
    assert result.residual_norm == 0.0


def test_pinv_shape_and_clip():
    rng = np.random.default_rng(8)
    a = rng.normal(size=(16, 16))
    f = rng.uniform(size=16)
    result = pinv_reconstruct(a, a @ f, shape=(4, 4), clip=True, reference=f.reshape(4, 4))
    assert result.image.shape == (4, 4)
    assert result.image.min() >= 0.0 and result.image.max() <= 1.0
    assert result.psnr is not None


def test_pinv_line_scene_recovers_bin_averages():
    h = one_d_transport(2.0, 81, 10.0, 2e-11)
    rng = np.random.default_rng(9)
    f = rng.uniform(size=81)
    est = pinv_reconstruct(h, h.entries @ f).image
    e = h.entries
    # disjoint row supports make the pseudoinverse act bin by bin: the
    # estimate is the weight vector rescaled by the bin's weighted mean
    for n in range(e.shape[0]):
        cols = np.flatnonzero(e[n] > 0)
        w = e[n, cols]
        np.testing.assert_allclose(
            est[cols], w * (w @ f[cols]) / (w @ w), rtol=1e-8, atol=1e-12
        )


def test_pinv_line_scene_noise_grows_off_axis():
    # pixels far off axis return much less light (inverse square), so
    # inverting amplifies their noise; the line must be long relative to
    # the standoff for the falloff to bite
    h = one_d_transport(20.0, 161, 2.0, 2e-11)
    x = np.linspace(-20.0, 20.0, 161)
    f = np.full(161, 0.5)
    clean = h.entries @ f
    sigma = 1e-3 * np.linalg.norm(clean) / np.sqrt(clean.size)
    near = np.abs(x) < 5.0
    far = np.abs(x) > 15.0
    near_err, far_err = [], []
    for seed in range(5):
        noise = np.random.default_rng(seed).normal(0.0, sigma, clean.size)
        est = pinv_reconstruct(h, clean + noise).image
        err = np.abs(est - f)
        near_err.append(err[near].mean())
        far_err.append(err[far].mean())
    assert np.mean(far_err) > 2.0 * np.mean(near_err)


def test_degenerate_single_bin_operator():
    # a huge time bin collapses the transport to one weighted row, so the
    # assembled operator is just the pattern matrix times those weights
    grid = SceneGrid(width_m=1.0, height_m=1.0, nx=3, ny=3, distance_m=10.0)
    sensor = Sensor(0.0, 0.0, 1.0)
    t = build_transport(grid, sensor)
    assert t.n_bins == 1
    pats = baseline_patterns("bernoulli", 4, 9, seed=0)
    op = assemble_operator([t], pats)
    weights = 1.0 / pixel_distances(grid, sensor) ** 2
    np.testing.assert_allclose(op.matrix, pats.values * weights[None, :], rtol=1e-15)
