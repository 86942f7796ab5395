"""Experiment orchestration: run commands from configs into artifact dirs.

Each command takes a validated config, an output directory, and a seed
offset; it writes delimited tables, PGM images, binary blobs, rendered
figures, and a verbatim echo of the config.  All seeds in a run are the
config seeds plus the command-line offset, so a whole study can be
re-rolled by changing one number.

Sweep points run as independent jobs on a bounded thread pool (the heavy
work is matrix algebra, which releases the interpreter lock); rows are
sorted before writing so the CSVs never depend on completion order.
"""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import figures
from .config import ConfigError, ExperimentConfig
from .io import (
    read_csv,
    read_matrix_blob,
    read_pgm,
    write_csv,
    write_matrix_blob,
    write_pgm,
    write_pgm_labels,
)
from .patterns import (
    GramCache,
    PatternSet,
    StackedTransport,
    baseline_patterns,
    coherence_cost,
    normalized_transport_gram,
    optimize_patterns,
)
from .placement import Region, place_sensors, placement_coherence_sweep
from .scenes import make_scene
from .simrecon import (
    ReconResult,
    assemble_operator,
    pinv_reconstruct,
    simulate_measurement,
    tv_reconstruct,
)
from .transport import (
    SceneGrid,
    Sensor,
    TransportMatrix,
    build_transport,
    resolution_limit,
    ring_map,
    single_pixel_transport,
)


def _prepare_out(config: ExperimentConfig, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.toml").write_text(config.raw_text)
    return out


def _run_jobs(fn: Callable[[Any], Any], items: Sequence[Any], jobs: int) -> list[Any]:
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _scene_grid(config: ExperimentConfig) -> SceneGrid:
    sc = config.scene
    return SceneGrid(sc.width_m, sc.height_m, sc.nx, sc.ny, sc.distance_m)


def _region(config: ExperimentConfig) -> Region:
    se = config.sensors
    return Region.square(se.region_side_m, se.region_center)


def _scene_image(config: ExperimentConfig) -> np.ndarray:
    sc = config.scene
    if sc.image:
        img = read_pgm(sc.image)
        if img.shape != (sc.ny, sc.nx):
            raise ConfigError(
                f"target image is {img.shape[1]}x{img.shape[0]}, "
                f"config says {sc.nx}x{sc.ny}"
            )
        return img
    return make_scene(sc.kind, sc.nx, sc.ny, sc.seed)


def _positions(config: ExperimentConfig, seed: int) -> np.ndarray:
    se = config.sensors
    if se.positions_file:
        _, _, rows = _read_placement_csv(se.positions_file)
        return np.array([[x, y] for _, x, y in rows])
    placed = place_sensors(_region(config), se.count, se.method, se.seed + seed)
    return placed.positions


def _read_placement_csv(path: str | Path):
    schema, header, rows = read_csv(path)
    parsed = [(int(r[0]), float(r[1]), float(r[2])) for r in rows]
    return schema, header, parsed


def _write_placement_csv(path: Path, positions: np.ndarray) -> None:
    rows = [(i, x, y) for i, (x, y) in enumerate(positions)]
    write_csv(path, "placement/1", ("index", "x_m", "y_m"), rows)


def _ps(t_res: float) -> str:
    return f"{t_res * 1e12:g}"


# ---------------------------------------------------------------- transport


def cmd_transport(config: ExperimentConfig, out_dir: str | Path, seed: int = 0) -> dict:
    """Transport study: stacked-operator blob, ring maps, resolution table.

    The blob covers the configured sensor placement at the configured time
    resolution; ring maps and the resolution table sweep the transport
    block's T and D lists.
    """
    if not config.transport.t_res_list:
        raise ConfigError("transport.t_res_list must not be empty")
    if not config.transport.distance_list:
        raise ConfigError("transport.distance_list must not be empty")
    out = _prepare_out(config, out_dir)
    grid = _scene_grid(config)
    positions = _positions(config, seed)
    _write_placement_csv(out / "placement.csv", positions)

    transports = [
        build_transport(grid, Sensor(x, y, config.sensors.t_res)) for x, y in positions
    ]
    stacked = StackedTransport.from_transports(transports)
    write_matrix_blob(out / "transport_stack.bin", stacked.matrix)

    ring_panels: dict[str, np.ndarray] = {}
    sx, sy = positions[0]
    for t_res in config.transport.t_res_list:
        rm = ring_map(grid, Sensor(sx, sy, t_res))
        write_pgm_labels(out / f"rings_t{_ps(t_res)}ps.pgm", rm.labels)
        ring_panels[f"T = {_ps(t_res)} ps"] = rm.labels

    rows = []
    curves: dict[float, list[float]] = {}
    for d in config.transport.distance_list:
        curves[d] = []
        for t_res in config.transport.t_res_list:
            limit = resolution_limit(d, t_res)
            rows.append((d, t_res, limit))
            curves[d].append(limit)
    write_csv(out / "resolution.csv", "resolution/1", ("distance_m", "t_res_s", "limit_m"), rows)

    figures.save_ring_maps(out / "rings.png", ring_panels)
    figures.save_resolution_curves(out / "resolution.png", config.transport.t_res_list, curves)
    return {"out": out, "n_bins": stacked.matrix.shape[0], "rows": len(rows)}


# ------------------------------------------------------------------ design


def cmd_design(config: ExperimentConfig, out_dir: str | Path, seed: int = 0) -> dict:
    """Design study: placement-coherence sweep plus a pattern-family sweep.

    The (K, T, area) sweep scores bare transport stacks.  The pattern
    sweep runs at the sensor block's design point and compares optimized
    patterns against the stock families at each pattern count.
    """
    out = _prepare_out(config, out_dir)
    grid = _scene_grid(config)
    de = config.design
    se = config.sensors

    sweep_points = [
        (k, side) for side in de.area_side_list for k in de.k_list
    ]

    def geometry_job(point: tuple[int, float]) -> list[dict]:
        k, side = point
        region = Region.square(side, se.region_center)
        return placement_coherence_sweep(
            grid, region, [k], de.t_res_list, se.method, se.seed + seed
        )

    sweep_rows: list[dict] = []
    for chunk in _run_jobs(geometry_job, sweep_points, config.run.jobs):
        sweep_rows.extend(chunk)
    sweep_rows.sort(key=lambda r: (r["area"], r["k"], r["t_res"]))
    write_csv(
        out / "placement_coherence.csv",
        "placement-coherence/1",
        ("k", "t_res_s", "area_m2", "mu"),
        [(r["k"], r["t_res"], r["area"], r["mu"]) for r in sweep_rows],
    )
    for k in sorted(set(de.k_list)):
        placed = place_sensors(_region(config), k, se.method, se.seed + seed)
        _write_placement_csv(out / f"placement_k{k}.csv", placed.positions)

    mu_series: dict[str, list[float]] = {}
    for r in sweep_rows:
        mu_series.setdefault(f"K = {r['k']}, side = {r['area'] ** 0.5:g} m", []).append(r["mu"])
    figures.save_coherence_lines(
        out / "placement_coherence.png",
        [t * 1e12 for t in sorted(de.t_res_list)],
        mu_series,
        "time resolution (ps)",
    )

    pattern_rows: list[tuple] = []
    gallery: np.ndarray | None = None
    if de.optimize:
        positions = _positions(config, seed)
        transports = [
            build_transport(grid, Sensor(x, y, se.t_res)) for x, y in positions
        ]
        stacked = StackedTransport.from_transports(transports)
        cache = normalized_transport_gram(stacked)
        l = grid.n_pixels

        def pattern_job(m: int) -> list[tuple]:
            pc = config.patterns
            optimized = optimize_patterns(
                cache, m, seed=pc.seed + seed, max_iter=pc.max_iter, tol=pc.tol
            )
            write_matrix_blob(out / f"patterns_m{m}.bin", optimized.values)
            for j in range(min(4, m)):
                write_pgm(
                    out / f"patterns_m{m}_p{j}.pgm",
                    ((optimized.values[j] + 1) / 2).reshape(grid.ny, grid.nx),
                )
            rows_m = []
            for kind in ("optimized", "hadamard", "bernoulli", "gaussian"):
                if kind == "optimized":
                    values = optimized.values
                else:
                    values = baseline_patterns(kind, m, l, pc.seed + seed).values
                mu = coherence_cost(values, cache, diag_floor=1e-12) / l
                rows_m.append((se.count, se.t_res, m, kind, mu))
            return rows_m

        for chunk in _run_jobs(pattern_job, sorted(set(de.m_list)), config.run.jobs):
            pattern_rows.extend(chunk)
        pattern_rows.sort(key=lambda r: (r[2], r[3]))
        write_csv(
            out / "pattern_coherence.csv",
            "pattern-coherence/1",
            ("k", "t_res_s", "m", "kind", "mu"),
            pattern_rows,
        )
        m_values = sorted(set(de.m_list))
        series: dict[str, list[float]] = {}
        for _, _, m, kind, mu in pattern_rows:
            series.setdefault(kind, []).append(mu)
        figures.save_coherence_lines(
            out / "pattern_coherence.png", m_values, series, "patterns M"
        )
        best_m = m_values[-1]
        gallery = read_matrix_blob(out / f"patterns_m{best_m}.bin")
        figures.save_pattern_gallery(
            out / "pattern_gallery.png", gallery, (grid.ny, grid.nx)
        )
    return {"out": out, "sweep_rows": len(sweep_rows), "pattern_rows": len(pattern_rows)}


# ------------------------------------------------------------------- image


def _build_transports(
    config: ExperimentConfig, grid: SceneGrid, seed: int
) -> list[TransportMatrix]:
    if config.run.single_pixel:
        return [single_pixel_transport(grid)]
    positions = _positions(config, seed)
    return [
        build_transport(grid, Sensor(x, y, config.sensors.t_res)) for x, y in positions
    ]


def _build_patterns(
    config: ExperimentConfig,
    transports: Sequence[TransportMatrix],
    n_pixels: int,
    seed: int,
    m_override: int | None = None,
    gram_cache: GramCache | None = None,
) -> PatternSet:
    """Pattern setup for imaging runs.

    Honors pattern artifacts from design runs unless a pattern-count
    override (bisection loops) forces regeneration; the single-pixel mode
    falls back to random signs since its rank-one stack gives the
    optimizer nothing to improve.
    """
    pc = config.patterns
    m = m_override if m_override is not None else pc.count
    if pc.file and m_override is None:
        return PatternSet(read_matrix_blob(pc.file), "file")
    if pc.kind == "optimized" and not config.run.single_pixel:
        cache = gram_cache
        if cache is None:
            cache = normalized_transport_gram(StackedTransport.from_transports(transports))
        return optimize_patterns(
            cache, m, seed=pc.seed + seed, max_iter=pc.max_iter, tol=pc.tol
        )
    kind = "bernoulli" if pc.kind == "optimized" else pc.kind
    return baseline_patterns(kind, m, n_pixels, pc.seed + seed)


def _reconstruct(
    config: ExperimentConfig,
    op,
    measurement,
    reference: np.ndarray,
) -> ReconResult:
    rc = config.recon
    if rc.method == "tv":
        return tv_reconstruct(
            op,
            measurement,
            reg_mu=rc.reg_mu,
            beta=rc.beta,
            max_outer=rc.max_outer,
            tol=rc.tol,
            reference=reference,
        )
    if rc.method == "pinv":
        return pinv_reconstruct(
            op,
            measurement,
            shape=reference.shape,
            clip=True,
            reference=reference,
        )
    raise ConfigError(f"unknown recon method {rc.method!r}")


def cmd_image(config: ExperimentConfig, out_dir: str | Path, seed: int = 0) -> dict:
    """Full pipeline: place, design or load patterns, simulate, reconstruct.

    One reconstruction per noise seed; recon PGMs and a metrics table come
    out, along with the scene, placement, and pattern artifacts actually
    used (so any run is self-describing).
    """
    out = _prepare_out(config, out_dir)
    target = _scene_image(config)
    grid = _scene_grid(config)
    transports = _build_transports(config, grid, seed)
    patterns = _build_patterns(config, transports, grid.n_pixels, seed)
    write_pgm(out / "scene.pgm", target)
    if not config.run.single_pixel:
        _write_placement_csv(
            out / "placement.csv", np.array([[t.sensor.x, t.sensor.y] for t in transports])
        )
    write_matrix_blob(out / "patterns.bin", patterns.values)

    op = assemble_operator(transports, patterns)
    k = len(transports)
    m = patterns.n_patterns
    snr = None if config.noise.noiseless else config.noise.snr_db
    mode = "sp" if config.run.single_pixel else "tr"

    def recon_job(noise_seed: int) -> tuple:
        started = time.perf_counter()
        meas = simulate_measurement(op, target, snr, noise_seed + seed)
        result = _reconstruct(config, op, meas, target)
        wall = time.perf_counter() - started
        write_pgm(out / f"recon_n{noise_seed}.pgm", result.image)
        run_id = f"{mode}-k{k}-t{_ps(config.sensors.t_res)}ps-m{m}-n{noise_seed}"
        return (
            run_id,
            k,
            config.sensors.t_res,
            m,
            noise_seed,
            result.psnr,
            result.ssim if result.ssim is not None else float("nan"),
            round(wall, 3),
        ), result

    outputs = _run_jobs(recon_job, list(config.noise.seeds), config.run.jobs)
    rows = sorted([row for row, _ in outputs], key=lambda r: r[4])
    write_csv(
        out / "metrics.csv",
        "image-metrics/1",
        ("run_id", "k", "t_res_s", "m", "noise_seed", "psnr_db", "ssim", "wall_s"),
        rows,
    )
    panels = {"target": target}
    for (_, result), noise_seed in zip(outputs, config.noise.seeds):
        if len(panels) < 4:
            panels[f"recon (noise seed {noise_seed})"] = result.image
    figures.save_recon_comparison(out / "recon.png", panels)
    return {"out": out, "rows": rows}


# ------------------------------------------------------------ min-patterns


def cmd_min_patterns(config: ExperimentConfig, out_dir: str | Path, seed: int = 0) -> dict:
    """Bisect the pattern count to the quality thresholds per (K, T) point.

    A point passes at M when the first-noise-seed reconstruction clears
    both the SSIM and PSNR targets.  Bottom and top of the M range are
    probed first; a top-end miss flags the row unresolved at the cap.
    """
    mp = config.min_patterns
    if not mp.k_list or not mp.t_res_list:
        raise ConfigError("min_patterns k/t lists must not be empty")
    if mp.m_lo < 1 or mp.m_hi < mp.m_lo:
        raise ConfigError("min_patterns bounds need 1 <= m_lo <= m_hi")
    out = _prepare_out(config, out_dir)
    target = _scene_image(config)
    noise_seed = config.noise.seeds[0] if config.noise.seeds else 0

    def point_job(point: tuple[int, float]) -> tuple:
        k, t_res = point
        cfg = _with_sensor_point(config, k, t_res)
        grid = _scene_grid(cfg)
        transports = _build_transports(cfg, grid, seed)
        cache = None
        if cfg.patterns.kind == "optimized" and not cfg.run.single_pixel:
            cache = normalized_transport_gram(StackedTransport.from_transports(transports))
        scores: dict[int, bool] = {}

        def passes(m: int) -> bool:
            if m not in scores:
                patterns = _build_patterns(
                    cfg, transports, grid.n_pixels, seed, m_override=m, gram_cache=cache
                )
                op = assemble_operator(transports, patterns)
                snr = None if cfg.noise.noiseless else cfg.noise.snr_db
                meas = simulate_measurement(op, target, snr, noise_seed + seed)
                result = _reconstruct(cfg, op, meas, target)
                got_ssim = result.ssim if result.ssim is not None else 0.0
                scores[m] = bool(got_ssim >= mp.ssim_target and result.psnr >= mp.psnr_target)
            return scores[m]

        if passes(mp.m_lo):
            return (k, t_res, mp.m_lo, True)
        if not passes(mp.m_hi):
            return (k, t_res, mp.m_hi, False)
        lo, hi = mp.m_lo, mp.m_hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if passes(mid):
                hi = mid
            else:
                lo = mid
        return (k, t_res, hi, True)

    points = [(k, t) for k in mp.k_list for t in mp.t_res_list]
    rows = sorted(_run_jobs(point_job, points, config.run.jobs))
    write_csv(
        out / "min_patterns.csv",
        "min-patterns/1",
        ("k", "t_res_s", "m_min", "resolved"),
        rows,
    )
    series: dict[float, list[float]] = {}
    for k, t_res, m_min, _ in rows:
        series.setdefault(t_res, []).append(m_min)
    figures.save_min_patterns(out / "min_patterns.png", sorted(set(mp.k_list)), series)
    return {"out": out, "rows": rows}


def _with_sensor_point(config: ExperimentConfig, k: int, t_res: float) -> ExperimentConfig:
    """Copy of the config with the sensor block pinned to one sweep point."""
    sensors = dataclasses.replace(config.sensors, count=k, t_res=t_res)
    return dataclasses.replace(config, sensors=sensors)
