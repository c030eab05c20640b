"""Benchmark orchestration: (method x shape x trial) matrices and sweeps.

Every cell simulates its own measurement stream with seed
(base_seed + trial), runs one estimator over it, and reduces to a
TrialResult.  Cells are independent and internally deterministic, so the
matrix can run in a process pool of any size and still produce
byte-identical outputs.
"""

from __future__ import annotations

import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from wrenchmap.config import RunConfig
from wrenchmap.metrics import (
    TrialResult,
    _stats,
    position_error_series,
    shape_error,
    window_mean,
    window_median,
)
from wrenchmap.pipeline import METHODS, make_estimator, run_stream
from wrenchmap.runio import Measurements, write_aggregate_csv, write_plotdata_csv
from wrenchmap.simulator import TOOL_KINDS, ToolShape, simulate

PRE_WINDOW_START = 5.0  # s; the pre window is [5, t_fluct), post is [t_fluct, t_end)


def _sweep_adjusted(cfg: RunConfig, sweep: str | None, value: float | None) -> RunConfig:
    if sweep is None:
        return cfg
    if sweep == "particles":
        return replace(cfg, filter_cfg=replace(cfg.filter_cfg, n_particles=int(value)))
    if sweep == "theta0":
        return replace(cfg, script=replace(cfg.script, theta0=float(value)))
    if sweep == "cell_size":
        # Same covered area, coarser cells.  The raised-disk radius scales
        # with the cell so each update keeps reaching at least one cell
        # center; the other update constants are resolution-free.
        cell = float(value)
        base = cfg.grid_geom
        nx = max(1, round(base.nx * base.cell_size / cell))
        ny = max(1, round(base.ny * base.cell_size / cell))
        geom = replace(base, cell_size=cell, nx=nx, ny=ny)
        params = replace(cfg.shape_params, d_th=cfg.shape_params.d_th * cell / base.cell_size)
        return replace(
            cfg,
            grid_geom=geom,
            shape_params=params,
            filter_cfg=replace(cfg.filter_cfg, grid_geom=geom, shape_params=params),
        )
    raise ValueError(f"unknown sweep {sweep!r}")


def run_trial(
    cfg: RunConfig,
    method: str,
    shape_kind: str,
    trial: int,
    sweep: str | None = None,
    sweep_value: float | None = None,
) -> TrialResult:
    """Simulate one stream and run one estimator over it."""
    cfg = _sweep_adjusted(cfg, sweep, sweep_value)
    seed = cfg.seed + trial
    tool = ToolShape(kind=shape_kind)
    sim = simulate(tool, replace(cfg.script, seed=seed))
    meas = Measurements.from_sim(sim)
    threshold = cfg.filter_cfg.contact_force_threshold
    estimator = make_estimator(
        method,
        filter_cfg=replace(cfg.filter_cfg, seed=seed, workers=1),
        naive_params=replace(cfg.naive_params, seed=seed),
        baseline_params=cfg.baseline_params,
        tool=tool,
        threshold=threshold,
    )
    run = run_stream(estimator, meas)
    errors = position_error_series(run.est, np.column_stack([sim.cx, sim.cy]))
    e_shape = math.nan
    if run.final_grid is not None:
        e_shape = shape_error(run.final_grid, tool)
    return TrialResult(
        method=method,
        shape=shape_kind,
        seed=seed,
        t=sim.t,
        position_errors=errors,
        shape_error_final=e_shape,
    )


def run_cells(tasks, workers: int):
    """Run (cfg, method, shape, trial[, sweep, value]) tasks, preserving order."""
    if workers <= 1 or len(tasks) <= 1:
        return [run_trial(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_trial, *zip(*tasks), chunksize=1))


def bench_matrix(
    cfg: RunConfig,
    methods=None,
    shapes=None,
    trials: int | None = None,
    workers: int | None = None,
) -> dict:
    """Full comparison matrix; returns {(method, shape, trial): TrialResult}."""
    methods = list(methods or METHODS)
    shapes = list(shapes or TOOL_KINDS)
    trials = cfg.trials if trials is None else trials
    workers = cfg.workers if workers is None else workers
    tasks = [
        (cfg, m, s, k)
        for m in methods
        for s in shapes
        for k in range(trials)
    ]
    results = run_cells(tasks, workers)
    return {(m, s, k): r for (_, m, s, k), r in zip(tasks, results)}


def sweep_matrix(
    cfg: RunConfig,
    sweep: str,
    values,
    shape_kind: str,
    trials: int | None = None,
    workers: int | None = None,
    method: str = "proposed",
) -> dict:
    """One-variable sweep; returns {(value, trial): TrialResult}."""
    trials = cfg.trials if trials is None else trials
    workers = cfg.workers if workers is None else workers
    tasks = [
        (cfg, method, shape_kind, k, sweep, v)
        for v in values
        for k in range(trials)
    ]
    results = run_cells(tasks, workers)
    return {(v, k): r for (_, _, _, k, _, v), r in zip(tasks, results)}


def _windows(cfg: RunConfig) -> tuple[tuple[float, float], tuple[float, float]]:
    pre = (PRE_WINDOW_START, cfg.script.t_fluct)
    post = (cfg.script.t_fluct, cfg.script.t_end)
    return pre, post


def trial_metrics(cfg: RunConfig, tr: TrialResult) -> dict[str, float]:
    pre, post = _windows(cfg)
    return {
        "e_shape_m": tr.shape_error_final,
        "pos_mean_pre_m": window_mean(tr.t, tr.position_errors, *pre),
        "pos_mean_post_m": window_mean(tr.t, tr.position_errors, *post),
        "pos_median_post_m": window_median(tr.t, tr.position_errors, *post),
    }


def _atomic_write(path, writer) -> None:
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def write_matrix_outputs(cfg: RunConfig, results: dict, out_dir) -> None:
    """trials.csv (one row per cell), aggregate.csv, and the per-figure
    tidy file of post-window medians."""
    os.makedirs(out_dir, exist_ok=True)
    keys = sorted(results.keys())
    per_cell = {key: trial_metrics(cfg, results[key]) for key in keys}

    def _write_trials(path):
        rows = []
        for method, shape, k in keys:
            m = per_cell[(method, shape, k)]
            rows.append(
                (method, shape, k, results[(method, shape, k)].seed)
                + tuple(m[c] for c in ("e_shape_m", "pos_mean_pre_m", "pos_mean_post_m", "pos_median_post_m"))
            )
        write_plotdata_csv(
            path,
            ["method", "shape", "trial", "seed", "e_shape_m", "pos_mean_pre_m", "pos_mean_post_m", "pos_median_post_m"],
            rows,
        )

    _atomic_write(os.path.join(out_dir, "trials.csv"), _write_trials)

    method_shapes = sorted({(m, s) for m, s, _ in keys})
    agg_rows = []
    for method, shape in method_shapes:
        cells = [per_cell[k] for k in keys if k[0] == method and k[1] == shape]
        for metric in ("e_shape_m", "pos_mean_pre_m", "pos_mean_post_m", "pos_median_post_m"):
            agg_rows.append((method, shape, metric, _stats([c[metric] for c in cells])))
    _atomic_write(
        os.path.join(out_dir, "aggregate.csv"),
        lambda p: write_aggregate_csv(p, agg_rows),
    )

    def _write_fig(path):
        rows = [
            (m, s, k, per_cell[(m, s, k)]["pos_median_post_m"])
            for m, s, k in keys
        ]
        write_plotdata_csv(path, ["method", "shape", "trial", "pos_median_post_m"], rows)

    _atomic_write(os.path.join(out_dir, "plot_position_errors.csv"), _write_fig)


def write_sweep_outputs(cfg: RunConfig, sweep: str, results: dict, out_dir) -> None:
    """Long-format per-trial metrics keyed by the sweep value."""
    os.makedirs(out_dir, exist_ok=True)
    keys = sorted(results.keys())

    def _write(path):
        rows = []
        for value, k in keys:
            m = trial_metrics(cfg, results[(value, k)])
            rows.append(
                (sweep, value, k, m["e_shape_m"], m["pos_mean_post_m"], m["pos_median_post_m"])
            )
        write_plotdata_csv(
            path,
            ["sweep", "value", "trial", "e_shape_m", "pos_mean_post_m", "pos_median_post_m"],
            rows,
        )

    _atomic_write(os.path.join(out_dir, f"plot_sweep_{sweep}.csv"), _write)
