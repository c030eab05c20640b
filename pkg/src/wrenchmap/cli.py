"""Command-line entry point.

Verbs: simulate, estimate, bench, sweep.  Exit codes: 0 success,
1 configuration error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import replace

import numpy as np

from wrenchmap import bench as bench_mod
from wrenchmap.config import SWEEPS, RunConfig, load_config, write_resolved_config
from wrenchmap.errors import ConfigError, DataError, WrenchmapError
from wrenchmap.metrics import position_error_series, shape_error
from wrenchmap.pipeline import METHODS, make_estimator, run_stream
from wrenchmap.runio import (
    Measurements,
    read_measurements_csv,
    write_estimates_csv,
    write_measurements_csv,
    write_plotdata_csv,
)
from wrenchmap.shapegrid import save_snapshot
from wrenchmap.simulator import TOOL_KINDS, ToolShape, simulate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="wrenchmap", description=__doc__)
    sub = p.add_subparsers(dest="mode", required=True)

    def common(sp, with_trials=True):
        sp.add_argument("--config", help="TOML config file (defaults used when omitted)")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="base seed (64-bit)")
        sp.add_argument("--method", choices=METHODS, default=None)
        sp.add_argument("--shape", choices=TOOL_KINDS, default=None)
        if with_trials:
            sp.add_argument("--trials", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)

    sp = sub.add_parser("simulate", help="generate a measurement stream")
    common(sp, with_trials=False)

    sp = sub.add_parser("estimate", help="run one estimator over a measurement CSV")
    sp.add_argument("input", help="measurement CSV (t,Fx,Fy,Mz[,cx,cy])")
    common(sp, with_trials=False)

    sp = sub.add_parser("bench", help="methods x shapes x trials comparison matrix")
    common(sp)

    sp = sub.add_parser("sweep", help="vary one parameter over repeated trials")
    common(sp)
    sp.add_argument("--sweep", choices=SWEEPS, default=None)
    sp.add_argument("--values", default=None, help="comma-separated sweep values")

    return p


def _load(args) -> RunConfig:
    overrides: dict = {"run": {}}
    for key in ("method", "shape", "trials", "seed", "workers"):
        val = getattr(args, key, None)
        if val is not None:
            overrides["run"][key] = val
    if getattr(args, "out", None) is not None:
        overrides["run"]["out_dir"] = args.out
    if getattr(args, "sweep", None) is not None:
        overrides["run"]["sweep"] = args.sweep
    if getattr(args, "values", None) is not None:
        overrides["run"]["sweep_values"] = [float(v) for v in args.values.split(",")]
    return load_config(args.config, overrides)


def _prepare_out(cfg: RunConfig) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_resolved_config(cfg, os.path.join(cfg.out_dir, "resolved_config.toml"))
    return cfg.out_dir


def _cmd_simulate(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    tool = ToolShape(kind=cfg.shape)
    sim = simulate(tool, cfg.script)
    write_measurements_csv(os.path.join(out, "measurements.csv"), Measurements.from_sim(sim))
    write_plotdata_csv(
        os.path.join(out, "truth.csv"),
        ["t", "cx", "cy", "theta_perp"],
        zip(sim.t, sim.cx, sim.cy, sim.theta_perp),
    )
    logger.info("wrote %d samples to %s", len(sim), out)
    return EXIT_OK


def _cmd_estimate(cfg: RunConfig, input_path: str) -> int:
    out = _prepare_out(cfg)
    meas = read_measurements_csv(input_path)
    tool = ToolShape(kind=cfg.shape)
    estimator = make_estimator(
        cfg.method,
        filter_cfg=cfg.filter_cfg,
        naive_params=cfg.naive_params,
        baseline_params=cfg.baseline_params,
        tool=tool,
        threshold=cfg.filter_cfg.contact_force_threshold,
    )
    period = cfg.snapshot_period_s
    snap_times = ()
    if period > 0:
        snap_times = np.arange(period, float(meas.t[-1]) + period, period)

    def snap(t, grid):
        if grid is not None:
            save_snapshot(grid, os.path.join(out, f"grid_{t:08.2f}s.txt"))

    run = run_stream(estimator, meas, snapshot_times=snap_times, snapshot_cb=snap)
    errors = None
    if meas.has_truth:
        errors = position_error_series(run.est, np.column_stack([meas.cx, meas.cy]))
    write_estimates_csv(
        os.path.join(out, "estimates.csv"), run.t, run.est, run.ess, run.paused, errors
    )
    if run.final_grid is not None:
        save_snapshot(run.final_grid, os.path.join(out, "grid_final.txt"))
        e_shape = shape_error(run.final_grid, tool)
        logger.info("final shape error: %.4f m", e_shape)
    logger.info("wrote estimates for %d rows to %s", len(meas), out)
    return EXIT_OK


def _cmd_bench(cfg: RunConfig, args) -> int:
    out = _prepare_out(cfg)
    methods = [cfg.method] if args.method else None
    shapes = [cfg.shape] if args.shape else None
    results = bench_mod.bench_matrix(cfg, methods=methods, shapes=shapes)
    bench_mod.write_matrix_outputs(cfg, results, out)
    bad = [k for k, r in results.items() if not math.isfinite(np.nanmean(r.position_errors))]
    if bad:
        logger.error("%d cells produced no finite errors: %s", len(bad), bad[:5])
        return EXIT_INTERNAL
    logger.info("bench matrix done: %d cells -> %s", len(results), out)
    return EXIT_OK


def _cmd_sweep(cfg: RunConfig) -> int:
    out = _prepare_out(cfg)
    if not cfg.sweep_values:
        raise ConfigError("sweep needs at least one value")
    results = bench_mod.sweep_matrix(
        cfg, cfg.sweep, cfg.sweep_values, cfg.shape, method=cfg.method
    )
    bench_mod.write_sweep_outputs(cfg, cfg.sweep, results, out)
    logger.info("sweep %s over %s done -> %s", cfg.sweep, cfg.sweep_values, out)
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _load(args)
        if args.mode == "simulate":
            return _cmd_simulate(cfg)
        if args.mode == "estimate":
            return _cmd_estimate(cfg, args.input)
        if args.mode == "bench":
            return _cmd_bench(cfg, args)
        if args.mode == "sweep":
            return _cmd_sweep(cfg)
        raise ConfigError(f"unknown mode {args.mode!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except WrenchmapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
