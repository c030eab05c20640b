#!/usr/bin/env python3
"""Benchmark the compiled grid-update kernel against the NumPy fallback.

Times the per-particle grid update (the filter's hot loop) and a full
filter step at the benchmark configuration, then prints a comparison
table.  Run from the repository root:

    python benchmarks/compare_backends.py [--particles N] [--steps K]
"""

import argparse
import math
import time

import numpy as np

from wrenchmap import kernels
from wrenchmap.config import load_config
from wrenchmap.geometry import Wrench
from wrenchmap import filter as pf


def bench_kernel(backend, n_particles, reps):
    cfg = load_config()
    g = cfg.grid_geom
    rng = np.random.default_rng(0)
    values = rng.normal(0, 1, (n_particles, g.ny, g.nx))
    partition = np.exp(values).sum(axis=(1, 2)) * g.cell_area
    cx = rng.uniform(0.1, 0.3, n_particles)
    cy = rng.uniform(0.05, 0.15, n_particles)
    p = cfg.shape_params
    args = (
        0.3,
        2.0,
        g.origin_x,
        g.origin_y,
        g.cell_size,
        p.d_th,
        p.theta_th,
        p.ds_inc,
        p.ds_dec,
        p.s_lo,
        p.s_hi,
        g.cell_area,
    )
    backend.shape_update_batch(values, partition, cx, cy, *args)  # warm up
    start = time.perf_counter()
    for _ in range(reps):
        backend.shape_update_batch(values, partition, cx, cy, *args)
    return (time.perf_counter() - start) / reps


def bench_full_step(backend_name, n_particles, steps):
    import os

    from dataclasses import replace

    cfg = load_config()
    fcfg = replace(cfg.filter_cfg, n_particles=n_particles, seed=1)
    old_impl = kernels.impl
    kernels.impl = kernels.get_backend(backend_name)
    try:
        state = pf.init_filter(fcfg, Wrench(0.0, 0.0, 2.0, 0.3))
        mz = 0.15 * 2.0
        start = time.perf_counter()
        for k in range(steps):
            theta = (math.pi / 6) * math.sin(4 * math.pi * 0.01 * (k + 1))
            fx, fy = 2.0 * math.sin(theta), 2.0 * math.cos(theta)
            pf.step(state, Wrench(0.01 * (k + 1), fx, fy, mz), fcfg)
        return (time.perf_counter() - start) / steps
    finally:
        kernels.impl = old_impl


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--particles", type=int, default=300)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--reps", type=int, default=50)
    args = ap.parse_args()

    backends = []
    try:
        backends.append(("native", kernels.get_backend("native")))
    except ImportError:
        print("compiled kernel unavailable; benchmarking fallback only")
    backends.append(("numpy", kernels.get_backend("numpy")))

    print(f"grid update, {args.particles} particles, 80x80 grid:")
    kernel_times = {}
    for name, backend in backends:
        dt = bench_kernel(backend, args.particles, args.reps)
        kernel_times[name] = dt
        print(f"  {name:8s} {dt * 1e3:8.3f} ms/batch  "
              f"({dt / args.particles * 1e6:7.2f} us/particle)")
    if len(kernel_times) == 2:
        print(f"  speedup  {kernel_times['numpy'] / kernel_times['native']:8.1f}x")

    print(f"\nfull filter step, {args.particles} particles:")
    step_times = {}
    for name, _ in backends:
        dt = bench_full_step(name, args.particles, args.steps)
        step_times[name] = dt
        print(f"  {name:8s} {dt * 1e3:8.3f} ms/step")
    if len(step_times) == 2:
        print(f"  speedup  {step_times['numpy'] / step_times['native']:8.1f}x")


if __name__ == "__main__":
    main()
