"""Streaming estimation: gate, init/pause/resume, per-row estimates.

All estimators consume the same measurement stream under the same
contact gate: rows with force below the threshold pause estimation and
the next in-contact row re-primes the estimator (particle methods keep
their grids across the pause).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from wrenchmap import filter as pf
from wrenchmap.baselines import (
    BaselineParams,
    NaiveParams,
    NaivePF,
    RlsBaseline,
    oracle_estimate,
)
from wrenchmap.errors import ConfigError, NoIntersection
from wrenchmap.geometry import Wrench
from wrenchmap.runio import Measurements
from wrenchmap.shapegrid import ShapeGrid
from wrenchmap.simulator import ToolShape

METHODS = ("proposed", "naive", "baseline", "oracle")


@dataclass
class EstimateRun:
    """Per-row estimate stream plus the final grid (when the method has one)."""

    t: np.ndarray
    est: np.ndarray          # (n, 2); NaN before the first contact
    ess: np.ndarray          # NaN for non-particle methods
    paused: np.ndarray       # bool
    final_grid: ShapeGrid | None
    weight_resets: int = 0
    pauses: int = 0


class _Proposed:
    def __init__(self, cfg: pf.FilterConfig):
        self.cfg = cfg
        self.state: pf.FilterState | None = None

    def consume(self, w: Wrench) -> None:
        self.state = pf.process_wrench(self.state, w, self.cfg)

    def estimate(self) -> np.ndarray:
        if self.state is None:
            return np.array([math.nan, math.nan])
        return pf.estimate_position(self.state)

    def ess(self) -> float:
        return pf.ess(self.state.weights()) if self.state is not None else math.nan

    def paused(self) -> bool:
        return self.state.paused if self.state is not None else True

    def final_grid(self) -> ShapeGrid | None:
        return pf.estimate_shape(self.state) if self.state is not None else None

    def weight_resets(self) -> int:
        return self.state.weight_resets if self.state is not None else 0


class _Naive:
    def __init__(self, params: NaiveParams):
        self.model = NaivePF(params)
        self.threshold = params.contact_force_threshold

    def consume(self, w: Wrench) -> None:
        m = self.model
        if w.force_norm >= self.threshold:
            if not m.started:
                m.init(w)
            elif m.paused:
                m.resume(w)
            else:
                m.step(w)
        elif m.started:
            m.paused = True

    def estimate(self) -> np.ndarray:
        if not self.model.started:
            return np.array([math.nan, math.nan])
        return self.model.estimate_position()

    def ess(self) -> float:
        return self.model.ess() if self.model.started else math.nan

    def paused(self) -> bool:
        return self.model.paused if self.model.started else True

    def final_grid(self) -> ShapeGrid | None:
        return self.model.estimate_shape() if self.model.started else None

    def weight_resets(self) -> int:
        return 0


class _Baseline:
    def __init__(self, params: BaselineParams, threshold: float):
        self.model = RlsBaseline(params)
        self.threshold = threshold
        self._paused = True

    def consume(self, w: Wrench) -> None:
        if w.force_norm >= self.threshold:
            self.model.step(w)
            self._paused = False
        else:
            self._paused = True

    def estimate(self) -> np.ndarray:
        return self.model.c.copy()

    def ess(self) -> float:
        return math.nan

    def paused(self) -> bool:
        return self._paused

    def final_grid(self) -> ShapeGrid | None:
        return None

    def weight_resets(self) -> int:
        return 0


class _Oracle:
    def __init__(self, tool: ToolShape, threshold: float):
        self.tool = tool
        self.threshold = threshold
        self.last = np.array([math.nan, math.nan])
        self._paused = True

    def consume(self, w: Wrench) -> None:
        if w.force_norm >= self.threshold:
            try:
                self.last = oracle_estimate(w, self.tool)
                self._paused = False
            except NoIntersection:
                self._paused = True
        else:
            self._paused = True

    def estimate(self) -> np.ndarray:
        return self.last.copy()

    def ess(self) -> float:
        return math.nan

    def paused(self) -> bool:
        return self._paused

    def final_grid(self) -> ShapeGrid | None:
        return None

    def weight_resets(self) -> int:
        return 0


def make_estimator(
    method: str,
    *,
    filter_cfg: pf.FilterConfig | None = None,
    naive_params: NaiveParams | None = None,
    baseline_params: BaselineParams | None = None,
    tool: ToolShape | None = None,
    threshold: float = 0.5,
):
    if method == "proposed":
        return _Proposed(filter_cfg or pf.FilterConfig())
    if method == "naive":
        return _Naive(naive_params or NaiveParams())
    if method == "baseline":
        return _Baseline(baseline_params or BaselineParams(), threshold)
    if method == "oracle":
        if tool is None:
            raise ConfigError("the oracle method needs the true tool shape")
        return _Oracle(tool, threshold)
    raise ConfigError(f"unknown method {method!r}; pick one of {METHODS}")


def run_stream(estimator, meas: Measurements, snapshot_times=(), snapshot_cb=None) -> EstimateRun:
    """Feed every measurement row through the estimator.

    snapshot_times: sorted times at which snapshot_cb(t, final_grid_so_far)
    is invoked (used by the CLI to dump grid snapshots).
    """
    n = len(meas)
    est = np.full((n, 2), np.nan)
    ess = np.full(n, np.nan)
    paused = np.zeros(n, dtype=bool)
    pauses = 0
    was_paused = False
    snap_iter = iter(snapshot_times)
    next_snap = next(snap_iter, None)
    for i in range(n):
        w = Wrench(t=float(meas.t[i]), fx=float(meas.fx[i]), fy=float(meas.fy[i]), mz=float(meas.mz[i]))
        estimator.consume(w)
        est[i] = estimator.estimate()
        ess[i] = estimator.ess()
        paused[i] = estimator.paused()
        if paused[i] and not was_paused:
            pauses += 1
        was_paused = bool(paused[i])
        while next_snap is not None and w.t >= next_snap:
            if snapshot_cb is not None:
                snapshot_cb(next_snap, estimator.final_grid())
            next_snap = next(snap_iter, None)
    return EstimateRun(
        t=meas.t.copy(),
        est=est,
        ess=ess,
        paused=paused,
        final_grid=estimator.final_grid(),
        weight_resets=estimator.weight_resets(),
        pauses=pauses,
    )
