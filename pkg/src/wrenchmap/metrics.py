"""Error metrics and multi-trial aggregation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from wrenchmap.errors import EmptyInput, LengthMismatch, NoOverlap
from wrenchmap.shapegrid import ShapeGrid
from wrenchmap.simulator import ToolShape, surface_height


@dataclass
class TrialResult:
    """Per-trial error record for one (method, shape, seed) run."""

    method: str
    shape: str
    seed: int
    t: np.ndarray
    position_errors: np.ndarray
    shape_error_final: float  # NaN for methods without a grid


def shape_error(grid: ShapeGrid, tool: ToolShape) -> float:
    """Mean column-wise gap between the grid's ridge and the true surface.

    For every grid column whose x center lies in the tool interval, take
    the center of the column's highest cell (ties: lowest y) and average
    |h(x) - y_center|.
    """
    xs, ys = grid.surface_profile()
    mask = (xs >= tool.x_min) & (xs <= tool.x_max)
    if not mask.any():
        raise NoOverlap("no grid columns overlap the tool x-interval")
    truth = np.array([surface_height(tool, x) for x in xs[mask]])
    return float(np.mean(np.abs(truth - ys[mask])))


def position_error_series(est: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Per-step Euclidean distance between aligned estimate/truth series."""
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if len(est) != len(truth):
        raise LengthMismatch(f"{len(est)} estimates vs {len(truth)} truth rows")
    d = est - truth
    return np.sqrt(np.sum(d * d, axis=1))


def window_mean(t: np.ndarray, errors: np.ndarray, t0: float, t1: float) -> float:
    """Mean error over t in [t0, t1), ignoring NaN rows (no-contact gaps)."""
    sel = (t >= t0) & (t < t1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return float(np.nanmean(errors[sel])) if sel.any() else float("nan")


def window_median(t: np.ndarray, errors: np.ndarray, t0: float, t1: float) -> float:
    sel = (t >= t0) & (t < t1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return float(np.nanmedian(errors[sel])) if sel.any() else float("nan")


@dataclass(frozen=True)
class AggregateStats:
    mean: float
    std: float
    q1: float
    median: float
    q3: float
    n_trials: int


def _stats(values: list[float]) -> AggregateStats:
    arr = np.asarray(values, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        q1, med, q3 = np.nanpercentile(arr, [25.0, 50.0, 75.0])
        return AggregateStats(
            mean=float(np.nanmean(arr)),
            std=float(np.nanstd(arr)),
            q1=float(q1),
            median=float(med),
            q3=float(q3),
            n_trials=len(arr),
        )


def aggregate(trials: list[TrialResult], window: tuple[float, float]) -> dict[str, AggregateStats]:
    """Across-trial statistics of the window-averaged position error and of
    the final shape error.  Quartiles use linear interpolation."""
    if not trials:
        raise EmptyInput("aggregate needs at least one trial")
    pos = [window_mean(tr.t, tr.position_errors, window[0], window[1]) for tr in trials]
    shp = [tr.shape_error_final for tr in trials]
    return {"position_error": _stats(pos), "shape_error": _stats(shp)}
