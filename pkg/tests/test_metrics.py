import math

import numpy as np
import pytest

from wrenchmap.errors import EmptyInput, LengthMismatch, NoOverlap
from wrenchmap.metrics import (
    TrialResult,
    aggregate,
    position_error_series,
    shape_error,
    window_mean,
)
from wrenchmap.shapegrid import GridGeometry, ShapeGrid
from wrenchmap.simulator import ToolShape, surface_height

GEOM = GridGeometry(origin_x=0.0, origin_y=-0.05, cell_size=0.005, nx=80, ny=80)


class TestShapeError:
    def test_perfect_grid_hits_quantization_floor(self):
        tool = ToolShape(kind="arch")
        values = np.zeros((GEOM.ny, GEOM.nx))
        for i in range(GEOM.nx):
            x = GEOM.origin_x + (i + 0.5) * GEOM.cell_size
            if tool.x_min <= x <= tool.x_max:
                idx = GEOM.cell_index_of((x, surface_height(tool, x)))
                values[idx[1], idx[0]] = 1.0
        err = shape_error(ShapeGrid(GEOM, values), tool)
        assert err <= GEOM.cell_size / 2

    def test_two_column_mean(self):
        g = GridGeometry(origin_x=0.1, origin_y=0.0, cell_size=0.1, nx=2, ny=3)
        values = np.zeros((3, 2))
        values[1, 0] = 1.0  # center y = 0.15
        values[2, 1] = 1.0  # center y = 0.25
        tool = ToolShape(kind="straight")  # h = 0.10
        # offsets |0.10-0.15| = 0.05 and |0.10-0.25| = 0.15 -> mean 0.10
        assert shape_error(ShapeGrid(g, values), tool) == pytest.approx(0.10)

    def test_all_zero_grid_uses_tie_break_floor(self):
        tool = ToolShape(kind="straight")
        err = shape_error(ShapeGrid.zeros(GEOM), tool)
        assert err == pytest.approx(abs(0.10 - (-0.0475)))

    def test_no_overlap(self):
        g = GridGeometry(origin_x=1.0, origin_y=0.0, cell_size=0.01, nx=4, ny=4)
        with pytest.raises(NoOverlap):
            shape_error(ShapeGrid.zeros(g), ToolShape(kind="straight"))

    def test_invariant_to_constant_shift(self):
        rng = np.random.default_rng(5)
        values = rng.normal(0, 1, (GEOM.ny, GEOM.nx))
        tool = ToolShape(kind="wavy")
        a = shape_error(ShapeGrid(GEOM, values), tool)
        b = shape_error(ShapeGrid(GEOM, values + 3.7), tool)
        assert a == pytest.approx(b)


class TestPositionErrors:
    def test_zero_when_exact(self):
        est = np.array([[0.1, 0.2], [0.3, 0.4]])
        np.testing.assert_allclose(position_error_series(est, est), 0.0)

    def test_three_four_five(self):
        est = np.array([[0.103, 0.204]])
        truth = np.array([[0.1, 0.2]])
        assert position_error_series(est, truth)[0] == pytest.approx(0.005)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            position_error_series(np.zeros((3, 2)), np.zeros((4, 2)))

    def test_window_mean_skips_nan(self):
        t = np.arange(10) * 1.0
        errors = np.arange(10) * 1.0
        errors[3] = math.nan
        assert window_mean(t, errors, 2.0, 5.0) == pytest.approx(3.0)  # (2+4)/2


def _trial(method, errors, e_shape, seed=0):
    errors = np.asarray(errors, dtype=float)
    return TrialResult(
        method=method,
        shape="straight",
        seed=seed,
        t=np.arange(len(errors)) * 1.0,
        position_errors=errors,
        shape_error_final=e_shape,
    )


class TestAggregate:
    def test_single_trial(self):
        out = aggregate([_trial("m", [2.0, 2.0], 0.004)], (0.0, 2.0))
        assert out["position_error"].mean == pytest.approx(2.0)
        assert out["position_error"].std == 0.0
        assert out["shape_error"].n_trials == 1

    def test_interpolated_median(self):
        trials = [_trial("m", [v], 0.0, seed=k) for k, v in enumerate([1.0, 2.0, 3.0, 4.0])]
        out = aggregate(trials, (0.0, 1.0))
        assert out["position_error"].median == pytest.approx(2.5)
        assert out["position_error"].q1 == pytest.approx(1.75)
        assert out["position_error"].q3 == pytest.approx(3.25)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(6)
        trials = [_trial("m", rng.uniform(0, 1, 8), rng.uniform()) for _ in range(7)]
        a = aggregate(trials, (0.0, 8.0))
        b = aggregate(trials[::-1], (0.0, 8.0))
        for key in a:
            for field in ("mean", "std", "q1", "median", "q3"):
                assert getattr(a[key], field) == pytest.approx(
                    getattr(b[key], field), rel=1e-12
                )

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            aggregate([], (0.0, 1.0))
