import math

import numpy as np
import pytest

from wrenchmap.errors import DegenerateWrench
from wrenchmap.geometry import point_in_double_cone
from wrenchmap.shapegrid import (
    GridGeometry,
    ShapeGrid,
    ShapeUpdateParams,
    load_snapshot,
    save_snapshot,
    shape_update,
)

PARAMS = ShapeUpdateParams(d_th=0.00939, theta_th=0.108, ds_inc=0.0347, ds_dec=0.0216)


def small_geom():
    return GridGeometry(origin_x=0.0, origin_y=-0.05, cell_size=0.005, nx=16, ny=16)


def default_geom():
    return GridGeometry(origin_x=0.0, origin_y=-0.05, cell_size=0.005, nx=80, ny=80)


class TestCellIndex:
    def test_containment(self):
        g = GridGeometry(0.0, 0.0, 0.005, 10, 10)
        assert g.cell_index_of((0.0012, 0.0)) == (0, 0)

    def test_below_origin_is_outside(self):
        g = GridGeometry(0.0, 0.0, 0.005, 10, 10)
        assert g.cell_index_of((-0.001, 0.0)) is None

    def test_interior_edge_belongs_to_higher_cell(self):
        g = GridGeometry(0.0, 0.0, 0.005, 10, 10)
        assert g.cell_index_of((0.005, 0.0)) == (1, 0)
        assert g.cell_index_of((0.0, 0.015)) == (0, 3)

    def test_max_edge_is_outside(self):
        g = GridGeometry(0.0, 0.0, 0.005, 10, 10)
        assert g.cell_index_of((0.05, 0.0)) is None


class TestGridValue:
    def test_fresh_grid_is_zero(self):
        grid = ShapeGrid.zeros(default_geom())
        assert grid.value_at((0.2, 0.1)) == 0.0

    def test_one_increment_reaches_table_value(self):
        grid = ShapeGrid.zeros(default_geom())
        out = shape_update(grid, (0.2, 0.1), (0.0, 1.0), PARAMS)
        assert out.value_at((0.2, 0.1)) == pytest.approx(0.0347)

    def test_outside_returns_zero(self):
        grid = ShapeGrid.zeros(default_geom())
        assert grid.value_at((-1.0, 0.0)) == 0.0


class TestShapeUpdate:
    def test_near_cell_incremented(self):
        grid = ShapeGrid.zeros(default_geom())
        out = shape_update(grid, (0.2, 0.1), (0.0, 1.0), PARAMS)
        # cell center ~4.5 mm from the contact: raised
        c = out.geom.cell_center(*out.geom.cell_index_of((0.2045, 0.1)))
        assert np.hypot(*(c - np.array([0.2, 0.1]))) < PARAMS.d_th
        assert out.value_at(c) == pytest.approx(0.0347)

    def test_cone_cell_decremented(self):
        grid = ShapeGrid.zeros(default_geom())
        out = shape_update(grid, (0.15, 0.10), (0.0, 1.0), PARAMS)
        assert out.value_at((0.15, 0.14)) == pytest.approx(-0.0216)

    def test_far_off_cone_cell_unchanged(self):
        grid = ShapeGrid.zeros(default_geom())
        out = shape_update(grid, (0.15, 0.10), (0.0, 1.0), PARAMS)
        assert out.value_at((0.3, 0.1)) == 0.0

    def test_zero_force_rejected(self):
        grid = ShapeGrid.zeros(default_geom())
        with pytest.raises(DegenerateWrench):
            shape_update(grid, (0.2, 0.1), (0.0, 0.0), PARAMS)

    def test_update_is_deterministic(self):
        grid = ShapeGrid.zeros(default_geom())
        a = shape_update(grid, (0.17, 0.08), (0.4, 1.7), PARAMS)
        b = shape_update(grid, (0.17, 0.08), (0.4, 1.7), PARAMS)
        assert np.array_equal(a.values, b.values)
        assert a.partition_sum == b.partition_sum

    def test_original_grid_untouched(self):
        grid = ShapeGrid.zeros(default_geom())
        shape_update(grid, (0.2, 0.1), (0.0, 1.0), PARAMS)
        assert not grid.values.any()

    def test_clamping(self):
        params = ShapeUpdateParams(
            d_th=0.00939, theta_th=0.108, ds_inc=5.0, ds_dec=3.0, s_lo=-4.0, s_hi=6.0
        )
        grid = ShapeGrid.zeros(small_geom())
        out = grid
        for _ in range(4):
            out = shape_update(out, (0.04, -0.01), (0.0, 1.0), params)
        assert out.values.max() == pytest.approx(6.0)
        assert out.values.min() == pytest.approx(-4.0)
        assert out.partition_sum == pytest.approx(out.recompute_partition(), rel=1e-9)


def brute_force_update(grid, c_prev, f_prev, params):
    """Full-grid reference implementation of the two criteria."""
    vals = grid.values.copy()
    g = grid.geom
    for j in range(g.ny):
        for i in range(g.nx):
            center = g.cell_center(i, j)
            dist = math.hypot(center[0] - c_prev[0], center[1] - c_prev[1])
            if dist < params.d_th:
                vals[j, i] = min(vals[j, i] + params.ds_inc, params.s_hi)
            elif point_in_double_cone(center, c_prev, f_prev, params.theta_th):
                vals[j, i] = max(vals[j, i] - params.ds_dec, params.s_lo)
    return vals


class TestUpdateRegions:
    def test_matches_brute_force_scan(self):
        rng = np.random.default_rng(11)
        grid0 = ShapeGrid(small_geom(), rng.normal(0, 1, (16, 16)))
        for trial in range(200):
            c = rng.uniform(-0.02, 0.1, 2)
            f = rng.normal(0, 2, 2)
            if np.hypot(*f) < 1e-3:
                continue
            theta = rng.uniform(0.02, 1.4)
            params = ShapeUpdateParams(
                d_th=rng.uniform(0.003, 0.03),
                theta_th=theta,
                ds_inc=0.0347,
                ds_dec=0.0216,
            )
            out = shape_update(grid0, c, f, params)
            expected = brute_force_update(grid0, c, f, params)
            np.testing.assert_allclose(out.values, expected, atol=1e-12)

    def test_criteria_regions_disjoint(self):
        # no cell both raised and lowered in one update
        rng = np.random.default_rng(12)
        grid0 = ShapeGrid.zeros(small_geom())
        for _ in range(100):
            c = rng.uniform(0.0, 0.08, 2)
            f = rng.normal(0, 2, 2)
            if np.hypot(*f) < 1e-3:
                continue
            out = shape_update(grid0, c, f, PARAMS)
            changed = out.values - grid0.values
            assert set(np.round(np.unique(changed), 10)) <= {
                0.0,
                round(PARAMS.ds_inc, 10),
                round(-PARAMS.ds_dec, 10),
            }


class TestPartitionSum:
    def test_incremental_matches_recompute_over_many_updates(self):
        rng = np.random.default_rng(13)
        grid = ShapeGrid.zeros(small_geom())
        for k in range(10_000):
            c = rng.uniform(0.0, 0.08, 2)
            f = rng.normal(0, 2, 2)
            if np.hypot(*f) < 1e-3:
                continue
            grid = shape_update(grid, c, f, PARAMS)
            if k % 500 == 0:
                assert grid.partition_sum == pytest.approx(
                    grid.recompute_partition(), rel=1e-9
                )
        assert grid.partition_sum == pytest.approx(grid.recompute_partition(), rel=1e-9)


class TestLogPrior:
    def test_uniform_grid_is_uniform_density(self):
        grid = ShapeGrid.zeros(default_geom())
        area = grid.geom.n_cells * grid.geom.cell_area
        assert grid.log_prior((0.2, 0.1)) == pytest.approx(-math.log(area))

    def test_single_raised_cell_closed_form(self):
        g = small_geom()
        delta = 1.3
        values = np.zeros((g.ny, g.nx))
        values[4, 7] = delta
        grid = ShapeGrid(g, values)
        c = g.cell_center(7, 4)
        expected = delta - math.log((g.n_cells - 1 + math.exp(delta)) * g.cell_area)
        assert grid.log_prior(c) == pytest.approx(expected)

    def test_out_of_bounds_uses_zero_score(self):
        g = small_geom()
        values = np.ones((g.ny, g.nx))
        grid = ShapeGrid(g, values)
        assert grid.log_prior((5.0, 5.0)) == pytest.approx(-math.log(grid.partition_sum))

    def test_density_normalizes_over_cells(self):
        rng = np.random.default_rng(14)
        g = small_geom()
        grid = ShapeGrid(g, rng.normal(0, 2, (g.ny, g.nx)))
        total = 0.0
        for j in range(g.ny):
            for i in range(g.nx):
                total += math.exp(grid.log_prior(g.cell_center(i, j))) * g.cell_area
        assert total == pytest.approx(1.0, abs=1e-9)


class TestSurfaceProfile:
    def test_argmax_and_tie_break(self):
        g = GridGeometry(0.0, 0.0, 0.01, 3, 3)
        values = np.array(
            [
                [0.0, 0.3, 0.0],
                [0.5, 0.3, 0.0],
                [0.2, 0.0, 0.0],
            ]
        )
        grid = ShapeGrid(g, values)
        xs, ys = grid.surface_profile()
        np.testing.assert_allclose(xs, [0.005, 0.015, 0.025])
        # col 0: max 0.5 at y idx 1; col 1: tie 0.3 -> lowest y idx 0; col 2: all zero -> idx 0
        np.testing.assert_allclose(ys, [0.015, 0.005, 0.005])


class TestSnapshotIO:
    def test_round_trip_values(self, tmp_path):
        rng = np.random.default_rng(15)
        g = small_geom()
        grid = ShapeGrid(g, rng.normal(0, 3, (g.ny, g.nx)))
        path = tmp_path / "grid.txt"
        save_snapshot(grid, path)
        back = load_snapshot(path)
        assert back.geom == g
        np.testing.assert_allclose(back.values, grid.values, rtol=1e-8)

    def test_write_read_write_is_byte_stable(self, tmp_path):
        rng = np.random.default_rng(16)
        g = small_geom()
        grid = ShapeGrid(g, rng.normal(0, 3, (g.ny, g.nx)))
        p1 = tmp_path / "a.txt"
        p2 = tmp_path / "b.txt"
        save_snapshot(grid, p1)
        save_snapshot(load_snapshot(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_rejects_foreign_files(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("not a grid\n")
        with pytest.raises(ValueError):
            load_snapshot(path)
