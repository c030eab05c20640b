"""Dense 2D grid of tool-shape scores.

Each cell holds a real score; exp(score), normalized over the grid, acts
as a prior density for where the contact point can be.  The update rule
raises scores near an estimated contact and lowers them along the
measured force line away from it.  Scores are clamped to a wide safety
range so the exponential stays finite; they are not probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from wrenchmap import kernels
from wrenchmap.errors import DegenerateWrench
from wrenchmap.geometry import FORCE_EPSILON

SCORE_LO = -20.0
SCORE_HI = 20.0


@dataclass(frozen=True)
class GridGeometry:
    """Cell layout: origin is the lower-left corner, cells are square."""

    origin_x: float
    origin_y: float
    cell_size: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.cell_size <= 0 or self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs positive cell size and counts")

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def cell_area(self) -> float:
        return self.cell_size * self.cell_size

    @property
    def x_max(self) -> float:
        return self.origin_x + self.nx * self.cell_size

    @property
    def y_max(self) -> float:
        return self.origin_y + self.ny * self.cell_size

    def centers_x(self) -> np.ndarray:
        return self.origin_x + (np.arange(self.nx) + 0.5) * self.cell_size

    def centers_y(self) -> np.ndarray:
        return self.origin_y + (np.arange(self.ny) + 0.5) * self.cell_size

    def cell_index_of(self, p) -> tuple[int, int] | None:
        """(ix, iy) of the cell containing p, or None when outside.

        Points on a cell's max edge belong to the next cell up, so the
        grid's own max edges are outside.
        """
        ix = math.floor((float(p[0]) - self.origin_x) / self.cell_size)
        iy = math.floor((float(p[1]) - self.origin_y) / self.cell_size)
        if 0 <= ix < self.nx and 0 <= iy < self.ny:
            return ix, iy
        return None

    def cell_center(self, ix: int, iy: int) -> np.ndarray:
        return np.array(
            [
                self.origin_x + (ix + 0.5) * self.cell_size,
                self.origin_y + (iy + 0.5) * self.cell_size,
            ]
        )


@dataclass(frozen=True)
class ShapeUpdateParams:
    """Update rule constants.

    d_th: radius (m) of the raised neighborhood around the contact.
    theta_th: half-angle (rad) of the lowered double cone along the force.
    ds_inc / ds_dec: score increment / decrement per update.
    s_lo / s_hi: clamp range guarding exp() overflow.
    """

    d_th: float
    theta_th: float
    ds_inc: float
    ds_dec: float
    s_lo: float = SCORE_LO
    s_hi: float = SCORE_HI

    def __post_init__(self):
        if min(self.d_th, self.theta_th, self.ds_inc, self.ds_dec) <= 0:
            raise ValueError("update parameters must be positive")


class ShapeGrid:
    """Grid scores plus a cached partition sum of exp(score) * cell_area.

    values is (ny, nx), row j = y index j (lowest y first).  The partition
    sum is maintained incrementally by updates and equals a fresh
    recomputation to float64 accuracy.
    """

    __slots__ = ("geom", "values", "partition_sum")

    def __init__(self, geom: GridGeometry, values: np.ndarray, partition_sum: float | None = None):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.shape != (geom.ny, geom.nx):
            raise ValueError(f"values shape {values.shape} != (ny, nx) = {(geom.ny, geom.nx)}")
        self.geom = geom
        self.values = values
        if partition_sum is None:
            partition_sum = compute_partition(values, geom.cell_area)
        self.partition_sum = float(partition_sum)

    @classmethod
    def zeros(cls, geom: GridGeometry) -> "ShapeGrid":
        return cls(geom, np.zeros((geom.ny, geom.nx)), float(geom.n_cells) * geom.cell_area)

    def copy(self) -> "ShapeGrid":
        return ShapeGrid(self.geom, self.values.copy(), self.partition_sum)

    def value_at(self, p) -> float:
        """Score of the cell containing p; 0 outside the grid."""
        idx = self.geom.cell_index_of(p)
        if idx is None:
            return 0.0
        return float(self.values[idx[1], idx[0]])

    def log_prior(self, p) -> float:
        """Log density of the normalized exp-score prior at p."""
        return self.value_at(p) - math.log(self.partition_sum)

    def surface_profile(self) -> tuple[np.ndarray, np.ndarray]:
        """(x centers, y center of each column's max cell); ties pick lowest y."""
        j = np.argmax(self.values, axis=0)
        ys = self.geom.origin_y + (j + 0.5) * self.geom.cell_size
        return self.geom.centers_x(), ys

    def recompute_partition(self) -> float:
        return compute_partition(self.values, self.geom.cell_area)


def compute_partition(values: np.ndarray, cell_area: float) -> float:
    return float(np.sum(np.exp(values)) * cell_area)


def shape_update(grid: ShapeGrid, c_prev, f_prev, params: ShapeUpdateParams) -> ShapeGrid:
    """One deterministic update from the previous contact estimate and force.

    Cells whose center lies within d_th of c_prev gain ds_inc; cells at
    distance >= d_th whose center falls in the double cone (apex c_prev,
    axis f_prev, half-angle theta_th) lose ds_dec.  The two regions are
    disjoint by the distance split.  Returns a new grid.
    """
    fx, fy = float(f_prev[0]), float(f_prev[1])
    if math.hypot(fx, fy) <= FORCE_EPSILON:
        raise DegenerateWrench("zero force carries no direction for the update")
    out = grid.copy()
    g = grid.geom
    values = out.values[np.newaxis, :, :]
    partition = np.array([out.partition_sum])
    kernels.impl.shape_update_batch(
        values,
        partition,
        np.array([float(c_prev[0])]),
        np.array([float(c_prev[1])]),
        fx,
        fy,
        g.origin_x,
        g.origin_y,
        g.cell_size,
        params.d_th,
        params.theta_th,
        params.ds_inc,
        params.ds_dec,
        params.s_lo,
        params.s_hi,
        g.cell_area,
    )
    out.partition_sum = float(partition[0])
    return out


SNAPSHOT_MAGIC = "shape-grid v1"


def save_snapshot(grid: ShapeGrid, path) -> None:
    """Plain-text matrix snapshot, 9 significant digits, row 0 = lowest y."""
    g = grid.geom
    lines = [
        f"{SNAPSHOT_MAGIC} {g.nx} {g.ny} {g.cell_size:.9g} {g.origin_x:.9g} {g.origin_y:.9g}"
    ]
    for j in range(g.ny):
        lines.append(" ".join(f"{v:.9g}" for v in grid.values[j]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_snapshot(path) -> ShapeGrid:
    with open(path) as fh:
        header = fh.readline().split()
        if " ".join(header[:2]) != SNAPSHOT_MAGIC:
            raise ValueError(f"not a shape-grid snapshot: {path}")
        nx, ny = int(header[2]), int(header[3])
        cell, ox, oy = float(header[4]), float(header[5]), float(header[6])
        values = np.loadtxt(fh, ndmin=2)
    if values.shape != (ny, nx):
        raise ValueError(f"snapshot body {values.shape} does not match header ({ny}, {nx})")
    geom = GridGeometry(origin_x=ox, origin_y=oy, cell_size=cell, nx=nx, ny=ny)
    return ShapeGrid(geom, values)
