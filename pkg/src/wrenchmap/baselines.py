"""Comparison estimators.

Three references bracket the proposed filter: an oracle that intersects
each action line with the known tool surface, a shape-free recursive
least-squares tracker with exponential forgetting, and a naive joint
particle filter that samples contact position and every grid cell
together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from wrenchmap.errors import DegenerateWrench, NoIntersection, SingularNormalMatrix
from wrenchmap.filter import (
    JUMP_INNOVATION_SIGMAS,
    _rng,
    _spread_positions_raw,
    ess,
    systematic_indices,
)
from wrenchmap.geometry import FORCE_EPSILON, Wrench, clip_alpha_to_box, line_of_action
from wrenchmap.shapegrid import (
    SCORE_HI,
    SCORE_LO,
    GridGeometry,
    ShapeGrid,
    compute_partition,
)
from wrenchmap.simulator import (
    ToolShape,
    surface_height,
    surface_heights,
    surface_normal_angle,
)

ORACLE_SWEEP_POINTS = 2000
ORACLE_BISECT_ITERS = 60


def _line_curve_gap(line, shape: ToolShape, alpha: float) -> float:
    p = line.point_at(alpha)
    # clamp away 1-ulp excursions the box clipper can leave at the edges
    x = min(max(float(p[0]), shape.x_min), shape.x_max)
    return float(p[1]) - surface_height(shape, x)


def oracle_estimate(w: Wrench, shape: ToolShape) -> np.ndarray:
    """Contact point as the action line's intersection with y = h(x).

    Roots are located by a dense sweep over the in-domain span of the
    line plus bisection refinement.  Among several candidates, keeps the
    ones where the force pushes into the surface and returns the one with
    the smallest line parameter.
    """
    if w.force_norm <= FORCE_EPSILON:
        raise DegenerateWrench("oracle needs a usable force")
    line = line_of_action(w)
    span = clip_alpha_to_box(
        line, (shape.x_min, -math.inf), (shape.x_max, math.inf)
    )
    if span is None:
        raise NoIntersection("action line never enters the tool x-interval")
    a_lo, a_hi = span
    if not (math.isfinite(a_lo) and math.isfinite(a_hi)):
        # line parallel to the y axis inside the domain: single column
        x = float(line.base[0])
        y = surface_height(shape, x)
        alpha = (y - float(line.base[1])) / float(line.direction[1])
        roots = [alpha]
    else:
        alphas = np.linspace(a_lo, a_hi, ORACLE_SWEEP_POINTS)
        pts = line.base[np.newaxis, :] + alphas[:, np.newaxis] * line.direction[np.newaxis, :]
        xs = np.clip(pts[:, 0], shape.x_min, shape.x_max)
        gaps = pts[:, 1] - surface_heights(shape, xs)
        roots = []
        for i in range(len(alphas) - 1):
            g0, g1 = gaps[i], gaps[i + 1]
            if g0 == 0.0:
                roots.append(float(alphas[i]))
                continue
            if g0 * g1 < 0.0:
                lo, hi = float(alphas[i]), float(alphas[i + 1])
                flo = g0
                for _ in range(ORACLE_BISECT_ITERS):
                    mid = 0.5 * (lo + hi)
                    fm = _line_curve_gap(line, shape, mid)
                    if flo * fm <= 0.0:
                        hi = mid
                    else:
                        lo, flo = mid, fm
                roots.append(0.5 * (lo + hi))
        if gaps[-1] == 0.0:
            roots.append(float(alphas[-1]))
    if not roots:
        raise NoIntersection("action line misses the tool surface")
    pushing = []
    for alpha in sorted(roots):
        x = float(line.point_at(alpha)[0])
        x = min(max(x, shape.x_min), shape.x_max)
        n_angle = surface_normal_angle(shape, x)
        n_in = np.array([math.sin(n_angle), math.cos(n_angle)])
        if w.fx * n_in[0] + w.fy * n_in[1] >= 0.0:
            pushing.append(alpha)
    chosen = pushing[0] if pushing else sorted(roots)[0]
    p = line.point_at(chosen)
    return np.array([min(max(float(p[0]), shape.x_min), shape.x_max), float(p[1])])


@dataclass(frozen=True)
class BaselineParams:
    """Exponentially forgotten ridge regression on action-line residuals.

    rho is the forgetting factor per millisecond of stream time (the
    tracker assumes the contact moves slowly relative to the sample
    rate); the per-solve ridge mass is alpha_reg * (1 - rho), anchoring
    the estimate to its previous value.
    """

    rho: float = 0.992
    alpha_reg: float = 860.0
    c0: tuple[float, float] = (0.2, 0.15)
    dt_ref: float = 0.001       # s of stream time over which rho applies once

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise ValueError("rho must be in (0, 1]")
        if self.alpha_reg < 0.0:
            raise ValueError("alpha_reg must be >= 0")


class RlsBaseline:
    """Shape-free tracker: each wrench contributes one linear equation
    M = c_x f_y - c_y f_x, solved recursively with exponential forgetting
    and a light ridge pulled toward the previous estimate."""

    def __init__(self, params: BaselineParams):
        self.params = params
        self.lam = params.alpha_reg * (1.0 - params.rho)
        self.A = np.zeros((2, 2))
        self.b = np.zeros(2)
        self.c = np.asarray(params.c0, dtype=float)
        self.last_t: float | None = None

    def step(self, w: Wrench) -> np.ndarray:
        p = self.params
        decay = 1.0
        if self.last_t is not None and p.rho < 1.0:
            decay = p.rho ** ((w.t - self.last_t) / p.dt_ref)
        self.last_t = w.t
        h = np.array([w.fy, -w.fx])
        self.A = decay * self.A + np.outer(h, h)
        self.b = decay * self.b + h * w.mz
        m00 = self.A[0, 0] + self.lam
        m11 = self.A[1, 1] + self.lam
        m01 = self.A[0, 1]
        det = m00 * m11 - m01 * m01
        scale = max(m00, m11, abs(m01), 1e-300)
        if abs(det) <= 1e-12 * scale * scale:
            raise SingularNormalMatrix(
                "normal matrix is singular; need two non-parallel wrenches"
            )
        rhs = self.b + self.lam * self.c
        self.c = np.array(
            [
                (rhs[0] * m11 - rhs[1] * m01) / det,
                (rhs[1] * m00 - rhs[0] * m01) / det,
            ]
        )
        return self.c


def _default_naive_grid() -> GridGeometry:
    return GridGeometry(origin_x=0.0, origin_y=-0.05, cell_size=0.08, nx=5, ny=5)


@dataclass(frozen=True)
class NaiveParams:
    """Joint-space bootstrap filter settings (deliberately coarse grid)."""

    n_particles: int = 300
    grid_geom: GridGeometry = field(default_factory=_default_naive_grid)
    sigma_c: float = 1.14e-4    # m, position diffusion per step
    sigma_s: float = 4.37e-3    # score diffusion per cell per step
    sigma_m: float = 1.69e-5    # N*m
    n_th: float = 0.432
    seed: int = 0
    contact_force_threshold: float = 0.5


class NaivePF:
    """Particle filter over the joint (position, all grid cells) state.

    The proposal is the transition prior (Gaussian diffusion on the
    position and on every cell), so those terms cancel from the weights
    and each particle is scored by the moment likelihood times its own
    normalized exp-grid prior, exactly as in the proposed filter.  There
    is no deterministic grid update; cells move only by diffusion.
    """

    def __init__(self, params: NaiveParams):
        self.params = params
        g = params.grid_geom
        n = params.n_particles
        self.positions = np.zeros((n, 2))
        self.grids = np.zeros((n, g.ny, g.nx))
        self.log_w = np.full(n, -math.log(n))
        self.rng_tag = 1
        self.paused = False
        self.started = False

    def _spread(self, w: Wrench, rng: np.random.Generator) -> np.ndarray:
        return _spread_positions_raw(
            self.params.grid_geom,
            self.params.n_particles,
            3.0 * self.params.sigma_c,
            w,
            rng,
        )

    def init(self, first: Wrench) -> None:
        rng = _rng(self.params.seed, self.rng_tag)
        self.rng_tag += 1
        self.positions = self._spread(first, rng)
        self.log_w = np.full(self.params.n_particles, -math.log(self.params.n_particles))
        self.started = True
        self.paused = False

    def resume(self, w: Wrench) -> None:
        rng = _rng(self.params.seed, self.rng_tag)
        self.rng_tag += 1
        self.positions = self._spread(w, rng)
        self.log_w = np.full(self.params.n_particles, -math.log(self.params.n_particles))
        self.paused = False

    def step(self, w: Wrench) -> None:
        p = self.params
        g = p.grid_geom
        n = p.n_particles
        rng = _rng(p.seed, self.rng_tag)
        self.rng_tag += 1
        self.positions = self.positions + p.sigma_c * rng.standard_normal((n, 2))
        if p.sigma_s > 0.0:
            self.grids = np.clip(
                self.grids + p.sigma_s * rng.standard_normal(self.grids.shape),
                SCORE_LO,
                SCORE_HI,
            )
        resid = w.mz - (self.positions[:, 0] * w.fy - self.positions[:, 1] * w.fx)
        gate = p.sigma_m * p.sigma_m + (p.sigma_c * w.force_norm) ** 2
        if np.min(resid * resid / gate) > JUMP_INNOVATION_SIGMAS**2:
            # same collapse rule as the proposed filter: the contact jumped,
            # so re-spread on the new line keeping the grids
            self.resume(w)
            return
        log_lik = (
            -0.5 * (resid / p.sigma_m) ** 2
            - math.log(p.sigma_m)
            - 0.5 * math.log(2.0 * math.pi)
        )
        ix = np.floor((self.positions[:, 0] - g.origin_x) / g.cell_size).astype(np.int64)
        iy = np.floor((self.positions[:, 1] - g.origin_y) / g.cell_size).astype(np.int64)
        inb = (ix >= 0) & (ix < g.nx) & (iy >= 0) & (iy < g.ny)
        rows = np.nonzero(inb)[0]
        scores = np.zeros(n)
        scores[rows] = self.grids[rows, iy[rows], ix[rows]]
        log_norm = np.log(np.sum(np.exp(self.grids), axis=(1, 2)) * g.cell_area)
        lw = self.log_w + log_lik + scores - log_norm
        lw[~np.isfinite(lw)] = -np.inf
        peak = np.max(lw)
        if not np.isfinite(peak):
            lw = np.full(n, -math.log(n))
        else:
            lw = lw - peak
            lw -= math.log(np.sum(np.exp(lw)))
        self.log_w = lw
        weights = np.exp(lw)
        if ess(weights) < p.n_th * n:
            idx = systematic_indices(weights / weights.sum(), n, float(rng.uniform()))
            self.positions = self.positions[idx]
            self.grids = self.grids[idx]
            self.log_w = np.full(n, -math.log(n))

    def estimate_position(self) -> np.ndarray:
        return np.exp(self.log_w) @ self.positions

    def estimate_shape(self) -> ShapeGrid:
        values = np.einsum("n,nyx->yx", np.exp(self.log_w), self.grids)
        g = self.params.grid_geom
        return ShapeGrid(g, values, compute_partition(values, g.cell_area))

    def ess(self) -> float:
        return ess(np.exp(self.log_w))


def joint_upf_memory_bytes(n_particles: int, n_cells: int) -> int:
    """Memory a joint-space unscented proposal would need.

    Per particle: a (d x d) covariance and (2d + 1) sigma points of
    dimension d, d = n_cells + 2.  Shows why the joint approach cannot
    run at full grid resolution.
    """
    d = n_cells + 2
    per_particle = d * d + (2 * d + 1) * d
    return int(n_particles) * per_particle * 8
