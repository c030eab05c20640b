"""Particle filter with per-particle shape grids.

Each particle is a contact-position hypothesis carrying a private grid of
shape scores and a private Gaussian proposal state.  On each accepted
wrench the filter:

1. updates every particle's grid deterministically from that particle's
   previous position and the previous accepted force,
2. runs a per-particle unscented Kalman cycle against the new moment to
   form a Gaussian proposal over the position,
3. samples the new position from the proposal,
4. reweights with moment likelihood x motion prior x normalized
   exp-grid shape prior / proposal density (the constant force marginal
   cancels in normalization and is omitted),

then normalizes in log space and resamples systematically when the
effective sample size falls below n_th * N.  When the force drops under
the contact threshold the filter pauses; the next contact re-spreads
positions, weights, and proposal states along the new action line while
every particle keeps its grid.

Randomness comes from counter-based Philox streams keyed by (seed, event
index); each particle consumes a fixed slice of its event's draws, so
results are bit-identical for any worker count or scheduling.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from wrenchmap import kernels
from wrenchmap.errors import DegenerateWrench, NoLineGridIntersection
from wrenchmap.geometry import LineOfAction, Wrench, clip_alpha_to_box, line_of_action
from wrenchmap.shapegrid import GridGeometry, ShapeGrid, ShapeUpdateParams, compute_partition
from wrenchmap.ukf import cholesky_2x2, ukf_propose_batch

logger = logging.getLogger(__name__)

_LN_2PI = math.log(2.0 * math.pi)

_MASK64 = (1 << 64) - 1

# When even the best particle's predicted moment innovation exceeds this
# many sigma (under that particle's own predicted innovation variance),
# the measurement is irreconcilable with every hypothesis: in linear
# arithmetic all weights would round to zero.  The contact point moved
# far more than the motion prior allows, so the estimator re-spreads
# along the new action line, keeping every particle's grid, the same
# "initialize everything except the shapes" rule used on contact loss.
JUMP_INNOVATION_SIGMAS = 10.0


def _default_grid() -> GridGeometry:
    return GridGeometry(origin_x=0.0, origin_y=-0.05, cell_size=0.005, nx=80, ny=80)


def _default_shape_params() -> ShapeUpdateParams:
    return ShapeUpdateParams(d_th=0.00939, theta_th=0.108, ds_inc=0.0347, ds_dec=0.0216)


@dataclass(frozen=True)
class FilterConfig:
    """All tunables of the proposed estimator (SI units throughout)."""

    n_particles: int = 300
    n_th: float = 0.432              # resample when ESS/N drops below this
    sigma_c: float = 5.25e-6         # m, per-step motion prior std
    sigma_m: float = 3.79e-4         # N*m, moment observation noise std
    shape_params: ShapeUpdateParams = field(default_factory=_default_shape_params)
    grid_geom: GridGeometry = field(default_factory=_default_grid)
    ukf_alpha: float = 1.0
    ukf_beta: float = 2.0
    ukf_kappa: float = 0.0
    seed: int = 0
    contact_force_threshold: float = 0.5  # N
    workers: int = 1

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if not 0.0 < self.n_th <= 1.0:
            raise ValueError("n_th must be in (0, 1]")
        if self.sigma_c <= 0.0 or self.sigma_m <= 0.0:
            raise ValueError("sigma_c and sigma_m must be positive")


@dataclass
class Particle:
    """Read view of one particle (arrays are views into the state)."""

    c: np.ndarray
    grid: ShapeGrid
    log_w: float
    prop_mean: np.ndarray
    prop_cov: np.ndarray


class FilterState:
    """Stacked per-particle arrays; exclusively owned by one filter run."""

    __slots__ = (
        "positions",
        "grids",
        "partitions",
        "log_w",
        "prop_mean",
        "prop_cov",
        "geom",
        "paused",
        "step_count",
        "rng_tag",
        "prev_wrench",
        "weight_resets",
    )

    def __init__(self, positions, grids, partitions, log_w, prop_mean, prop_cov, geom, rng_tag):
        self.positions = positions
        self.grids = grids
        self.partitions = partitions
        self.log_w = log_w
        self.prop_mean = prop_mean
        self.prop_cov = prop_cov
        self.geom = geom
        self.paused = False
        self.step_count = 0
        self.rng_tag = rng_tag
        self.prev_wrench: Wrench | None = None
        self.weight_resets = 0

    @property
    def n(self) -> int:
        return len(self.partitions)

    def weights(self) -> np.ndarray:
        return np.exp(self.log_w)

    def particles(self) -> list[Particle]:
        return [
            Particle(
                c=self.positions[i],
                grid=ShapeGrid(self.geom, self.grids[i], self.partitions[i]),
                log_w=float(self.log_w[i]),
                prop_mean=self.prop_mean[i],
                prop_cov=self.prop_cov[i],
            )
            for i in range(self.n)
        ]


def _rng(seed: int, tag: int) -> np.random.Generator:
    key = ((seed & _MASK64) << 64) | (tag & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def _line_span_in_grid(line: LineOfAction, g: GridGeometry) -> tuple[float, float]:
    span = clip_alpha_to_box(line, (g.origin_x, g.origin_y), (g.x_max, g.y_max))
    if span is None:
        raise NoLineGridIntersection("action line misses the grid domain")
    return span


def _spread_positions_raw(
    g: GridGeometry, n: int, jitter_std: float, w: Wrench, rng: np.random.Generator
) -> np.ndarray:
    """Particle positions for a (re)initialization from one wrench.

    Uniform along the action line's in-grid segment plus isotropic jitter;
    uniform over the whole grid if the line misses it.
    """
    line = line_of_action(w)
    try:
        a_lo, a_hi = _line_span_in_grid(line, g)
        alphas = rng.uniform(a_lo, a_hi, n)
        pos = line.base[np.newaxis, :] + alphas[:, np.newaxis] * line.direction[np.newaxis, :]
    except NoLineGridIntersection:
        pos = np.column_stack(
            [rng.uniform(g.origin_x, g.x_max, n), rng.uniform(g.origin_y, g.y_max, n)]
        )
    return pos + jitter_std * rng.standard_normal((n, 2))


def _spread_positions(cfg: FilterConfig, w: Wrench, rng: np.random.Generator) -> np.ndarray:
    return _spread_positions_raw(cfg.grid_geom, cfg.n_particles, 3.0 * cfg.sigma_c, w, rng)


def init_filter(cfg: FilterConfig, first: Wrench) -> FilterState:
    """Fresh state from the first accepted wrench: zero grids, uniform weights."""
    if first.force_norm < cfg.contact_force_threshold:
        raise DegenerateWrench(
            f"|F| = {first.force_norm:.3g} N below contact threshold at t = {first.t}"
        )
    g = cfg.grid_geom
    n = cfg.n_particles
    rng = _rng(cfg.seed, 1)
    positions = _spread_positions(cfg, first, rng)
    jitter_var = (3.0 * cfg.sigma_c) ** 2
    prop_cov = np.zeros((n, 2, 2))
    prop_cov[:, 0, 0] = jitter_var
    prop_cov[:, 1, 1] = jitter_var
    state = FilterState(
        positions=positions,
        grids=np.zeros((n, g.ny, g.nx)),
        partitions=np.full(n, float(g.n_cells) * g.cell_area),
        log_w=np.full(n, -math.log(n)),
        prop_mean=positions.copy(),
        prop_cov=prop_cov,
        geom=g,
        rng_tag=2,
    )
    state.prev_wrench = first
    return state


def reinitialize(state: FilterState, w: Wrench, cfg: FilterConfig) -> FilterState:
    """Resume after a contact loss: new positions/weights/proposals, grids kept."""
    if w.force_norm < cfg.contact_force_threshold:
        raise DegenerateWrench("cannot resume below the contact threshold")
    n = state.n
    rng = _rng(cfg.seed, state.rng_tag)
    state.rng_tag += 1
    state.positions = _spread_positions(cfg, w, rng)
    state.prop_mean = state.positions.copy()
    jitter_var = (3.0 * cfg.sigma_c) ** 2
    state.prop_cov = np.zeros((n, 2, 2))
    state.prop_cov[:, 0, 0] = jitter_var
    state.prop_cov[:, 1, 1] = jitter_var
    state.log_w = np.full(n, -math.log(n))
    state.prev_wrench = w
    state.paused = False
    return state


_pools: dict[int, ThreadPoolExecutor] = {}


def _pool(workers: int) -> ThreadPoolExecutor:
    pool = _pools.get(workers)
    if pool is None:
        pool = ThreadPoolExecutor(max_workers=workers)
        _pools[workers] = pool
    return pool


def _apply_shape_updates(state: FilterState, prev: Wrench, cfg: FilterConfig) -> None:
    """Update every particle's grid from its previous position and force."""
    g = state.geom
    p = cfg.shape_params
    cx = np.ascontiguousarray(state.positions[:, 0])
    cy = np.ascontiguousarray(state.positions[:, 1])
    args = (
        prev.fx,
        prev.fy,
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
    n = state.n
    workers = max(1, cfg.workers)
    if workers == 1 or n < 2 * workers:
        kernels.impl.shape_update_batch(state.grids, state.partitions, cx, cy, *args)
        return
    bounds = [i * n // workers for i in range(workers + 1)]
    futures = [
        _pool(workers).submit(
            kernels.impl.shape_update_batch,
            state.grids[lo:hi],
            state.partitions[lo:hi],
            cx[lo:hi],
            cy[lo:hi],
            *args,
        )
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    for f in futures:
        f.result()


def _grid_values_at(state: FilterState, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-particle grid score at (x, y); 0 outside the grid."""
    g = state.geom
    ix = np.floor((x - g.origin_x) / g.cell_size).astype(np.int64)
    iy = np.floor((y - g.origin_y) / g.cell_size).astype(np.int64)
    inb = (ix >= 0) & (ix < g.nx) & (iy >= 0) & (iy < g.ny)
    out = np.zeros(len(x))
    rows = np.nonzero(inb)[0]
    out[rows] = state.grids[rows, iy[rows], ix[rows]]
    return out


def step(state: FilterState, w: Wrench, cfg: FilterConfig) -> FilterState:
    """Consume one accepted wrench; mutates and returns the state."""
    if state.paused:
        raise RuntimeError("step called on a paused filter; resume via reinitialize")
    if w.force_norm < cfg.contact_force_threshold:
        raise DegenerateWrench(
            f"|F| = {w.force_norm:.3g} N below contact threshold at t = {w.t}"
        )
    n = state.n

    # 1. grids move one step behind: updated from the previous wrench
    _apply_shape_updates(state, state.prev_wrench, cfg)

    # innovation gate: predicted moment vs measured, per particle
    var_c = cfg.sigma_c * cfg.sigma_c
    p11 = state.prop_cov[:, 0, 0] + var_c
    p12 = 0.5 * (state.prop_cov[:, 0, 1] + state.prop_cov[:, 1, 0])
    p22 = state.prop_cov[:, 1, 1] + var_c
    hx, hy = w.fy, -w.fx
    s_pred = (
        hx * hx * p11 + 2.0 * hx * hy * p12 + hy * hy * p22 + cfg.sigma_m * cfg.sigma_m
    )
    innov = w.mz - (state.prop_mean[:, 0] * w.fy - state.prop_mean[:, 1] * w.fx)
    if np.min(innov * innov / s_pred) > JUMP_INNOVATION_SIGMAS**2:
        # every hypothesis is implausible under the new moment: contact jumped
        logger.debug("likelihood collapse at t = %.4f; re-spreading on the new line", w.t)
        state.weight_resets += 1
        state.step_count += 1
        return reinitialize(state, w, cfg)

    # 2. per-particle Gaussian proposal from the unscented cycle
    mean, cov = ukf_propose_batch(
        state.prop_mean,
        state.prop_cov,
        w.fx,
        w.fy,
        w.mz,
        cfg.sigma_c,
        cfg.sigma_m,
        cfg.ukf_alpha,
        cfg.ukf_beta,
        cfg.ukf_kappa,
    )

    # 3. sample new positions
    rng = _rng(cfg.seed, state.rng_tag)
    state.rng_tag += 1
    z = rng.standard_normal((n, 2))
    l11, l21, l22 = cholesky_2x2(cov)
    new_x = mean[:, 0] + l11 * z[:, 0]
    new_y = mean[:, 1] + l21 * z[:, 0] + l22 * z[:, 1]

    # 4. importance weights in log space
    log_q = -0.5 * (z[:, 0] * z[:, 0] + z[:, 1] * z[:, 1]) - _LN_2PI - np.log(l11 * l22)
    resid = w.mz - (new_x * w.fy - new_y * w.fx)
    log_lik = (
        -0.5 * (resid / cfg.sigma_m) ** 2 - math.log(cfg.sigma_m) - 0.5 * _LN_2PI
    )
    dx = new_x - state.positions[:, 0]
    dy = new_y - state.positions[:, 1]
    log_motion = (
        -0.5 * (dx * dx + dy * dy) / (cfg.sigma_c * cfg.sigma_c)
        - _LN_2PI
        - 2.0 * math.log(cfg.sigma_c)
    )
    log_shape = _grid_values_at(state, new_x, new_y) - np.log(state.partitions)

    lw = state.log_w + log_lik + log_motion + log_shape - log_q
    lw[~np.isfinite(lw)] = -np.inf
    peak = np.max(lw)
    if not np.isfinite(peak):
        logger.warning("all particle weights underflowed at t = %.4f; reset to uniform", w.t)
        state.weight_resets += 1
        lw = np.full(n, -math.log(n))
    else:
        lw = lw - peak
        lw -= math.log(np.sum(np.exp(lw)))
    state.log_w = lw
    state.positions = np.column_stack([new_x, new_y])
    state.prop_mean = mean
    state.prop_cov = cov
    state.prev_wrench = w
    state.step_count += 1

    # 5. systematic resampling on effective-sample-size collapse
    if ess(state.weights()) < cfg.n_th * n:
        resample(state, rng)
    return state


def handle_contact_loss(state: FilterState, w: Wrench, cfg: FilterConfig) -> FilterState:
    """Pause on a sub-threshold wrench; grids and weights are retained."""
    if w.force_norm >= cfg.contact_force_threshold:
        raise ValueError("contact loss handler called with an in-contact wrench")
    state.paused = True
    return state


def process_wrench(state: FilterState | None, w: Wrench, cfg: FilterConfig) -> FilterState | None:
    """Gating dispatcher: init, step, pause, or resume as the stream dictates."""
    if w.force_norm >= cfg.contact_force_threshold:
        if state is None:
            return init_filter(cfg, w)
        if state.paused:
            return reinitialize(state, w, cfg)
        return step(state, w, cfg)
    if state is not None:
        handle_contact_loss(state, w, cfg)
    return state


def ess(weights: np.ndarray) -> float:
    """Effective sample size 1 / sum(w^2) of normalized weights."""
    return float(1.0 / np.sum(np.square(weights)))


def systematic_indices(weights: np.ndarray, n_out: int, offset: float) -> np.ndarray:
    """Ancestor indices of systematic resampling with one uniform offset."""
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    pos = (offset + np.arange(n_out)) / n_out
    return np.searchsorted(cum, pos, side="right")


def resample(state: FilterState, rng: np.random.Generator) -> FilterState:
    """Systematic resampling; survivors are deep-copied, weights reset to 1/N."""
    n = state.n
    w = state.weights()
    w = w / w.sum()
    idx = systematic_indices(w, n, float(rng.uniform()))
    state.positions = state.positions[idx]
    state.grids = state.grids[idx]
    state.partitions = state.partitions[idx]
    state.prop_mean = state.prop_mean[idx]
    state.prop_cov = state.prop_cov[idx]
    state.log_w = np.full(n, -math.log(n))
    return state


def estimate_position(state: FilterState) -> np.ndarray:
    """Weighted mean of particle positions."""
    return state.weights() @ state.positions


def estimate_shape(state: FilterState) -> ShapeGrid:
    """Cell-wise weighted mean of all particle grids."""
    values = np.einsum("n,nyx->yx", state.weights(), state.grids)
    return ShapeGrid(state.geom, values, compute_partition(values, state.geom.cell_area))
