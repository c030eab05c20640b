"""Deterministic planar contact simulator.

Generates wrench streams for a tool whose lower boundary is a single
valued curve y = h(x) on x in [0.1, 0.3] m, held above a contacting
environment.  Contact points jump to a fresh random surface location on
a fixed hold period; the contact force points into the tool within a
friction-cone angle of the surface normal, with a sinusoidal direction
fluctuation for the first t_fluct seconds and piecewise-constant random
directions afterwards.  Moments follow from the contact geometry, so the
stream is exactly consistent with the wrench model unless measurement
noise is enabled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from wrenchmap.errors import OutOfDomain

TOOL_X_MIN = 0.1
TOOL_X_MAX = 0.3

TOOL_KINDS = ("straight", "arch", "angular", "wavy", "knife")


@dataclass(frozen=True)
class ToolShape:
    """One of the five benchmark tool profiles on [0.1, 0.3] m."""

    kind: str
    x_min: float = TOOL_X_MIN
    x_max: float = TOOL_X_MAX

    def __post_init__(self):
        if self.kind not in TOOL_KINDS:
            raise ValueError(f"unknown tool kind {self.kind!r}; pick one of {TOOL_KINDS}")


def surface_height(shape: ToolShape, x: float) -> float:
    """Tool boundary height h(x); raises OutOfDomain outside the x-interval."""
    if x < shape.x_min or x > shape.x_max:
        raise OutOfDomain(f"x = {x} outside [{shape.x_min}, {shape.x_max}]")
    return _height(shape.kind, x)


def _height(kind: str, x: float) -> float:
    if kind == "straight":
        return 0.10
    if kind == "arch":
        return 0.10 + 0.05 * math.sin(math.pi * (x - 0.1) / 0.2)
    if kind == "angular":
        return 0.10 + 0.05 * (1.0 - abs(x - 0.2) / 0.1)
    if kind == "wavy":
        return 0.10 + 0.02 * math.sin(10.0 * math.pi * (x - 0.1))
    # knife: linear rise with a rounded tip over the last tenth of the span
    t = (x - 0.1) / 0.2
    over = max(0.0, t - 0.9)
    return 0.10 + 0.08 * (t - 2.5 * over * over)


def surface_heights(shape: ToolShape, xs: np.ndarray) -> np.ndarray:
    """Vectorized h(x) for in-domain sample arrays (no domain check)."""
    xs = np.asarray(xs, dtype=float)
    kind = shape.kind
    if kind == "straight":
        return np.full_like(xs, 0.10)
    if kind == "arch":
        return 0.10 + 0.05 * np.sin(np.pi * (xs - 0.1) / 0.2)
    if kind == "angular":
        return 0.10 + 0.05 * (1.0 - np.abs(xs - 0.2) / 0.1)
    if kind == "wavy":
        return 0.10 + 0.02 * np.sin(10.0 * np.pi * (xs - 0.1))
    t = (xs - 0.1) / 0.2
    over = np.maximum(0.0, t - 0.9)
    return 0.10 + 0.08 * (t - 2.5 * over * over)


def _slope(kind: str, x: float) -> float:
    if kind == "straight":
        return 0.0
    if kind == "arch":
        return 0.05 * (math.pi / 0.2) * math.cos(math.pi * (x - 0.1) / 0.2)
    if kind == "angular":
        return 0.5 if x < 0.2 else -0.5
    if kind == "wavy":
        return 0.02 * 10.0 * math.pi * math.cos(10.0 * math.pi * (x - 0.1))
    t = (x - 0.1) / 0.2
    over = max(0.0, t - 0.9)
    return 0.4 * (1.0 - 5.0 * over)


def surface_normal_angle(shape: ToolShape, x: float) -> float:
    """Angle of the inward (into-tool) normal, measured like the force angle.

    The force convention is f = A (sin th, cos th), so th = 0 means
    straight up; the inward normal of y = h(x) is (-h'(x), 1) normalized.
    At the angular shape's kink the two one-sided normal angles are
    averaged.
    """
    if x < shape.x_min or x > shape.x_max:
        raise OutOfDomain(f"x = {x} outside [{shape.x_min}, {shape.x_max}]")
    if shape.kind == "angular" and x == 0.2:
        return 0.5 * (math.atan2(-0.5, 1.0) + math.atan2(0.5, 1.0))
    return math.atan2(-_slope(shape.kind, x), 1.0)


@dataclass(frozen=True)
class ForceScript:
    """Contact/force schedule parameters."""

    theta0: float = math.pi / 6     # direction fluctuation amplitude (rad)
    t_fluct: float = 10.0           # fluctuation phase length (s)
    t_end: float = 20.0             # stream length (s)
    hold: float = 1.0               # contact / amplitude / direction redraw period (s)
    amp_lo: float = 1.0             # N
    amp_hi: float = 3.0             # N
    dt: float = 0.01                # s
    seed: int = 0
    gap: float = 0.0                # zero-force gap after each contact change (s)
    noise_sigma_f: float = 0.0      # optional per-axis force noise (N)
    noise_sigma_m: float = 0.0      # optional moment noise (N*m)

    def __post_init__(self):
        if not 0.0 <= self.theta0 < math.pi / 2:
            raise ValueError("theta0 must be in [0, pi/2)")
        if self.dt <= 0.0 or self.hold <= 0.0:
            raise ValueError("dt and hold must be positive")


@dataclass
class SimSeries:
    """Simulated wrench stream plus ground truth, one row per sample.

    Gap rows (no contact) carry zero force/moment and NaN truth.
    """

    t: np.ndarray
    fx: np.ndarray
    fy: np.ndarray
    mz: np.ndarray
    cx: np.ndarray
    cy: np.ndarray
    theta_perp: np.ndarray

    def __len__(self) -> int:
        return len(self.t)


def simulate(shape: ToolShape, script: ForceScript) -> SimSeries:
    """Generate the wrench stream; bit-identical for identical inputs."""
    rng = np.random.Generator(np.random.Philox(key=script.seed & ((1 << 64) - 1)))
    n = int(round(script.t_end / script.dt))
    t = np.arange(n) * script.dt
    out = SimSeries(
        t=t,
        fx=np.zeros(n),
        fy=np.zeros(n),
        mz=np.zeros(n),
        cx=np.full(n, np.nan),
        cy=np.full(n, np.nan),
        theta_perp=np.full(n, np.nan),
    )
    contact_x = math.nan
    amp = math.nan
    theta_const = math.nan
    hold_idx = -1
    for k in range(n):
        tk = t[k]
        idx = int(math.floor(tk / script.hold + 1e-9))
        if idx != hold_idx:
            hold_idx = idx
            contact_x = rng.uniform(shape.x_min, shape.x_max)
            if tk < script.t_fluct:
                amp = rng.uniform(script.amp_lo, script.amp_hi)
            else:
                theta_const = rng.uniform(-math.pi / 6, math.pi / 6)
        t_in_hold = tk - idx * script.hold
        if script.gap > 0.0 and idx >= 1 and t_in_hold < script.gap:
            continue  # contact released while the touch point moves
        theta_perp = surface_normal_angle(shape, contact_x)
        if tk < script.t_fluct:
            theta_f = script.theta0 * math.sin(4.0 * math.pi * tk) + theta_perp
        else:
            theta_f = theta_const + theta_perp
        fx = amp * math.sin(theta_f)
        fy = amp * math.cos(theta_f)
        cx = contact_x
        cy = _height(shape.kind, contact_x)
        mz = cx * fy - cy * fx
        if script.noise_sigma_f > 0.0 or script.noise_sigma_m > 0.0:
            noise = rng.standard_normal(3)
            fx += script.noise_sigma_f * noise[0]
            fy += script.noise_sigma_f * noise[1]
            mz += script.noise_sigma_m * noise[2]
        out.fx[k] = fx
        out.fy[k] = fy
        out.mz[k] = mz
        out.cx[k] = cx
        out.cy[k] = cy
        out.theta_perp[k] = theta_perp
    return out
