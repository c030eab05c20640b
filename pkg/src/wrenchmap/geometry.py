"""Planar wrench algebra.

A single force/torque sample constrains the contact point to a line (the
line of action).  This module provides the moment model, the line
construction, residuals against it, and the double-cone membership test
used by the grid update rule.  All quantities are SI: meters, newtons,
newton-meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from wrenchmap.errors import DegenerateWrench

# Below this force magnitude (N) no line of action is defined; chosen well
# under the 0.5 N contact gate so gating, not this epsilon, decides.
FORCE_EPSILON = 1e-6


@dataclass(frozen=True)
class Wrench:
    """One timestamped planar wrench: force (fx, fy) in N, moment mz in N*m."""

    t: float
    fx: float
    fy: float
    mz: float

    @property
    def force(self) -> np.ndarray:
        return np.array([self.fx, self.fy])

    @property
    def force_norm(self) -> float:
        return math.hypot(self.fx, self.fy)


@dataclass(frozen=True)
class LineOfAction:
    """Points base + alpha * direction, alpha in alpha_range (None = unbounded)."""

    base: np.ndarray
    direction: np.ndarray  # unit vector
    alpha_range: tuple[float, float] | None = field(default=None)

    def point_at(self, alpha: float) -> np.ndarray:
        return self.base + alpha * self.direction


def predict_moment(c, fx: float, fy: float) -> float:
    """Planar cross product c x F: the moment a contact at c would produce."""
    return c[0] * fy - c[1] * fx


def moment_residual(c, w: Wrench) -> float:
    """Measured moment minus predicted moment; zero iff c lies on the action line."""
    return w.mz - predict_moment(c, w.fx, w.fy)


def line_of_action(w: Wrench) -> LineOfAction:
    """Contact-point candidates consistent with one wrench.

    base is the point of the line closest to the origin; direction follows
    the force.  Raises DegenerateWrench when the force is too small for the
    construction to be meaningful.
    """
    f2 = w.fx * w.fx + w.fy * w.fy
    if f2 <= FORCE_EPSILON * FORCE_EPSILON:
        raise DegenerateWrench(f"|F| = {math.sqrt(f2):.3e} N at t = {w.t}")
    base = np.array([w.mz * w.fy / f2, -w.mz * w.fx / f2])
    fn = math.sqrt(f2)
    direction = np.array([w.fx / fn, w.fy / fn])
    return LineOfAction(base=base, direction=direction)


def point_in_double_cone(p, apex, axis, theta: float) -> bool:
    """True iff the angle between (p - apex) and the axis line is <= theta.

    The cone is double-sided: both the axis direction and its opposite
    count.  The apex itself is inside.  Requires 0 < theta < pi/2 and a
    nonzero axis.
    """
    ax, ay = float(axis[0]), float(axis[1])
    an = math.hypot(ax, ay)
    if an <= 0.0:
        raise ValueError("cone axis must be nonzero")
    if not 0.0 < theta < math.pi / 2:
        raise ValueError("cone half-angle must be in (0, pi/2)")
    rx = float(p[0]) - float(apex[0])
    ry = float(p[1]) - float(apex[1])
    r2 = rx * rx + ry * ry
    if r2 == 0.0:
        return True
    dot = rx * ax + ry * ay
    # |cos angle| >= cos theta, squared to avoid the sign of the axis.
    return dot * dot >= r2 * (an * an) * math.cos(theta) ** 2


def clip_alpha_to_box(line: LineOfAction, lo, hi) -> tuple[float, float] | None:
    """Alpha interval for which the line stays inside the axis-aligned box.

    Returns None when the line misses the box (Liang-Barsky clipping).
    """
    a_lo, a_hi = -math.inf, math.inf
    for k in range(2):
        b = float(line.base[k])
        d = float(line.direction[k])
        if d == 0.0:
            if b < lo[k] or b > hi[k]:
                return None
            continue
        t0 = (lo[k] - b) / d
        t1 = (hi[k] - b) / d
        if t0 > t1:
            t0, t1 = t1, t0
        a_lo = max(a_lo, t0)
        a_hi = min(a_hi, t1)
    if a_lo > a_hi:
        return None
    return a_lo, a_hi
