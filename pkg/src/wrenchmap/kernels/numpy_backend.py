"""Pure NumPy implementation of the grid-update kernel.

Reference implementation: evaluates the membership predicates over the
full grid with the same elementary operations (and operand order) as the
compiled kernel, so grid values match it bit for bit.
"""

import math

import numpy as np


def shape_update_batch(
    values,
    partition,
    cx,
    cy,
    fx,
    fy,
    origin_x,
    origin_y,
    cell,
    d_th,
    theta_th,
    ds_inc,
    ds_dec,
    s_lo,
    s_hi,
    cell_area,
):
    """Apply one grid update per particle, in place.

    values: (n, ny, nx) scores; partition: (n,) cached partition sums;
    cx, cy: (n,) previous contact estimates; (fx, fy): previous force.
    """
    n, ny, nx = values.shape
    # sqrt(fx^2 + fy^2), not hypot: matches the compiled kernel bit for bit
    fn = math.sqrt(fx * fx + fy * fy)
    ux = fx / fn
    uy = fy / fn
    tan_t = math.tan(theta_th)
    tan2 = tan_t * tan_t
    d2_th = d_th * d_th
    xs = origin_x + (np.arange(nx) + 0.5) * cell
    ys = origin_y + (np.arange(ny) + 0.5) * cell
    for i in range(n):
        rx = xs - cx[i]
        ry = ys - cy[i]
        d2 = rx * rx + (ry * ry)[:, None]
        a = rx * ux + (ry * uy)[:, None]
        b = (ry * ux)[:, None] - rx * uy
        near = d2 < d2_th
        cone = (b * b <= tan2 * (a * a)) & (d2 >= d2_th)
        v = values[i]
        old_near = v[near]
        new_near = np.minimum(old_near + ds_inc, s_hi)
        old_cone = v[cone]
        new_cone = np.maximum(old_cone - ds_dec, s_lo)
        delta = (
            np.sum(np.exp(new_near))
            - np.sum(np.exp(old_near))
            + np.sum(np.exp(new_cone))
            - np.sum(np.exp(old_cone))
        )
        v[near] = new_near
        v[cone] = new_cone
        partition[i] += delta * cell_area
