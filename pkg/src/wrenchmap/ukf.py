"""Unscented Kalman update for the scalar moment observation.

State is the 2D contact position with identity dynamics plus isotropic
process noise; the observation is the moment a contact at c would
produce under the current force.  The update runs the full unscented
transform (sigma points through the observation function); it never
exploits that the observation happens to be linear in c.  Everything is
vectorized over a batch of independent 2x2 problems.
"""

from __future__ import annotations

import math

import numpy as np

from wrenchmap.errors import CovarianceNotSPD

SPD_JITTER = 1e-12
SPD_ATTEMPTS = 10


def cholesky_2x2(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lower Cholesky factors of a batch of 2x2 SPD matrices.

    Repairs borderline inputs by symmetrizing and adding jitter
    (doubling from 1e-12, at most 10 attempts) before giving up.
    Returns (l11, l21, l22) arrays.
    """
    a = cov[:, 0, 0].copy()
    b = 0.5 * (cov[:, 0, 1] + cov[:, 1, 0])
    c = cov[:, 1, 1].copy()
    jitter = SPD_JITTER
    for _ in range(SPD_ATTEMPTS):
        with np.errstate(invalid="ignore", divide="ignore"):
            l11 = np.sqrt(a)
            l21 = b / l11
            rem = c - l21 * l21
        bad = ~((a > 0.0) & (rem > 0.0) & np.isfinite(l21))
        if not bad.any():
            return l11, l21, np.sqrt(rem)
        a = np.where(bad, a + jitter, a)
        c = np.where(bad, c + jitter, c)
        jitter *= 2.0
    raise CovarianceNotSPD("covariance repair failed after max attempts")


def ukf_propose_batch(
    mean: np.ndarray,
    cov: np.ndarray,
    fx: float,
    fy: float,
    mz: float,
    sigma_c: float,
    sigma_m: float,
    alpha: float,
    beta: float,
    kappa: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One predict + update cycle per batch row; returns (mean, cov).

    Predict adds sigma_c^2 I under identity dynamics; update folds in the
    scalar moment with noise sigma_m^2 via the unscented transform.
    """
    n = 2
    lam = alpha * alpha * (n + kappa) - n
    gamma = math.sqrt(n + lam)
    wm0 = lam / (n + lam)
    wmi = 0.5 / (n + lam)
    wc0 = wm0 + (1.0 - alpha * alpha + beta)
    wci = wmi

    p11 = cov[:, 0, 0] + sigma_c * sigma_c
    p12 = 0.5 * (cov[:, 0, 1] + cov[:, 1, 0])
    p22 = cov[:, 1, 1] + sigma_c * sigma_c
    pred = np.empty_like(cov)
    pred[:, 0, 0] = p11
    pred[:, 0, 1] = p12
    pred[:, 1, 0] = p12
    pred[:, 1, 1] = p22
    l11, l21, l22 = cholesky_2x2(pred)

    mx = mean[:, 0]
    my = mean[:, 1]
    # sigma-point offsets: +/- gamma * columns of the Cholesky factor
    d1x = gamma * l11
    d1y = gamma * l21
    d2y = gamma * l22

    def h(x, y):
        return x * fy - y * fx

    z0 = h(mx, my)
    u1 = h(mx + d1x, my + d1y) - z0
    u2 = h(mx - d1x, my - d1y) - z0
    u3 = h(mx, my + d2y) - z0
    u4 = h(mx, my - d2y) - z0
    ubar = wmi * ((u1 + u2) + (u3 + u4))  # the center point contributes 0

    dz0 = -ubar
    dz1 = u1 - ubar
    dz2 = u2 - ubar
    dz3 = u3 - ubar
    dz4 = u4 - ubar
    s_zz = (
        wc0 * dz0 * dz0
        + wci * ((dz1 * dz1 + dz2 * dz2) + (dz3 * dz3 + dz4 * dz4))
        + sigma_m * sigma_m
    )
    # cross covariance: center offset is zero, x offset of the second pair is zero
    c_xz = wci * d1x * (dz1 - dz2)
    c_yz = wci * (d1y * (dz1 - dz2) + d2y * (dz3 - dz4))

    kx = c_xz / s_zz
    ky = c_yz / s_zz
    innov = mz - (z0 + ubar)

    post_mean = np.empty_like(mean)
    post_mean[:, 0] = mx + kx * innov
    post_mean[:, 1] = my + ky * innov
    post = np.empty_like(cov)
    post[:, 0, 0] = p11 - s_zz * kx * kx
    post[:, 0, 1] = p12 - s_zz * kx * ky
    post[:, 1, 0] = post[:, 0, 1]
    post[:, 1, 1] = p22 - s_zz * ky * ky
    return post_mean, post


def ukf_propose(mean, cov, fx, fy, mz, sigma_c, sigma_m, alpha=1.0, beta=2.0, kappa=0.0):
    """Single-problem convenience wrapper around ukf_propose_batch."""
    m = np.asarray(mean, dtype=float).reshape(1, 2)
    p = np.asarray(cov, dtype=float).reshape(1, 2, 2)
    pm, pc = ukf_propose_batch(m, p, fx, fy, mz, sigma_c, sigma_m, alpha, beta, kappa)
    return pm[0], pc[0]
