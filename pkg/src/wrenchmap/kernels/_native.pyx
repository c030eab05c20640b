# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid-update kernel.

Semantics match wrenchmap.kernels.numpy_backend exactly; this version
only visits cells near the raised disk and the lowered cone instead of
scanning the whole grid.  Candidate regions are conservative supersets
(widened by a cell or two); membership is always decided by the same
exact predicate the fallback evaluates, so grid values stay
bit-identical across backends.
"""

from libc.math cimport exp, floor, sqrt, tan


cdef struct Acc:
    double delta


cdef inline void _dec_range(double[:, ::1] v, Py_ssize_t j0, Py_ssize_t j1,
                            Py_ssize_t i, double xc, double cx, double cy,
                            double oy, double cell, double ux, double uy,
                            double tan2, double d2_th, double ds_dec,
                            double s_lo, Acc* acc) noexcept nogil:
    cdef Py_ssize_t j
    cdef double yc, px, py, d2, a, b, old, new
    px = xc - cx
    for j in range(j0, j1 + 1):
        yc = oy + (j + 0.5) * cell
        py = yc - cy
        d2 = px * px + py * py
        a = px * ux + py * uy
        b = py * ux - px * uy
        if b * b <= tan2 * (a * a) and d2 >= d2_th:
            old = v[j, i]
            new = old - ds_dec
            if new < s_lo:
                new = s_lo
            acc.delta += exp(new) - exp(old)
            v[j, i] = new


cdef double _update_one(double[:, ::1] v, double cx, double cy,
                        double ux, double uy, double tan_t, double tan2,
                        double d_th, double d2_th,
                        double ox, double oy, double cell,
                        double ds_inc, double ds_dec,
                        double s_lo, double s_hi) noexcept nogil:
    cdef Py_ssize_t ny = v.shape[0]
    cdef Py_ssize_t nx = v.shape[1]
    cdef Py_ssize_t i, j, i0, i1, j0, j1, ja, jb
    cdef double xc, yc, px, py, d2, old, new
    cdef double qa, base_t, half, r0, r1, y_lo, y_hi
    cdef bint full
    cdef Acc acc
    acc.delta = 0.0

    # Criterion 1: raised disk around the contact (bounding box + margin).
    i0 = <Py_ssize_t>floor((cx - d_th - ox) / cell) - 1
    i1 = <Py_ssize_t>floor((cx + d_th - ox) / cell) + 1
    j0 = <Py_ssize_t>floor((cy - d_th - oy) / cell) - 1
    j1 = <Py_ssize_t>floor((cy + d_th - oy) / cell) + 1
    if i0 < 0:
        i0 = 0
    if j0 < 0:
        j0 = 0
    if i1 > nx - 1:
        i1 = nx - 1
    if j1 > ny - 1:
        j1 = ny - 1
    for j in range(j0, j1 + 1):
        yc = oy + (j + 0.5) * cell
        py = yc - cy
        for i in range(i0, i1 + 1):
            xc = ox + (i + 0.5) * cell
            px = xc - cx
            d2 = px * px + py * py
            if d2 < d2_th:
                old = v[j, i]
                new = old + ds_inc
                if new > s_hi:
                    new = s_hi
                acc.delta += exp(new) - exp(old)
                v[j, i] = new

    # Criterion 2: lowered double cone.  Per column, the cone condition
    # b^2 <= tan^2(theta) * a^2 is quadratic in the y offset with leading
    # coefficient qa = ux^2 - tan^2 * uy^2 and discriminant 4 px^2 tan^2:
    # qa > 0 selects y between the roots, qa < 0 outside them.
    qa = ux * ux - tan2 * uy * uy
    for i in range(nx):
        xc = ox + (i + 0.5) * cell
        px = xc - cx
        full = False
        if qa < 1e-12 and qa > -1e-12:
            full = True
        elif px == 0.0:
            full = True
        else:
            base_t = px * ux * uy * (1.0 + tan2)
            half = px * tan_t
            if half < 0.0:
                half = -half
            r0 = (base_t - half) / qa
            r1 = (base_t + half) / qa
            if r0 > r1:
                r0, r1 = r1, r0
            if qa > 0.0:
                # single band: y offset in [r0, r1]
                j0 = <Py_ssize_t>floor((r0 + cy - oy) / cell - 0.5) - 1
                j1 = <Py_ssize_t>floor((r1 + cy - oy) / cell - 0.5) + 2
                if j0 < 0:
                    j0 = 0
                if j1 > ny - 1:
                    j1 = ny - 1
                if j0 <= j1:
                    _dec_range(v, j0, j1, i, xc, cx, cy, oy, cell, ux, uy,
                               tan2, d2_th, ds_dec, s_lo, &acc)
                continue
            else:
                # two rays: y offset <= r0 or >= r1
                ja = <Py_ssize_t>floor((r0 + cy - oy) / cell - 0.5) + 2
                jb = <Py_ssize_t>floor((r1 + cy - oy) / cell - 0.5) - 1
                if ja > ny - 1:
                    ja = ny - 1
                if jb < 0:
                    jb = 0
                if jb <= ja + 1:
                    full = True
                else:
                    if ja >= 0:
                        _dec_range(v, 0, ja, i, xc, cx, cy, oy, cell, ux, uy,
                                   tan2, d2_th, ds_dec, s_lo, &acc)
                    if jb <= ny - 1:
                        _dec_range(v, jb, ny - 1, i, xc, cx, cy, oy, cell, ux, uy,
                                   tan2, d2_th, ds_dec, s_lo, &acc)
                    continue
        if full:
            _dec_range(v, 0, ny - 1, i, xc, cx, cy, oy, cell, ux, uy,
                       tan2, d2_th, ds_dec, s_lo, &acc)

    return acc.delta


def shape_update_batch(double[:, :, ::1] values, double[::1] partition,
                       double[::1] cx, double[::1] cy,
                       double fx, double fy,
                       double origin_x, double origin_y, double cell,
                       double d_th, double theta_th,
                       double ds_inc, double ds_dec,
                       double s_lo, double s_hi, double cell_area):
    """Apply one grid update per particle, in place (see numpy_backend)."""
    cdef Py_ssize_t n = values.shape[0]
    cdef double fn = sqrt(fx * fx + fy * fy)
    cdef double ux = fx / fn
    cdef double uy = fy / fn
    cdef double tan_t = tan(theta_th)
    cdef double tan2 = tan_t * tan_t
    cdef double d2_th = d_th * d_th
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            partition[i] += _update_one(
                values[i], cx[i], cy[i], ux, uy, tan_t, tan2, d_th, d2_th,
                origin_x, origin_y, cell, ds_inc, ds_dec, s_lo, s_hi,
            ) * cell_area
