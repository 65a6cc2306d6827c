# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels.

Semantics (inputs, outputs, skip rules) mirror ``coopsurface._kernels.pure``
exactly; the pure module is the reference implementation and the
backend-equivalence test holds the two to ~1e-12.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, hypot, sin, sqrt

cnp.import_array()

ctypedef double complex zdouble

cdef double FOUR_PI = 12.566370614359172


cdef inline zdouble _cexp_i(double x) noexcept nogil:
    return cos(x) + 1j * sin(x)


def damped_coupling_sum(points, b, q, eta, k0):
    """See pure.damped_coupling_sum."""
    cdef double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    cdef double bx = float(np.asarray(b).reshape(2)[0])
    cdef double by = float(np.asarray(b).reshape(2)[1])
    cdef double q0 = float(np.asarray(q).reshape(2)[0])
    cdef double q1 = float(np.asarray(q).reshape(2)[1])
    cdef double eta_c = eta, k0_c = k0
    cdef Py_ssize_t m = pts.shape[0], i
    cdef double px, py, dx, dy, rr, kr, inv, damp, qr, nx, ny
    cdef zdouble pf, c_id, c_nn, gxx, gxy, gyy, gzz, w
    cdef zdouble om_xx = 0, om_xy = 0, om_yy = 0, om_zz = 0
    cdef zdouble ga_xx = 0, ga_xy = 0, ga_yy = 0, ga_zz = 0
    cdef double pref_om = -3.0 * np.pi / k0
    cdef double pref_ga = 6.0 * np.pi / k0

    with nogil:
        for i in range(m):
            px = pts[i, 0]
            py = pts[i, 1]
            dx = px + bx
            dy = py + by
            rr = hypot(dx, dy)
            if rr <= 1e-12:
                continue
            kr = k0_c * rr
            inv = 1.0 / kr
            pf = _cexp_i(kr) / (FOUR_PI * rr)
            c_id = 1.0 + 1j * inv - inv * inv
            c_nn = -1.0 - 3j * inv + 3.0 * inv * inv
            nx = dx / rr
            ny = dy / rr
            gxx = pf * (c_id + c_nn * nx * nx)
            gyy = pf * (c_id + c_nn * ny * ny)
            gxy = pf * c_nn * nx * ny
            gzz = pf * c_id
            damp = exp(-eta_c * k0_c * rr)
            qr = q0 * px + q1 * py
            w = damp * _cexp_i(-qr)
            om_xx += w * gxx.real
            om_xy += w * gxy.real
            om_yy += w * gyy.real
            om_zz += w * gzz.real
            ga_xx += w * gxx.imag
            ga_xy += w * gxy.imag
            ga_yy += w * gyy.imag
            ga_zz += w * gzz.imag

    om = np.zeros((3, 3), dtype=np.complex128)
    ga = np.zeros((3, 3), dtype=np.complex128)
    om[0, 0] = pref_om * om_xx
    om[0, 1] = om[1, 0] = pref_om * om_xy
    om[1, 1] = pref_om * om_yy
    om[2, 2] = pref_om * om_zz
    ga[0, 0] = pref_ga * ga_xx
    ga[0, 1] = ga[1, 0] = pref_ga * ga_xy
    ga[1, 1] = pref_ga * ga_yy
    ga[2, 2] = pref_ga * ga_zz
    return om, ga


cdef inline void _green_block(double dx, double dy, double dz, double k0,
                              zdouble* out) noexcept nogil:
    """Row-major 3x3 Green's tensor into out[9]; zero block at zero length."""
    cdef double rr = sqrt(dx * dx + dy * dy + dz * dz)
    cdef double kr, inv, nx, ny, nz
    cdef zdouble pf, c_id, c_nn
    cdef Py_ssize_t a
    if rr < 1e-12:
        for a in range(9):
            out[a] = 0
        return
    kr = k0 * rr
    inv = 1.0 / kr
    pf = _cexp_i(kr) / (FOUR_PI * rr)
    c_id = 1.0 + 1j * inv - inv * inv
    c_nn = -1.0 - 3j * inv + 3.0 * inv * inv
    nx = dx / rr
    ny = dy / rr
    nz = dz / rr
    out[0] = pf * (c_id + c_nn * nx * nx)
    out[1] = pf * c_nn * nx * ny
    out[2] = pf * c_nn * nx * nz
    out[3] = out[1]
    out[4] = pf * (c_id + c_nn * ny * ny)
    out[5] = pf * c_nn * ny * nz
    out[6] = out[2]
    out[7] = out[5]
    out[8] = pf * (c_id + c_nn * nz * nz)


def assemble_coupling(positions, k0):
    """See pure.assemble_coupling."""
    cdef double[:, ::1] pos = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 3)
    cdef Py_ssize_t n = pos.shape[0], j, m, a, b
    out_arr = np.zeros((3 * n, 3 * n), dtype=np.complex128)
    cdef zdouble[:, ::1] out = out_arr
    cdef double k0_c = k0
    cdef double pref = -3.0 * np.pi / k0
    cdef zdouble blk[9]

    with nogil:
        for j in range(n):
            for m in range(n):
                if m == j:
                    continue
                _green_block(pos[j, 0] - pos[m, 0], pos[j, 1] - pos[m, 1],
                             pos[j, 2] - pos[m, 2], k0_c, blk)
                for a in range(3):
                    for b in range(3):
                        out[3 * j + a, 3 * m + b] = pref * blk[3 * a + b]
    return out_arr


def pair_xx_coupling(positions, k0):
    """See pure.pair_xx_coupling."""
    cdef double[:, ::1] pos = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 3)
    cdef Py_ssize_t n = pos.shape[0], j, m
    out_arr = np.zeros((n, n), dtype=np.complex128)
    cdef zdouble[:, ::1] out = out_arr
    cdef double k0_c = k0
    cdef double pref = -3.0 * np.pi / k0
    cdef zdouble blk[9]

    with nogil:
        for j in range(n):
            for m in range(n):
                if m == j:
                    continue
                _green_block(pos[j, 0] - pos[m, 0], pos[j, 1] - pos[m, 1],
                             pos[j, 2] - pos[m, 2], k0_c, blk)
                out[j, m] = pref * blk[0]
    return out_arr


def scattered_sum(positions, beta, pts, k0, mask_dist):
    """See pure.scattered_sum."""
    cdef double[:, ::1] pos = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 3)
    cdef zdouble[:, ::1] bet = np.ascontiguousarray(beta, dtype=np.complex128).reshape(-1, 3)
    cdef double[:, ::1] p = np.ascontiguousarray(pts, dtype=np.float64).reshape(-1, 3)
    cdef Py_ssize_t np_ = p.shape[0], ne = pos.shape[0], i, j, a, b
    field_arr = np.zeros((np_, 3), dtype=np.complex128)
    mask_arr = np.zeros(np_, dtype=np.uint8)
    cdef zdouble[:, ::1] field = field_arr
    cdef cnp.uint8_t[::1] mask = mask_arr
    cdef double k0_c = k0, md = mask_dist, dx, dy, dz
    cdef zdouble blk[9]
    cdef zdouble acc0, acc1, acc2

    with nogil:
        for i in range(np_):
            acc0 = 0
            acc1 = 0
            acc2 = 0
            for j in range(ne):
                dx = p[i, 0] - pos[j, 0]
                dy = p[i, 1] - pos[j, 1]
                dz = p[i, 2] - pos[j, 2]
                if sqrt(dx * dx + dy * dy + dz * dz) < md:
                    mask[i] = 1
                    break
                _green_block(dx, dy, dz, k0_c, blk)
                acc0 += blk[0] * bet[j, 0] + blk[1] * bet[j, 1] + blk[2] * bet[j, 2]
                acc1 += blk[3] * bet[j, 0] + blk[4] * bet[j, 1] + blk[5] * bet[j, 2]
                acc2 += blk[6] * bet[j, 0] + blk[7] * bet[j, 1] + blk[8] * bet[j, 2]
            if not mask[i]:
                field[i, 0] = acc0
                field[i, 1] = acc1
                field[i, 2] = acc2
    return field_arr, mask_arr.astype(bool)


def momentum_expectation(A, phases):
    """See pure.momentum_expectation."""
    cdef zdouble[:, ::1] Am = np.ascontiguousarray(A, dtype=np.complex128)
    cdef zdouble[::1] w = np.ascontiguousarray(phases, dtype=np.complex128).reshape(-1)
    cdef Py_ssize_t n = w.shape[0], j, m, a, b
    out_arr = np.zeros((3, 3), dtype=np.complex128)
    cdef zdouble[:, ::1] out = out_arr
    cdef zdouble wj, prod

    with nogil:
        for j in range(n):
            wj = w[j].real - 1j * w[j].imag
            for m in range(n):
                prod = wj * w[m]
                for a in range(3):
                    for b in range(3):
                        out[a, b] += prod * Am[3 * j + a, 3 * m + b]
    out_arr /= n
    return out_arr
