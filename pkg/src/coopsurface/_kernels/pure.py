"""Pure numpy kernel implementations.

Reference semantics for the compiled extension; selected automatically when
the extension is unavailable (or forced via COOPSURFACE_BACKEND=pure).
Inputs are contiguous float64/complex128 arrays; outputs are freshly
allocated. Row chunking keeps peak temporary memory bounded for large
arrays.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 1 << 21  # points per slab in lattice sums
_ROW_CHUNK = 256  # emitter rows per slab in pairwise assembly


def _inplane_green_entries(dx, dy, rr, k0):
    """Unique Green's tensor entries for in-plane displacements (z = 0).

    Returns (gxx, gxy, gyy, gzz); xz and yz vanish identically in-plane.
    """
    kr = k0 * rr
    pf = np.exp(1j * kr) / (4.0 * np.pi * rr)
    inv = 1.0 / kr
    c_id = 1.0 + 1j * inv - inv * inv
    c_nn = -1.0 - 3.0j * inv + 3.0 * inv * inv
    nx = dx / rr
    ny = dy / rr
    gxx = pf * (c_id + c_nn * nx * nx)
    gyy = pf * (c_id + c_nn * ny * ny)
    gxy = pf * c_nn * nx * ny
    gzz = pf * c_id
    return gxx, gxy, gyy, gzz


def damped_coupling_sum(points, b, q, eta, k0):
    """Damped, phase-weighted lattice sum of coupling blocks.

    Accumulates sum_r exp(-i q . r) exp(-eta k0 |r + b|) K(r + b) over the
    Bravais vectors ``r`` in ``points`` (offset ``b`` selects the sublattice
    pair), separately for K = omega (real part channel) and K = gamma
    (imaginary part channel). Terms with |r + b| ~ 0 are skipped.

    Returns (omega, gamma) as complex (3, 3) arrays.
    """
    points = np.ascontiguousarray(points, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(b, dtype=np.float64).reshape(2)
    q = np.asarray(q, dtype=np.float64).reshape(2)
    om = np.zeros((3, 3), dtype=np.complex128)
    ga = np.zeros((3, 3), dtype=np.complex128)
    pref_om = -3.0 * np.pi / k0
    pref_ga = 6.0 * np.pi / k0
    for lo in range(0, len(points), _CHUNK):
        pts = points[lo : lo + _CHUNK]
        dx = pts[:, 0] + b[0]
        dy = pts[:, 1] + b[1]
        rr = np.hypot(dx, dy)
        keep = rr > 1e-12
        if not keep.all():
            pts, dx, dy, rr = pts[keep], dx[keep], dy[keep], rr[keep]
        if len(rr) == 0:
            continue
        w = np.exp(-1j * (pts[:, 0] * q[0] + pts[:, 1] * q[1]) - eta * k0 * rr)
        gxx, gxy, gyy, gzz = _inplane_green_entries(dx, dy, rr, k0)
        for (i, j), g in (((0, 0), gxx), ((0, 1), gxy), ((1, 1), gyy), ((2, 2), gzz)):
            om[i, j] += pref_om * np.sum(w * g.real)
            ga[i, j] += pref_ga * np.sum(w * g.imag)
    om[1, 0] = om[0, 1]
    ga[1, 0] = ga[0, 1]
    return om, ga


def _pair_green_blocks(dpos, k0):
    """Full 3x3 Green's blocks for an array of 3D displacements (m, 3).

    Zero-length displacements yield zero blocks (caller handles self terms).
    """
    rr = np.linalg.norm(dpos, axis=-1)
    self_mask = rr < 1e-12
    rr_safe = np.where(self_mask, 1.0, rr)
    kr = k0 * rr_safe
    pf = np.exp(1j * kr) / (4.0 * np.pi * rr_safe)
    inv = 1.0 / kr
    c_id = 1.0 + 1j * inv - inv * inv
    c_nn = -1.0 - 3.0j * inv + 3.0 * inv * inv
    n = dpos / rr_safe[..., None]
    blocks = (
        c_id[..., None, None] * np.eye(3)
        + c_nn[..., None, None] * n[..., :, None] * n[..., None, :]
    ) * pf[..., None, None]
    blocks[self_mask] = 0.0
    return blocks


def assemble_coupling(positions, k0):
    """Pairwise coupling matrix with 3x3 blocks -(3 pi / k0) G(r_j - r_m).

    Diagonal blocks are left zero; the caller adds the per-emitter diagonal
    (detuning, self decay, magnetic coupling). Returns (3N, 3N) complex.
    """
    pos = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 3)
    n = len(pos)
    out = np.zeros((3 * n, 3 * n), dtype=np.complex128)
    out4 = out.reshape(n, 3, n, 3)
    pref = -3.0 * np.pi / k0
    for lo in range(0, n, _ROW_CHUNK):
        hi = min(lo + _ROW_CHUNK, n)
        d = pos[lo:hi, None, :] - pos[None, :, :]
        out4[lo:hi, :, :, :] = pref * _pair_green_blocks(d, k0).transpose(0, 2, 1, 3)
    return out


def pair_xx_coupling(positions, k0):
    """x-x component of the pairwise coupling, (N, N) complex, zero diagonal."""
    pos = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 3)
    n = len(pos)
    out = np.zeros((n, n), dtype=np.complex128)
    pref = -3.0 * np.pi / k0
    for lo in range(0, n, _ROW_CHUNK):
        hi = min(lo + _ROW_CHUNK, n)
        d = pos[lo:hi, None, :] - pos[None, :, :]
        rr = np.linalg.norm(d, axis=-1)
        self_mask = rr < 1e-12
        rr_safe = np.where(self_mask, 1.0, rr)
        kr = k0 * rr_safe
        pf = np.exp(1j * kr) / (4.0 * np.pi * rr_safe)
        inv = 1.0 / kr
        c_id = 1.0 + 1j * inv - inv * inv
        c_nn = -1.0 - 3.0j * inv + 3.0 * inv * inv
        nx = d[..., 0] / rr_safe
        gxx = pf * (c_id + c_nn * nx * nx)
        gxx[self_mask] = 0.0
        out[lo:hi, :] = pref * gxx
    return out


def scattered_sum(positions, beta, pts, k0, mask_dist):
    """Sum_j G(p - r_j) beta_j at each field point p.

    Returns (field, mask) where field is (P, 3) complex and mask flags points
    closer than ``mask_dist`` to any emitter (their field values are
    meaningless and set to zero).
    """
    pos = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 3)
    beta = np.ascontiguousarray(beta, dtype=np.complex128).reshape(-1, 3)
    pts = np.ascontiguousarray(pts, dtype=np.float64).reshape(-1, 3)
    p = len(pts)
    field = np.zeros((p, 3), dtype=np.complex128)
    mask = np.zeros(p, dtype=bool)
    chunk = max(1, _CHUNK // max(1, len(pos)))
    for lo in range(0, p, chunk):
        hi = min(lo + chunk, p)
        d = pts[lo:hi, None, :] - pos[None, :, :]
        rr = np.linalg.norm(d, axis=-1)
        near = rr < mask_dist
        mask[lo:hi] = near.any(axis=1)
        blocks = _pair_green_blocks(d, k0)
        blocks[near] = 0.0
        field[lo:hi] = np.einsum("pjab,jb->pa", blocks, beta)
    field[mask] = 0.0
    return field, mask


def momentum_expectation(A, phases):
    """Normalized momentum-state expectation of a block matrix.

    A is (3N, 3N) with 3x3 emitter blocks, phases is the length-N vector
    w_m = exp(-i q . r_m). Returns (1/N) sum_{jm} conj(w_j) A_jm w_m as a
    3x3 complex matrix.
    """
    phases = np.ascontiguousarray(phases, dtype=np.complex128).reshape(-1)
    n = len(phases)
    A4 = A.reshape(n, 3, n, 3)
    right = np.einsum("jamb,m->jab", A4, phases)
    return np.einsum("j,jab->ab", phases.conj(), right) / n
