"""Free-space dyadic Green's tensor and pairwise dipole couplings.

Units: Gamma_0 = 1, lambda = 1, so k0 = 2 pi. The dipole moment never
appears on its own; every coupling carries the combination
mu_0 w0^2 d^2 = 3 pi Gamma_0 / k0.

Three tensor forms are provided: the explicit real-space tensor with its
1/R, 1/R^2, 1/R^3 terms, the 1/R far field, and the plane-wave (angular
spectrum) form used for reciprocal-space sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BranchSingularityError, SingularArgumentError

__all__ = [
    "K0",
    "GAMMA0",
    "ComplexTensor3",
    "CouplingBlock",
    "green_real",
    "green_far",
    "green_fourier",
    "coupling_pair",
]

K0 = 2.0 * np.pi
GAMMA0 = 1.0

# Coupling prefactors in the fixed unit system.
OMEGA_PREFACTOR = -3.0 * np.pi * GAMMA0 / K0
GAMMA_PREFACTOR = 6.0 * np.pi * GAMMA0 / K0

ComplexTensor3 = np.ndarray  # (3, 3) complex alias for annotations


@dataclass(frozen=True)
class CouplingBlock:
    """Coherent (omega) and dissipative (gamma) 3x3 coupling blocks.

    Both are real symmetric; gamma tends to Gamma_0 * identity as the
    separation goes to zero.
    """

    omega: np.ndarray
    gamma: np.ndarray


def green_real(R, exclude_delta: bool = True) -> ComplexTensor3:
    """Explicit real-space Green's tensor at displacement ``R`` (3-vector).

    The contact (delta-function) term is never included for R != 0, which is
    the only reachable case here; ``exclude_delta`` is accepted for interface
    symmetry and has no effect away from the origin. R = 0 raises; callers
    that need the regular R -> 0 imaginary part should use
    :func:`coupling_pair`.
    """
    R = np.asarray(R, dtype=float).reshape(3)
    r = np.linalg.norm(R)
    if r == 0.0:
        raise SingularArgumentError("Green's tensor is singular at R = 0")
    kr = K0 * r
    n = R / r
    phase = np.exp(1j * kr) / (4.0 * np.pi * r)
    # coefficients of identity and of the dyadic n (x) n
    c_id = 1.0 + 1j / kr - 1.0 / kr**2
    c_nn = -1.0 - 3.0j / kr + 3.0 / kr**2
    return phase * (c_id * np.eye(3) + c_nn * np.outer(n, n))


def green_far(R) -> ComplexTensor3:
    """Far-field (1/R) limit: transverse projector times a spherical wave."""
    R = np.asarray(R, dtype=float).reshape(3)
    r = np.linalg.norm(R)
    if r == 0.0:
        raise SingularArgumentError("far field undefined at R = 0")
    n = R / r
    return np.exp(1j * K0 * r) / (4.0 * np.pi * r) * (np.eye(3) - np.outer(n, n))


def _qz(q_norm2: float) -> complex:
    """Out-of-plane wavenumber sqrt(k0^2 - q^2), continued as +i sqrt(q^2 - k0^2)."""
    rad = K0 * K0 - q_norm2
    if rad > 0.0:
        return complex(np.sqrt(rad))
    return 1j * np.sqrt(-rad)


def green_fourier(q, Z: float) -> ComplexTensor3:
    """In-plane Fourier (plane-wave) Green's tensor at transverse q, height Z.

    Implements (i / 8 pi^2) (1 - v v / k0^2) e^{i q_z |Z|} / q_z with
    v = (q_x, q_y, sgn(Z) q_z); for |q| > k0 the root is continued onto the
    decaying (evanescent) branch. Exactly on the light cone the 1/q_z branch
    point makes the expression singular.
    """
    q = np.asarray(q, dtype=float).reshape(2)
    q2 = float(q @ q)
    if abs(q2 - K0 * K0) < 1e-12 * K0 * K0:
        raise BranchSingularityError("|q| = k0 is a branch point of the angular spectrum")
    qz = _qz(q2)
    sign = 1.0 if Z >= 0.0 else -1.0
    v = np.array([q[0], q[1], sign * qz], dtype=complex)
    tensor = np.eye(3, dtype=complex) - np.outer(v, v) / K0**2
    return 1j / (8.0 * np.pi**2) * tensor * np.exp(1j * qz * abs(Z)) / qz


def coupling_pair(r) -> CouplingBlock:
    """Coherent/dissipative coupling blocks for emitter separation ``r``.

    For r = 0 the self-coupling is returned: the divergent self-shift is
    dropped and the decay block is Gamma_0 times the identity. Otherwise
    omega = -(3 pi Gamma_0 / k0) Re G(r) and gamma = (6 pi Gamma_0 / k0) Im G(r).
    """
    r = np.asarray(r, dtype=float).reshape(3)
    if np.linalg.norm(r) < 1e-12:
        return CouplingBlock(omega=np.zeros((3, 3)), gamma=GAMMA0 * np.eye(3))
    g = green_real(r)
    return CouplingBlock(omega=OMEGA_PREFACTOR * g.real, gamma=GAMMA_PREFACTOR * g.imag)
