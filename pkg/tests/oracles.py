"""Independent oracles the tests check library results against.

The quadrature oracle integrates the angular-reduced plane-wave
representation of the free-space dyadic Green's function,

  G(R) = (i/8pi^2) int d^2q (1 - v v / k0^2) e^{i q.rho} e^{i q_z |Z|} / q_z,
  v = (q_x, q_y, sgn(Z) q_z),  q_z = sqrt(k0^2 - q^2) (+i sqrt(q^2 - k0^2)),

so it shares no code with the closed real-space form it validates. With rho
along x the angular integral reduces to Bessel kernels; the evanescent tail
at Z = 0 only oscillates (amplitude ~ q^{3/2}), so it is segmented at the
Bessel zeros and the alternating partial sums are accelerated with Wynn's
epsilon algorithm.
"""

import numpy as np
from scipy import integrate, special

from coopsurface import greens
from coopsurface.realspace import power_balance, solve_linear

K0 = 2.0 * np.pi


def _kernel(entry, q, qz, rho, sgn):
    x = q * rho
    if entry == "xx":
        return 2 * np.pi * special.j0(x) - (q**2 / K0**2) * np.pi * (
            special.j0(x) - special.jv(2, x))
    if entry == "yy":
        return 2 * np.pi * special.j0(x) - (q**2 / K0**2) * np.pi * (
            special.j0(x) + special.jv(2, x))
    if entry == "zz":
        return (q**2 / K0**2) * 2 * np.pi * special.j0(x)
    if entry == "xz":
        return -(sgn * qz * q / K0**2) * 2j * np.pi * special.j1(x)
    raise ValueError(entry)


def _cquad(f, a, b):
    re = integrate.quad(lambda t: f(t).real, a, b, limit=400)[0]
    im = integrate.quad(lambda t: f(t).imag, a, b, limit=400)[0]
    return re + 1j * im


def _wynn_epsilon(partial):
    """Sequence limit via Wynn's epsilon table (even columns estimate it)."""
    n = len(partial)
    e_prev = np.zeros(n + 1, complex)
    e_cur = np.array(partial, complex)
    best = e_cur[-1]
    for k in range(1, n):
        m = n - k
        e_next = np.empty(m, complex)
        for i in range(m):
            d = e_cur[i + 1] - e_cur[i]
            if abs(d) < 1e-300 or not np.isfinite(d):
                return best
            e_next[i] = e_prev[i + 1] + 1.0 / d
        e_prev, e_cur = e_cur, e_next
        if k % 2 == 0 and m:
            best = e_cur[-1]
    return best


def weyl_green_entry(entry, rho, Z, n_segments=40):
    """One Cartesian entry of G at displacement (rho, 0, Z), rho > 0."""
    absZ = abs(Z)
    sgn = 1.0 if Z >= 0 else -1.0

    def f_prop(t):
        q = K0 * np.sin(t)
        qz = K0 * np.cos(t)
        return q * _kernel(entry, q, qz, rho, sgn) * np.exp(1j * qz * absZ)

    total = _cquad(f_prop, 0.0, np.pi / 2)

    if absZ > 1e-12:
        def f_evan(s):
            q = K0 * np.cosh(s)
            qz = 1j * K0 * np.sinh(s)
            return (q / 1j) * _kernel(entry, q, qz, rho, sgn) * np.exp(
                -K0 * np.sinh(s) * absZ)

        s_max = np.arcsinh(700.0 / (K0 * absZ))
        total += _cquad(f_evan, 0.0, s_max)
    else:
        if entry == "xz":
            return 0j  # one-sided sgn factor; exactly zero in the plane

        def f_evan_q(q):
            qz = 1j * np.sqrt(q * q - K0 * K0)
            return (q / qz) * _kernel(entry, q, qz, rho, sgn)

        def f_evan_s(s):
            q = K0 * np.cosh(s)
            qz = 1j * K0 * np.sinh(s)
            return (q / 1j) * _kernel(entry, q, qz, rho, sgn)

        # integrable 1/sqrt edge at q = k0: open with the cosh substitution,
        # then sum Bessel-zero segments
        zeros = special.jn_zeros(0, n_segments + 8) / rho
        zeros = zeros[zeros > K0 * 1.0001]
        total += _cquad(f_evan_s, 0.0, np.arccosh(zeros[0] / K0))
        segs = [_cquad(f_evan_q, a, b)
                for a, b in zip(zeros[:n_segments], zeros[1:n_segments + 1])]
        total += _wynn_epsilon(list(np.cumsum(segs)))

    return 1j / (8 * np.pi**2) * total


def explicit_coupling(positions):
    """Pairwise coupling matrix assembled entry by entry from green_real."""
    n = len(positions)
    m = np.zeros((3 * n, 3 * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            g = greens.green_real(np.asarray(positions[i]) - positions[j])
            m[3 * i:3 * i + 3, 3 * j:3 * j + 3] = -(3.0 * np.pi / K0) * g
    return m


def single_saturation_steady(delta, eta, t_max=400.0, dt=0.001):
    """Uncoupled saturation steady state by plain forward-Euler integration."""
    beta, beta_z = 0.0 + 0.0j, -1.0
    steps = int(t_max / dt)
    for _ in range(steps):
        db = -(0.5 - 1j * delta) * beta - 1j * eta * beta_z
        dbz = -(beta_z + 1.0) + 4.0 * np.imag(np.conj(eta) * beta)
        beta, beta_z = beta + dt * db, beta_z + dt * dbz
    return beta, beta_z


def solve_checked(emitters, drive, tol=1e-6):
    """Steady state with the radiated-power balance asserted on every call."""
    state = solve_linear(emitters, drive)
    scattered, extinction, rel = power_balance(emitters, state, drive)
    assert rel < tol, (
        f"optical theorem violated: scattered {scattered} vs extinction "
        f"{extinction} (rel {rel:.2e})")
    return state
